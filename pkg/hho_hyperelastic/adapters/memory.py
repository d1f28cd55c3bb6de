"""Memory адаптер для монитора шагов нагружения."""

from __future__ import annotations

from hho_hyperelastic.exceptions import MonitorError
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.progress import LoadStepProgress


class MemoryStepMonitor(StepMonitor):
    """Монитор шагов нагружения, хранящий данные в памяти.

    Используется в тестах и в исследованиях сходимости, где история
    итераций нужна только до конца процесса.

    Attributes:
        _storage: Словарь шагов (имя расчета -> список LoadStepProgress)
    """

    def __init__(self) -> None:
        """Инициализирует монитор."""
        self._storage: dict[str, list[LoadStepProgress]] = {}

    def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
        """Сохраняет информацию о шаге нагружения.

        Args:
            run_name: Имя расчета
            progress: Информация о шаге

        Raises:
            MonitorError: Если имя расчета пустое
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        self._storage.setdefault(run_name, []).append(progress)

    def get_steps(self, run_name: str) -> list[LoadStepProgress]:
        """Возвращает копию списка записанных шагов.

        Args:
            run_name: Имя расчета

        Returns:
            Список шагов в порядке записи

        Raises:
            MonitorError: Если имя расчета пустое
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        return list(self._storage.get(run_name, []))

    def clear(self, run_name: str) -> None:
        """Удаляет шаги расчета.

        Args:
            run_name: Имя расчета

        Raises:
            MonitorError: Если имя расчета пустое
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        self._storage.pop(run_name, None)
