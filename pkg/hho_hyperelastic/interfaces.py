"""Интерфейсы для мониторов шагов нагружения."""

from __future__ import annotations

from abc import ABC, abstractmethod

from hho_hyperelastic.progress import LoadStepProgress


class StepMonitor(ABC):
    """Абстрактный базовый класс для мониторов шагов нагружения.

    Монитор получает запись о каждой попытке шага нагрузки (сошедшейся,
    разделенной пополам или проваленной) от решателя Ньютона.

    Пример использования:
        >>> class PrintMonitor(StepMonitor):
        ...     def __init__(self):
        ...         self.steps = {}
        ...     def record_step(self, run_name, progress):
        ...         self.steps.setdefault(run_name, []).append(progress)
        ...     def get_steps(self, run_name):
        ...         return list(self.steps.get(run_name, []))
        ...     def clear(self, run_name):
        ...         self.steps.pop(run_name, None)
    """

    @abstractmethod
    def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
        """Сохраняет информацию о шаге нагружения.

        Args:
            run_name: Имя расчета
            progress: Информация о шаге

        Raises:
            MonitorError: Если не удалось сохранить шаг
        """
        ...

    @abstractmethod
    def get_steps(self, run_name: str) -> list[LoadStepProgress]:
        """Возвращает записанные шаги расчета в порядке записи.

        Args:
            run_name: Имя расчета

        Returns:
            Список шагов (пустой, если расчет неизвестен)

        Raises:
            MonitorError: Если не удалось прочитать шаги
        """
        ...

    @abstractmethod
    def clear(self, run_name: str) -> None:
        """Удаляет записанные шаги расчета.

        Args:
            run_name: Имя расчета

        Raises:
            MonitorError: Если не удалось очистить записи
        """
        ...

    def total_iterations(self, run_name: str) -> int:
        """Суммарное число итераций Ньютона по всем попыткам шагов.

        Args:
            run_name: Имя расчета

        Returns:
            Число итераций
        """
        return sum(step.iterations for step in self.get_steps(run_name))
