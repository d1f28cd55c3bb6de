"""Типы и протоколы для hho-hyperelastic."""

from __future__ import annotations

from collections.abc import Callable
from typing import Protocol

import numpy as np

from hho_hyperelastic.progress import LoadStepProgress

# Векторное поле X -> u(X): массив точек (n, d) -> значения (n, d)
VectorField = Callable[[np.ndarray], np.ndarray]
# Тензорное поле X -> grad u(X): массив точек (n, d) -> значения (n, d, d)
TensorField = Callable[[np.ndarray], np.ndarray]


class StepMonitorProtocol(Protocol):
    """Протокол для мониторов шагов нагружения.

    Определяет интерфейс для всех реализаций StepMonitor,
    позволяя использовать структурную типизацию без циклических зависимостей.
    """

    def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
        """Сохраняет информацию о завершенном шаге нагружения.

        Args:
            run_name: Имя расчета
            progress: Информация о шаге

        Raises:
            MonitorError: Если не удалось сохранить шаг
        """
        ...

    def get_steps(self, run_name: str) -> list[LoadStepProgress]:
        """Возвращает записанные шаги расчета в порядке записи.

        Args:
            run_name: Имя расчета

        Returns:
            Список шагов (пустой, если расчет неизвестен)
        """
        ...

    def clear(self, run_name: str) -> None:
        """Удаляет записанные шаги расчета.

        Args:
            run_name: Имя расчета
        """
        ...
