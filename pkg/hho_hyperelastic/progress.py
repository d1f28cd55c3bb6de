"""Модели данных для отслеживания шагов нагружения."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any


class StepStatus(Enum):
    """Статус шага нагружения.

    Attributes:
        PENDING: Шаг ожидает решения
        IN_PROGRESS: Итерации Ньютона выполняются
        CONVERGED: Итерации сошлись
        FAILED: Итерации не сошлись, шаг прерван
        BISECTED: Шаг не сошелся и был разделен пополам
    """

    PENDING = "pending"
    IN_PROGRESS = "in_progress"
    CONVERGED = "converged"
    FAILED = "failed"
    BISECTED = "bisected"


@dataclass
class LoadStepProgress:
    """Информация о шаге нагружения.

    Attributes:
        step: Порядковый номер попытки шага (с нуля)
        load_factor: Целевой коэффициент нагрузки шага
        status: Текущий статус шага
        residual_history: Нормы невязки по итерациям (начиная с начальной)
        iterations: Число выполненных итераций Ньютона
        started_at: Время начала шага
        completed_at: Время завершения шага
        error_message: Сообщение об ошибке (если шаг не сошелся)
        metadata: Дополнительные метаданные шага
    """

    step: int
    load_factor: float
    status: StepStatus = StepStatus.PENDING
    residual_history: list[float] = field(default_factory=list)
    iterations: int = 0
    started_at: datetime | None = None
    completed_at: datetime | None = None
    error_message: str | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        """Валидация данных после инициализации."""
        if self.step < 0:
            raise ValueError("step cannot be negative")
        if not 0.0 <= self.load_factor <= 1.0 + 1e-12:
            raise ValueError("load_factor must lie in [0, 1]")
        if self.iterations < 0:
            raise ValueError("iterations cannot be negative")

    @property
    def final_residual(self) -> float | None:
        """Последняя норма невязки или None, если итераций не было."""
        return self.residual_history[-1] if self.residual_history else None

    @property
    def contraction_ratios(self) -> list[float]:
        """Отношения r_{n+1} / r_n соседних норм невязки."""
        history = self.residual_history
        return [
            history[i + 1] / history[i]
            for i in range(len(history) - 1)
            if history[i] > 0.0
        ]
