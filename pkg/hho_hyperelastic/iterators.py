"""Итераторы для продолжения по параметру нагрузки."""

from __future__ import annotations

from collections.abc import Iterator

from hho_hyperelastic.exceptions import ConvergenceError


class LoadStepper:
    """Итератор по коэффициентам нагрузки с делением шага при неудаче.

    Выдает целевой коэффициент нагрузки очередной попытки. Вызывающий
    код сообщает результат через accept() или reject(); при reject()
    текущее приращение делится пополам, а исходная цель остается в
    очереди и будет достигнута следующими шагами. Без вызова accept()
    или reject() итератор выдает ту же цель повторно.

    Attributes:
        load_steps: Число равномерных шагов нагрузки
        bisection_limit: Максимальное число делений одного приращения
        converged_factor: Последний принятый коэффициент нагрузки
        bisections: Общее число выполненных делений
        attempts: Общее число выданных попыток
    """

    def __init__(self, load_steps: int, bisection_limit: int = 8) -> None:
        """Инициализирует итератор.

        Args:
            load_steps: Число равномерных шагов нагрузки
            bisection_limit: Лимит делений шага (по умолчанию 8)

        Raises:
            ValueError: Если load_steps < 1 или bisection_limit < 0
        """
        if load_steps < 1:
            raise ValueError("load_steps must be at least 1")
        if bisection_limit < 0:
            raise ValueError("bisection_limit cannot be negative")

        self.load_steps = load_steps
        self.bisection_limit = bisection_limit
        self.converged_factor = 0.0
        self.bisections = 0
        self.attempts = 0
        self._increment = 1.0 / load_steps
        # Цели хранятся в обратном порядке: вершина стека - ближайшая
        self._targets = [(i + 1) / load_steps for i in reversed(range(load_steps))]
        self._targets[0] = 1.0

    def __iter__(self) -> Iterator[float]:
        """Возвращает сам итератор."""
        return self

    def __next__(self) -> float:
        """Возвращает целевой коэффициент нагрузки следующей попытки.

        Raises:
            StopIteration: Если достигнут коэффициент 1
        """
        if not self._targets:
            raise StopIteration
        self.attempts += 1
        return self._targets[-1]

    @property
    def current_target(self) -> float | None:
        """Цель текущей попытки или None, если нагружение завершено."""
        return self._targets[-1] if self._targets else None

    @property
    def finished(self) -> bool:
        return not self._targets

    def accept(self) -> None:
        """Принимает текущую цель как сошедшееся состояние."""
        if not self._targets:
            raise RuntimeError("No pending load step to accept")
        self.converged_factor = self._targets.pop()

    def reject(self) -> float:
        """Делит текущее приращение нагрузки пополам.

        Returns:
            Новая (промежуточная) цель

        Raises:
            ConvergenceError: Если лимит делений исчерпан
        """
        if not self._targets:
            raise RuntimeError("No pending load step to reject")
        target = self._targets[-1]
        half = 0.5 * (target - self.converged_factor)
        if half < self._increment / 2**self.bisection_limit * (1.0 - 1e-9):
            raise ConvergenceError(
                f"Load step {self.converged_factor:.6g} -> {target:.6g} failed after "
                f"{self.bisection_limit} bisections",
                load_factor=target,
            )
        midpoint = self.converged_factor + half
        self._targets.append(midpoint)
        self.bisections += 1
        return midpoint
