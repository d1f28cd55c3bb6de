"""Тесты для интерфейсов мониторов шагов нагружения."""

from __future__ import annotations

import pytest

from hho_hyperelastic.adapters.memory import MemoryStepMonitor
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.progress import LoadStepProgress
from hho_hyperelastic.types import StepMonitorProtocol


class ListMonitor(StepMonitor):
    """Минимальная реализация монитора для проверки интерфейса."""

    def __init__(self) -> None:
        self.steps: dict[str, list[LoadStepProgress]] = {}

    def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
        self.steps.setdefault(run_name, []).append(progress)

    def get_steps(self, run_name: str) -> list[LoadStepProgress]:
        return list(self.steps.get(run_name, []))

    def clear(self, run_name: str) -> None:
        self.steps.pop(run_name, None)


class TestStepMonitorABC:
    """Тесты для абстрактного класса StepMonitor."""

    def test_cannot_instantiate(self) -> None:
        """Тест проверяет, что нельзя создать экземпляр StepMonitor ABC."""
        with pytest.raises(TypeError):
            StepMonitor()  # type: ignore[abstract]

    def test_requires_all_methods(self) -> None:
        """Тест проверяет, что подкласс должен реализовать все методы."""

        class IncompleteMonitor(StepMonitor):
            def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
                pass

            def get_steps(self, run_name: str) -> list[LoadStepProgress]:
                return []

        with pytest.raises(TypeError):
            IncompleteMonitor()  # type: ignore[abstract]

    def test_total_iterations(
        self, converged_step: LoadStepProgress, bisected_step: LoadStepProgress
    ) -> None:
        """Тест: итерации суммируются по всем попыткам шагов."""
        monitor = ListMonitor()
        monitor.record_step("run", bisected_step)
        monitor.record_step("run", converged_step)
        assert monitor.total_iterations("run") == 3
        assert monitor.total_iterations("other") == 0


class TestStepMonitorProtocol:
    """Тесты для протокола StepMonitorProtocol."""

    @pytest.mark.parametrize("factory", [ListMonitor, MemoryStepMonitor])
    def test_implementations_match_protocol(self, factory: type) -> None:
        """Тест: реализации монитора удовлетворяют протоколу."""
        monitor: StepMonitorProtocol = factory()
        assert callable(monitor.record_step)
        assert callable(monitor.get_steps)
        assert callable(monitor.clear)
