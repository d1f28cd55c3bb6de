"""Ядро hho-hyperelastic: решение по уровням сетки и исследование сходимости."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from hho_hyperelastic.assembly import DiscreteProblem
from hho_hyperelastic.basis import GradSpace
from hho_hyperelastic.cases import CaseDefinition, CaseRegistry
from hho_hyperelastic.config import MethodConfig, NewtonConfig, RunConfig
from hho_hyperelastic.export import export_solution, output_path, write_error_csv
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.logging import get_logger
from hho_hyperelastic.postproc import (
    DiscreteField,
    ErrorReport,
    ErrorSample,
    compute_errors,
    derived_fields,
)
from hho_hyperelastic.solver import SolveResult, newton_solve
from hho_hyperelastic.validators import BoundaryRoleValidator, ConfigValidator

logger = get_logger("study")

REFERENCE_REFINEMENTS = 2


def build_case(config: RunConfig, registry: CaseRegistry | None = None) -> CaseDefinition:
    """Создает случай по конфигурации с переопределенными mu, lambda и законом.

    Raises:
        ConfigError: Если случай, параметры или закон некорректны
    """
    registry = registry or CaseRegistry.default()
    ConfigValidator().validate(config, registry)
    case = registry.create(config.case, mu=config.mu, lam=config.lam)
    return case.with_law(config.law)


def expected_orders(method: MethodConfig) -> tuple[int, int]:
    """Ожидаемые порядки (перемещение, градиент) на гладком решении."""
    k = method.k
    if method.stabilized:
        return k + 2, k + 1
    if method.grad_space is GradSpace.RTN:
        return k + 2, k + 1
    return k + 1, k


def run_name(case: CaseDefinition, method: MethodConfig, level: int | str) -> str:
    return f"{case.name}_{method.label}_k{method.k}_{level}"


@dataclass
class LevelResult:
    """Результат решения на одном уровне сетки.

    Attributes:
        level: Уровень сетки (или имя файла сетки)
        problem: Дискретная задача
        solve: Результат метода Ньютона
        sample: Ошибки (если есть эталон)
        min_jacobian: Минимальный J^h по ячейкам
        files: Записанные файлы
    """

    level: int | str
    problem: DiscreteProblem
    solve: SolveResult
    sample: ErrorSample | None = None
    min_jacobian: float = 1.0
    files: list[Path] = field(default_factory=list)


@dataclass
class StudyResult:
    """Результат исследования сходимости.

    Attributes:
        case: Имя случая
        method: Параметры дискретизации
        report: Таблица ошибок (пустая, если эталона нет)
        levels: Результаты по уровням в порядке измельчения
        csv_path: Путь к таблице ошибок (если записана)
    """

    case: str
    method: MethodConfig
    report: ErrorReport
    levels: list[LevelResult] = field(default_factory=list)
    csv_path: Path | None = None

    @property
    def files(self) -> list[Path]:
        files = [f for level in self.levels for f in level.files]
        return files + ([self.csv_path] if self.csv_path else [])


def solve_level(
    case: CaseDefinition,
    method: MethodConfig,
    newton: NewtonConfig,
    level: int,
    mesh_path: str | Path | None = None,
    monitor: StepMonitor | None = None,
) -> LevelResult:
    """Строит сетку уровня level (или читает файл) и решает задачу.

    Raises:
        MeshError: Если сетку не удалось построить или прочитать
        ConfigError: Если роли границ некорректны
        ConvergenceError: Если метод Ньютона не сошелся
    """
    mesh = case.mesh(level, mesh_path)
    BoundaryRoleValidator().validate(mesh, case)
    label: int | str = Path(mesh_path).stem if mesh_path is not None else level
    problem = DiscreteProblem(mesh, case, method)
    result = newton_solve(problem, newton, monitor=monitor, run_name=run_name(case, method, label))
    return LevelResult(level=label, problem=problem, solve=result)


def fine_mesh_reference(
    case: CaseDefinition,
    method: MethodConfig,
    newton: NewtonConfig,
    level: int,
    refinements: int = REFERENCE_REFINEMENTS,
) -> DiscreteField:
    """Эталон: решение на сетке, измельченной refinements раз относительно level."""
    fine = level * 2**refinements
    logger.info(f"{case.name}: computing fine-mesh reference at level {fine}")
    result = solve_level(case, method, newton, fine)
    return DiscreteField(result.problem, result.solve.state)


class ConvergenceStudy:
    """Решение случая на последовательности сеток с таблицей ошибок.

    Эталоном служит точное решение случая, а при его отсутствии для
    случаев с self_reference - решение на сетке в 4 раза мельче самой
    мелкой сетки исследования.

    Пример использования:
        >>> study = ConvergenceStudy(manufactured_case(), MethodConfig.shho(1), NewtonConfig())
        >>> result = study.run([2, 4])
        >>> result.report.orders_u
        [None, 2.9...]

    Attributes:
        case: Расчетный случай
        method: Параметры дискретизации
        newton: Параметры метода Ньютона
        out_dir: Каталог результатов (None: файлы не пишутся)
        write_vtk: Записывать ли поля VTK
        monitor: Монитор шагов нагружения
    """

    def __init__(
        self,
        case: CaseDefinition,
        method: MethodConfig,
        newton: NewtonConfig,
        out_dir: str | Path | None = None,
        write_vtk: bool = False,
        monitor: StepMonitor | None = None,
    ) -> None:
        self.case = case
        self.method = method
        self.newton = newton
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.write_vtk = write_vtk
        self.monitor = monitor

    @classmethod
    def from_config(
        cls,
        config: RunConfig,
        registry: CaseRegistry | None = None,
        monitor: StepMonitor | None = None,
    ) -> ConvergenceStudy:
        """Создает исследование по конфигурации расчета.

        Raises:
            ConfigError: Если конфигурация некорректна
        """
        return cls(
            build_case(config, registry),
            config.method,
            config.newton,
            out_dir=config.out_dir,
            write_vtk=config.write_vtk,
            monitor=monitor,
        )

    def _reference(self, levels: list[int]) -> DiscreteField | None:
        if self.case.has_exact or not self.case.self_reference:
            return None
        return fine_mesh_reference(self.case, self.method, self.newton, max(levels))

    def run(self, levels: list[int] | tuple[int, ...], mesh_path: str | Path | None = None) -> StudyResult:
        """Решает задачу на всех уровнях по очереди.

        Args:
            levels: Уровни сетки в порядке измельчения
            mesh_path: Файл сетки (тогда решается одна задача на этой сетке)

        Returns:
            StudyResult с таблицей ошибок и результатами уровней

        Raises:
            HHOError: Ошибки построения сетки, конфигурации и решателя
        """
        ConfigValidator().check_order(self.case, self.method.k)
        levels = [0] if mesh_path is not None else list(levels)
        reference = self._reference(levels) if mesh_path is None else None
        report = ErrorReport(reference="exact" if self.case.has_exact else "fine-mesh")
        result = StudyResult(case=self.case.name, method=self.method, report=report)

        for level in levels:
            level_result = solve_level(
                self.case, self.method, self.newton, level, mesh_path, self.monitor
            )
            problem, state = level_result.problem, level_result.solve.state
            sample = None
            if self.case.has_exact:
                sample = compute_errors(
                    problem, state, self.case.exact_displacement, self.case.exact_gradient
                )
            elif reference is not None:
                sample = compute_errors(problem, state, reference.displacement, reference.gradient)
            if sample is not None:
                sample = replace(
                    sample, newton_iters=level_result.solve.iterations, level=int(level)
                )
                level_result.sample = sample
                report.add(sample)
                logger.info(
                    f"{self.case.name} level {level}: h = {sample.h:.4e}, "
                    f"err_u = {sample.err_u:.4e}, err_G = {sample.err_G:.4e}"
                )
            level_result.min_jacobian = float(np.min(derived_fields(problem, state).jacobian))
            logger.info(
                f"{self.case.name} level {level_result.level}: "
                f"{level_result.solve.iterations} Newton iteration(s), "
                f"{level_result.solve.bisections} bisection(s), min J^h = {level_result.min_jacobian:.4f}"
            )
            if self.out_dir is not None and self.write_vtk:
                path = output_path(
                    self.out_dir, self.case.name, self.method.label, self.method.k, level_result.level, "vtk"
                )
                level_result.files.append(export_solution(problem, state, path))
            result.levels.append(level_result)

        if self.out_dir is not None and report.samples:
            last = result.levels[-1].level
            path = output_path(self.out_dir, self.case.name, self.method.label, self.method.k, last, "csv")
            result.csv_path = write_error_csv(report, path)
        return result
