"""Решение глобальной системы и метод Ньютона с пошаговым нагружением."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, onenormest, splu

from hho_hyperelastic.assembly import CondensedSystem, DiscreteProblem, DiscreteState
from hho_hyperelastic.config import NewtonConfig
from hho_hyperelastic.exceptions import (
    ConvergenceError,
    FactorizationError,
    LinearSolveError,
    NonPositiveJacobianError,
)
from hho_hyperelastic.iterators import LoadStepper
from hho_hyperelastic.logging import get_logger
from hho_hyperelastic.progress import LoadStepProgress, StepStatus
from hho_hyperelastic.types import StepMonitorProtocol

logger = get_logger("newton")

DENSE_CONDITION_LIMIT = 2000


def solve_sparse(matrix: sparse.spmatrix, rhs: np.ndarray) -> np.ndarray:
    """Решает разреженную систему прямым методом (LU-разложение SuperLU).

    Raises:
        LinearSolveError: Если матрица вырождена или решение не конечно
    """
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] == 0:
        return np.zeros(0)
    try:
        solution = splu(sparse.csc_matrix(matrix)).solve(rhs)
    except RuntimeError as e:
        raise LinearSolveError(f"Sparse factorization failed: {e}") from e
    if not np.all(np.isfinite(solution)):
        raise LinearSolveError("Sparse solve produced non-finite values")
    scale = max(float(np.linalg.norm(rhs)), 1e-300)
    defect = float(np.linalg.norm(matrix @ solution - rhs)) / scale
    if defect > 1e-10:
        logger.warning(f"Linear solve relative residual {defect:.2e}")
    return solution


def solve_linear(system: CondensedSystem) -> np.ndarray:
    """Приращение свободных неизвестных граней.

    Raises:
        LinearSolveError: Если глобальная матрица вырождена
    """
    return solve_sparse(system.matrix, system.rhs)


def expand_increment(
    problem: DiscreteProblem, system: CondensedSystem, free_increment: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Полное приращение: грани Дирихле, свободные грани и восстановленные ячейки.

    Returns:
        Кортеж (приращения ячеек (n_cells, n_cell), приращения граней)
    """
    faces = system.dirichlet_increment.copy()
    faces[system.free_dofs] = free_increment
    cells = np.array(
        [block.recover(faces[problem.cell_face_dofs(c)]) for c, block in enumerate(system.blocks)]
    )
    return cells, faces


def condensed_increment(
    problem: DiscreteProblem, state: DiscreteState, load_factor: float
) -> tuple[np.ndarray, np.ndarray]:
    """Приращение Ньютона через статическую конденсацию."""
    system = problem.assemble(state, load_factor)
    return expand_increment(problem, system, solve_linear(system))


def monolithic_increment(
    problem: DiscreteProblem, state: DiscreteState, load_factor: float
) -> tuple[np.ndarray, np.ndarray]:
    """Приращение Ньютона без конденсации (все неизвестные ячеек и граней).

    Используется для проверки точности статической конденсации.

    Returns:
        Кортеж (приращения ячеек (n_cells, n_cell), приращения граней)
    """
    n_cells, n_cell = problem.mesh.n_cells, problem.n_cell
    offset = n_cells * n_cell
    size = offset + problem.n_face_dofs
    rows, cols, vals = [], [], []
    residual = np.zeros(size)
    for cell in range(n_cells):
        R, K = problem.cell_system(state, cell, load_factor)
        dofs = np.concatenate(
            [cell * n_cell + np.arange(n_cell), offset + problem.cell_face_dofs(cell)]
        )
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(K.ravel())
        residual[dofs] += R
    K_global = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    ).tocsr()

    known = offset + problem.dirichlet_dofs
    unknown = np.setdiff1d(np.arange(size), known)
    increment = np.zeros(size)
    target = problem.dirichlet_values(load_factor)
    increment[known] = target[problem.dirichlet_dofs] - state.face_coeffs[problem.dirichlet_dofs]
    rhs = -residual[unknown] - K_global[unknown][:, known] @ increment[known]
    increment[unknown] = solve_sparse(K_global[unknown][:, unknown], rhs)
    return increment[:offset].reshape(n_cells, n_cell), increment[offset:]


def stationarity_defect(problem: DiscreteProblem, state: DiscreteState, load_factor: float) -> float:
    """Норма невязки, проверенной на всех неизвестных ячеек и свободных граней."""
    face_residual = np.zeros(problem.n_face_dofs)
    cell_sq = 0.0
    for cell, R in enumerate(problem.residuals(state, load_factor)):
        cell_sq += float(np.sum(R[: problem.n_cell] ** 2))
        face_residual[problem.cell_face_dofs(cell)] += R[problem.n_cell :]
    return float(np.sqrt(cell_sq + np.sum(face_residual[problem.free_dofs] ** 2)))


def estimate_condition_number(matrix: sparse.spmatrix) -> float:
    """Оценка числа обусловленности глобальной матрицы.

    Для небольших систем считается точно (2-норма), для больших
    оценивается 1-норма через onenormest для A и A^{-1}.
    """
    n = matrix.shape[0]
    if n == 0:
        return 1.0
    if n <= DENSE_CONDITION_LIMIT:
        return float(np.linalg.cond(matrix.toarray()))
    lu = splu(sparse.csc_matrix(matrix))
    inverse = LinearOperator(
        matrix.shape, matvec=lu.solve, rmatvec=lambda x: lu.solve(x, trans="T"), dtype=float
    )
    return float(onenormest(sparse.csc_matrix(matrix)) * onenormest(inverse))


class StepNotConverged(ConvergenceError):
    """Итерации Ньютона одного шага не сошлись за max_iters."""


@dataclass
class SolveResult:
    """Результат решения задачи с пошаговым нагружением.

    Attributes:
        state: Итоговое дискретное состояние
        steps: Все попытки шагов нагрузки в порядке выполнения
        load_factor: Достигнутый коэффициент нагрузки
        bisections: Число делений шага пополам
    """

    state: DiscreteState
    steps: list[LoadStepProgress] = field(default_factory=list)
    load_factor: float = 0.0
    bisections: int = 0

    @property
    def iterations(self) -> int:
        """Суммарное число итераций Ньютона по всем попыткам."""
        return sum(step.iterations for step in self.steps)

    @property
    def converged_steps(self) -> list[LoadStepProgress]:
        return [step for step in self.steps if step.status is StepStatus.CONVERGED]


def newton_iterations(
    problem: DiscreteProblem,
    state: DiscreteState,
    load_factor: float,
    newton: NewtonConfig,
    progress: LoadStepProgress | None = None,
) -> DiscreteState:
    """Итерации Ньютона одного шага нагрузки.

    Критерий остановки ||R|| <= max(abs_tol, rel_tol ||R_0||), где R_0 -
    невязка в начале шага с учетом приращения данных Дирихле.

    Args:
        problem: Дискретная задача
        state: Начальное приближение (сошедшееся состояние предыдущего шага)
        load_factor: Целевой коэффициент нагрузки
        newton: Параметры метода
        progress: Запись шага, в которую пишется история невязки

    Returns:
        Сошедшееся состояние

    Raises:
        StepNotConverged: Если за max_iters итераций критерий не выполнен
        NonPositiveJacobianError: Если det F_T <= 0 на итерации
        FactorizationError: Если блок ячейки вырожден
        LinearSolveError: Если глобальная система вырождена
    """
    progress = progress or LoadStepProgress(step=0, load_factor=min(load_factor, 1.0))
    current = state.copy()
    tolerance = newton.abs_tol
    for iteration in range(newton.max_iters + 1):
        system = problem.assemble(current, load_factor)
        norm = system.residual_norm
        progress.residual_history.append(norm)
        if iteration == 0:
            tolerance = max(newton.abs_tol, newton.rel_tol * norm)
        logger.debug(f"load {load_factor:.6g}, iteration {iteration}: |R| = {norm:.3e}")
        if not np.isfinite(norm):
            break
        if norm <= tolerance:
            progress.iterations = iteration
            return current
        if iteration == newton.max_iters:
            break
        cells, faces = expand_increment(problem, system, solve_linear(system))
        current.cell_coeffs += newton.damping * cells
        current.face_coeffs += newton.damping * faces
        progress.iterations = iteration + 1
    raise StepNotConverged(
        f"Newton iterations did not converge at load factor {load_factor:.6g} "
        f"(|R| = {progress.residual_history[-1]:.3e}, tolerance {tolerance:.3e})",
        case_name=problem.case.name,
        load_factor=load_factor,
    )


def newton_solve(
    problem: DiscreteProblem,
    newton: NewtonConfig,
    monitor: StepMonitorProtocol | None = None,
    run_name: str | None = None,
    initial_state: DiscreteState | None = None,
) -> SolveResult:
    """Решает задачу методом Ньютона с равномерными шагами нагрузки.

    Данные Дирихле, поверхностные и объемные силы масштабируются
    коэффициентом нагрузки. При несходимости или det F <= 0 текущий шаг
    делится пополам (не более step_bisection_limit раз).

    Args:
        problem: Дискретная задача
        newton: Параметры метода Ньютона и нагружения
        monitor: Монитор шагов нагружения (опционально)
        run_name: Имя расчета для монитора (по умолчанию имя случая)
        initial_state: Начальное приближение (по умолчанию нулевое)

    Returns:
        SolveResult с состоянием при полной нагрузке

    Raises:
        ConvergenceError: Если лимит делений шага исчерпан
        LinearSolveError: Если глобальная система вырождена
    """
    run_name = run_name or problem.case.name
    stepper = LoadStepper(newton.load_steps, newton.step_bisection_limit)
    state = initial_state.copy() if initial_state is not None else problem.zero_state()
    result = SolveResult(state=state)
    logger.info(
        f"{run_name}: {newton.load_steps} load step(s), {problem.mesh.n_cells} cells, "
        f"{len(problem.free_dofs)} face unknowns"
    )

    for target in stepper:
        progress = LoadStepProgress(
            step=len(result.steps),
            load_factor=target,
            status=StepStatus.IN_PROGRESS,
            started_at=datetime.now(),
        )
        try:
            state = newton_iterations(problem, state, target, newton, progress)
        except (StepNotConverged, NonPositiveJacobianError, FactorizationError) as e:
            progress.completed_at = datetime.now()
            progress.error_message = e.message
            try:
                midpoint = stepper.reject()
            except ConvergenceError as failure:
                progress.status = StepStatus.FAILED
                _record(monitor, run_name, progress, result)
                raise ConvergenceError(
                    f"{run_name}: {failure.message}: {e.message}",
                    case_name=problem.case.name,
                    load_factor=target,
                ) from e
            progress.status = StepStatus.BISECTED
            _record(monitor, run_name, progress, result)
            logger.warning(f"{run_name}: load step to {target:.6g} failed ({e.message}); retrying {midpoint:.6g}")
            continue

        stepper.accept()
        progress.status = StepStatus.CONVERGED
        progress.completed_at = datetime.now()
        _record(monitor, run_name, progress, result)
        logger.info(
            f"{run_name}: load {target:.6g} converged in {progress.iterations} iteration(s), "
            f"|R| = {progress.final_residual:.3e}"
        )

    result.state = state
    result.load_factor = stepper.converged_factor
    result.bisections = stepper.bisections
    return result


def _record(
    monitor: StepMonitorProtocol | None, run_name: str, progress: LoadStepProgress, result: SolveResult
) -> None:
    result.steps.append(progress)
    if monitor is not None:
        monitor.record_step(run_name, progress)
