"""Проверки свойств операторов, материала и решателя.

Каждая проверка возвращает PropertyResult: измеренную величину, допуск и
признак выполнения. Набор проверок запускается командой ``verify``.
"""

from __future__ import annotations

from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, eigvalsh

from hho_hyperelastic.assembly import DiscreteProblem
from hho_hyperelastic.basis import (
    GradSpace,
    build_tensor_basis,
    cross_mass_matrix,
    mass_matrix,
    monomial_exponents,
)
from hho_hyperelastic.cases import CaseDefinition, linear_manufactured_case, manufactured_case
from hho_hyperelastic.config import MethodConfig
from hho_hyperelastic.logging import get_logger
from hho_hyperelastic.material import MaterialLaw, make_law
from hho_hyperelastic.mesh import Mesh, generate_cube_mesh
from hho_hyperelastic.operators import (
    LocalOperators,
    build_local_operators,
    project_tensor,
    reduction,
    trace_reduction,
)
from hho_hyperelastic.quadrature import cell_rule
from hho_hyperelastic.solver import condensed_increment, estimate_condition_number, monolithic_increment

logger = get_logger("verify")

COMMUTING_TOL = 1e-11
STABILIZATION_TOL = 1e-12
TANGENT_TOL = 1e-6
CONDENSATION_TOL = 1e-10
INCLUSION_TOL = 1e-6
REFINEMENT_FACTOR = 2.0


@dataclass(frozen=True)
class PropertyResult:
    """Результат проверки одного свойства.

    Attributes:
        name: Имя проверки
        value: Измеренная величина
        tolerance: Допуск (для отношений - верхняя граница)
        passed: Выполнено ли свойство
        detail: Пояснение
    """

    name: str
    value: float
    tolerance: float
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    """Результаты набора проверок."""

    results: list[PropertyResult] = field(default_factory=list)

    def add(self, result: PropertyResult) -> None:
        self.results.append(result)
        level = "info" if result.passed else "warning"
        getattr(logger, level)(
            f"{result.name}: {result.value:.3e} (tolerance {result.tolerance:.1e}) "
            f"{'ok' if result.passed else 'FAILED'}"
        )

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failed(self) -> list[PropertyResult]:
        return [r for r in self.results if not r.passed]


def _check(name: str, value: float, tolerance: float, detail: str = "") -> PropertyResult:
    return PropertyResult(name, float(value), tolerance, bool(value <= tolerance), detail)


def random_cell_mesh(rng: np.random.Generator, dim: int = 3, attempts: int = 100) -> Mesh:
    """Сетка из одной случайной невырожденной ячейки.

    Вершины опорного симплекса смещаются и масштабируются случайно.
    """
    reference = np.vstack([np.zeros(dim), np.eye(dim)])
    for _ in range(attempts):
        vertices = rng.uniform(0.2, 2.0) * (reference + 0.3 * rng.uniform(-1.0, 1.0, reference.shape))
        edges = vertices[1:] - vertices[0]
        volume = abs(np.linalg.det(edges))
        longest = max(np.linalg.norm(p - q) for p in vertices for q in vertices)
        if volume > 0.05 * longest**dim:
            return Mesh.from_cells(vertices, [list(range(dim + 1))])
    raise RuntimeError("Could not draw a shape-regular random cell")


def polynomial_field(rng: np.random.Generator, dim: int, degree: int) -> tuple[Callable, Callable]:
    """Случайное полиномиальное поле степени degree и его градиент.

    Квадратуры проекций интегрируют такие поля точно, поэтому тождества
    операторов проверяются с машинной точностью.
    """
    exponents = monomial_exponents(dim, degree)
    coeffs = rng.uniform(-1.0, 1.0, (len(exponents), dim))

    def value(points: np.ndarray) -> np.ndarray:
        monomials = np.prod(points[:, None, :] ** exponents[None], axis=2)
        return monomials @ coeffs

    def gradient(points: np.ndarray) -> np.ndarray:
        out = np.zeros((len(points), dim, dim))
        for b in range(dim):
            lowered = np.maximum(exponents - np.eye(dim, dtype=np.int64)[b], 0)
            derivative = exponents[:, b] * np.prod(points[:, None, :] ** lowered[None], axis=2)
            out[:, :, b] = derivative @ coeffs
        return out

    return value, gradient


def _relative_difference(ops: LocalOperators, coeffs: np.ndarray, target: np.ndarray) -> float:
    diff = coeffs - target
    scale = max(float(np.sqrt(target @ ops.mass_R @ target)), 1e-300)
    return float(np.sqrt(max(diff @ ops.mass_R @ diff, 0.0))) / scale


def commuting_defect(ops: LocalOperators, value: Callable, gradient: Callable) -> float:
    """||G_T(I(v)) - Pi^R_T(grad v)|| / ||Pi^R_T(grad v)|| в L^2(T)."""
    dofs = reduction(value, ops.local).as_vector()
    return _relative_difference(ops, ops.G @ dofs, project_tensor(gradient, ops))


def weak_commuting_defect(ops: LocalOperators, value: Callable) -> float:
    """||G_T(I~(v)) - grad Pi^k_T(v)|| относительно ||grad Pi^k_T(v)||."""
    reduced = trace_reduction(value, ops.local)
    basis = ops.local.cell_basis

    def grad_projection(points: np.ndarray) -> np.ndarray:
        return np.einsum("qiab,i->qab", basis.grad_vector(points), reduced.cell_coeffs)

    return _relative_difference(ops, ops.G @ reduced.as_vector(), project_tensor(grad_projection, ops))


def stabilization_defect(ops: LocalOperators) -> float:
    """max ||S(I(w))|| / ||I(w)|| по базису P^{k+1}(T; R^d)."""
    local = ops.local
    worst = 0.0
    for j in range(local.reconstruction_basis.vector_size):

        def w(points: np.ndarray, j: int = j) -> np.ndarray:
            return local.reconstruction_basis.eval_vector(points)[:, j, :]

        dofs = reduction(w, local).as_vector()
        worst = max(worst, float(np.linalg.norm(ops.S @ dofs)) / max(float(np.linalg.norm(dofs)), 1e-300))
    return worst


def rtn_inclusion_defect(mesh: Mesh, cell: int, k: int) -> float:
    """Относительная L^2-ошибка проекции базиса RTN^k на P^{k+1}(T; R^{d x d})."""
    geometry = mesh.geometries[cell]
    rtn = build_tensor_basis(geometry, k, GradSpace.RTN)
    pkp1 = build_tensor_basis(geometry, k, GradSpace.PKP1)
    rule = cell_rule(mesh, cell, 2 * k + 4)
    M = mass_matrix(pkp1, rule)
    C = cross_mass_matrix(pkp1, rtn, rule)
    R = mass_matrix(rtn, rule)
    coeffs = np.linalg.solve(M, C)
    residual = np.diag(R) - np.einsum("ij,ij->j", C, coeffs)
    return float(np.sqrt(np.max(np.abs(residual) / np.diag(R))))


def generalized_bounds(matrix: np.ndarray, seminorm: np.ndarray, rel_tol: float = 1e-10) -> tuple[float, float]:
    """Крайние обобщенные собственные числа matrix относительно seminorm.

    Вычисляются на ортогональном дополнении ядра полунормы.
    """
    values, vectors = eigh(seminorm)
    keep = values > rel_tol * values.max()
    V = vectors[:, keep] / np.sqrt(values[keep])
    reduced = V.T @ matrix @ V
    eigenvalues = eigvalsh(0.5 * (reduced + reduced.T))
    return float(eigenvalues[0]), float(eigenvalues[-1])


def norm_bounds(operators: Iterable[LocalOperators], beta: float = 0.0) -> tuple[float, float]:
    """Минимум и максимум по ячейкам обобщенных собственных чисел
    G^T M_R G + beta S^T Gamma S относительно полунормы деформаций."""
    lo, hi = np.inf, 0.0
    for ops in operators:
        matrix = ops.G.T @ ops.mass_R @ ops.G
        if beta:
            matrix = matrix + beta * ops.stabilization.gram
        a, b = generalized_bounds(matrix, ops.seminorm_gram)
        lo, hi = min(lo, a), max(hi, b)
    return float(lo), float(hi)


def random_deformation_gradients(
    rng: np.random.Generator, count: int, dim: int = 3, det_range: tuple[float, float] = (0.2, 5.0)
) -> np.ndarray:
    """Случайные F с det F в заданном диапазоне."""
    samples = []
    while len(samples) < count:
        F = np.eye(dim) + 0.5 * rng.standard_normal((dim, dim))
        J = np.linalg.det(F)
        if J <= 0.0:
            continue
        target = rng.uniform(*det_range)
        samples.append(F * (target / J) ** (1.0 / dim))
    return np.array(samples)


def tangent_defect(law: MaterialLaw, F: np.ndarray, rng: np.random.Generator, step: float = 1e-6) -> float:
    """||A:dF - (P(F + t dF) - P(F - t dF)) / 2t|| / ||FD|| для случайного dF."""
    dF = rng.standard_normal(F.shape)
    dF /= np.linalg.norm(dF)
    d = F.shape[-1]
    response = law.evaluate(F)
    analytic = (response.A @ dF.ravel()).reshape(d, d)
    fd = (law.evaluate(F + step * dF).P - law.evaluate(F - step * dF).P) / (2.0 * step)
    return float(np.linalg.norm(analytic - fd) / max(np.linalg.norm(fd), 1e-300))


def stress_defect(law: MaterialLaw, F: np.ndarray, rng: np.random.Generator, step: float = 1e-6) -> float:
    """|P:dF - (Psi(F + t dF) - Psi(F - t dF)) / 2t| относительно |FD|."""
    dF = rng.standard_normal(F.shape)
    dF /= np.linalg.norm(dF)
    analytic = float(np.sum(law.evaluate(F).P * dF))
    fd = (float(law.evaluate(F + step * dF).psi) - float(law.evaluate(F - step * dF).psi)) / (2.0 * step)
    return abs(analytic - fd) / max(abs(fd), 1e-8)


def manufactured_divergence_defect(
    case: CaseDefinition, rng: np.random.Generator, points: int = 50, step: float = 1e-4
) -> float:
    """max |-Div P(F(u)) - f| / max |f| в случайных точках, дивергенция центральными разностями."""
    if case.exact_gradient is None or case.body_force is None:
        raise ValueError(f"Case '{case.name}' has no exact gradient or body force")
    d = case.dim
    X = rng.uniform(0.1, 0.9, (points, d))

    def stress(Y: np.ndarray) -> np.ndarray:
        return case.law.evaluate(np.eye(d) + case.exact_gradient(Y)).P

    divergence = np.zeros((points, d))
    for b in range(d):
        shift = np.zeros(d)
        shift[b] = step
        divergence += (stress(X + shift)[:, :, b] - stress(X - shift)[:, :, b]) / (2.0 * step)
    force = case.body_force(X)
    return float(np.max(np.abs(-divergence - force)) / max(float(np.max(np.abs(force))), 1e-300))


def condensation_defect(problem: DiscreteProblem, load_factor: float = 1.0) -> float:
    """Относительное расхождение приращений с конденсацией и без нее."""
    state = problem.zero_state()
    cells_c, faces_c = condensed_increment(problem, state, load_factor)
    cells_m, faces_m = monolithic_increment(problem, state, load_factor)
    condensed = np.concatenate([cells_c.ravel(), faces_c])
    monolithic = np.concatenate([cells_m.ravel(), faces_m])
    return float(np.linalg.norm(condensed - monolithic) / max(np.linalg.norm(monolithic), 1e-300))


def condition_numbers(mesh: Mesh, k: int, beta0_values: Sequence[float]) -> list[float]:
    """Числа обусловленности глобальной матрицы sHHO (линейная упругость)."""
    case = linear_manufactured_case(mesh.dim)
    numbers = []
    for beta0 in beta0_values:
        problem = DiscreteProblem(mesh, case, MethodConfig.shho(k, beta0=beta0))
        system = problem.assemble(problem.zero_state(), 1.0)
        numbers.append(estimate_condition_number(system.matrix))
    return numbers


def run_verification(k: int = 1, cells: int = 20, level: int = 2, seed: int = 0) -> VerificationReport:
    """Запускает набор проверок свойств.

    Args:
        k: Степень метода
        cells: Число случайных ячеек для локальных проверок
        level: Грубый уровень сетки куба для проверок по измельчению
        seed: Начальное значение генератора

    Returns:
        VerificationReport
    """
    rng = np.random.default_rng(seed)
    report = VerificationReport()

    commuting, weak, stabilization, inclusion = [], [], [], []
    for _ in range(cells):
        mesh = random_cell_mesh(rng)
        value, gradient = polynomial_field(rng, mesh.dim, k + 2)
        rtn = build_local_operators(mesh, 0, k, GradSpace.RTN)
        pkp1 = build_local_operators(mesh, 0, k, GradSpace.PKP1)
        pk = build_local_operators(mesh, 0, k, GradSpace.PK)
        commuting.append(commuting_defect(rtn, value, gradient))
        weak.append(max(weak_commuting_defect(ops, value) for ops in (rtn, pkp1, pk)))
        stabilization.append(stabilization_defect(pk))
        inclusion.append(rtn_inclusion_defect(mesh, 0, k))
    report.add(_check("commuting (RTN)", max(commuting), COMMUTING_TOL))
    report.add(_check("weak commuting", max(weak), COMMUTING_TOL))
    report.add(_check("stabilization consistency", max(stabilization), STABILIZATION_TOL))
    report.add(_check("RTN in P^{k+1}", max(inclusion), INCLUSION_TOL))

    for name in ("neohookean", "cavitation"):
        law = make_law(name, 1.0, 1.0)
        Fs = random_deformation_gradients(rng, 100)
        report.add(_check(f"tangent ({name})", max(tangent_defect(law, F, rng) for F in Fs), TANGENT_TOL))
        report.add(_check(f"stress ({name})", max(stress_defect(law, F, rng) for F in Fs), TANGENT_TOL))

    report.add(_check("manufactured divergence", manufactured_divergence_defect(manufactured_case(), rng), 1e-6))

    coarse, fine = generate_cube_mesh(level), generate_cube_mesh(2 * level)
    for label, space, beta in (("sHHO", GradSpace.PK, 1.0), ("uHHO RTN", GradSpace.RTN, 0.0)):
        bounds = [
            norm_bounds([build_local_operators(m, c, k, space) for c in range(m.n_cells)], beta)
            for m in (coarse, fine)
        ]
        lo = min(b[0] for b in bounds)
        spread = max(
            max(bounds[0][0], bounds[1][0]) / min(bounds[0][0], bounds[1][0]),
            max(bounds[0][1], bounds[1][1]) / min(bounds[0][1], bounds[1][1]),
        ) if lo > 0.0 else np.inf
        report.add(
            _check(
                f"norm equivalence ({label})",
                spread,
                REFINEMENT_FACTOR,
                f"bounds {bounds[0][0]:.3e}..{bounds[0][1]:.3e} -> {bounds[1][0]:.3e}..{bounds[1][1]:.3e}",
            )
        )

    problem = DiscreteProblem(generate_cube_mesh(1), manufactured_case(), MethodConfig.shho(k))
    report.add(_check("static condensation", condensation_defect(problem), CONDENSATION_TOL))

    small = generate_cube_mesh(level)
    kappa = condition_numbers(small, k, (1.0, 1e3))
    growth = kappa[1] / kappa[0]
    report.add(
        PropertyResult(
            "beta conditioning growth",
            growth,
            1e3,
            bool(10.0 <= growth <= 1e3),
            f"cond {kappa[0]:.3e} (beta0 = 1) -> {kappa[1]:.3e} (beta0 = 1e3)",
        )
    )
    return report
