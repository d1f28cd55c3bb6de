"""Постобработка: ошибки, порядки сходимости, тракции и производные поля."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve

from hho_hyperelastic.assembly import DiscreteProblem, DiscreteState, evaluate_material
from hho_hyperelastic.mesh import BOUNDARY, locate_points
from hho_hyperelastic.quadrature import MAX_ORDER, cell_rule
from hho_hyperelastic.types import TensorField, VectorField


def observed_order(e1: float, e2: float, h1: float, h2: float) -> float | None:
    """Порядок log(e1 / e2) / log(h1 / h2); None, если он не определен."""
    if e1 <= 0.0 or e2 <= 0.0 or h1 <= 0.0 or h2 <= 0.0 or math.isclose(h1, h2):
        return None
    return math.log(e1 / e2) / math.log(h1 / h2)


@dataclass(frozen=True)
class ErrorSample:
    """Ошибки на одной сетке.

    Attributes:
        h: Средний диаметр ячеек
        err_u: ||u - u_T||_{L^2}
        err_G: ||grad u - G_h(u)||_{L^2} (разбитая норма)
        newton_iters: Суммарное число итераций Ньютона
        level: Уровень сетки
    """

    h: float
    err_u: float
    err_G: float
    newton_iters: int = 0
    level: int | None = None

    def __post_init__(self) -> None:
        if self.h <= 0.0:
            raise ValueError("h must be positive")
        if self.err_u < 0.0 or self.err_G < 0.0:
            raise ValueError("errors cannot be negative")


@dataclass
class ErrorReport:
    """Таблица ошибок по последовательности измельчаемых сеток.

    Attributes:
        samples: Ошибки по сеткам в порядке измельчения
        reference: Описание эталонного решения ("exact" или "fine-mesh")
    """

    samples: list[ErrorSample] = field(default_factory=list)
    reference: str = "exact"

    def add(self, sample: ErrorSample) -> None:
        self.samples.append(sample)

    def _orders(self, attr: str) -> list[float | None]:
        orders: list[float | None] = [None]
        for prev, cur in zip(self.samples, self.samples[1:]):
            orders.append(observed_order(getattr(prev, attr), getattr(cur, attr), prev.h, cur.h))
        return orders[: len(self.samples)]

    @property
    def orders_u(self) -> list[float | None]:
        """Порядки по перемещению (None для первой сетки)."""
        return self._orders("err_u")

    @property
    def orders_G(self) -> list[float | None]:
        return self._orders("err_G")

    @property
    def total_newton_iterations(self) -> int:
        return sum(s.newton_iters for s in self.samples)

    def rows(self) -> list[dict[str, float | int | None]]:
        """Строки таблицы: h, err_u, order_u, err_G, order_G, newton_iters."""
        return [
            {
                "h": s.h,
                "err_u": s.err_u,
                "order_u": ou,
                "err_G": s.err_G,
                "order_G": og,
                "newton_iters": s.newton_iters,
            }
            for s, ou, og in zip(self.samples, self.orders_u, self.orders_G)
        ]


def error_quadrature_order(k: int) -> int:
    """Порядок квадратуры для интегралов ошибок (не ниже 2(k + 2))."""
    return min(2 * (k + 2) + 2, MAX_ORDER)


def compute_errors(
    problem: DiscreteProblem,
    state: DiscreteState,
    displacement: VectorField,
    gradient: TensorField,
    order: int | None = None,
) -> ErrorSample:
    """L^2-ошибки перемещения u_T и реконструированного градиента.

    Args:
        problem: Дискретная задача
        state: Дискретное решение
        displacement: Эталонное перемещение
        gradient: Эталонный градиент перемещения
        order: Порядок квадратуры (по умолчанию 2(k + 2) + 2)

    Returns:
        ErrorSample с h = средний диаметр ячеек
    """
    order = order if order is not None else error_quadrature_order(problem.method.k)
    err_u_sq = err_G_sq = 0.0
    for ops in problem.operators:
        cell = ops.cell
        rule = cell_rule(problem.mesh, cell, order)
        dofs = problem.local_vector(state, cell)
        u_h = ops.local.cell_displacement(state.cell_coeffs[cell], rule.points)
        G_h = ops.gradient_at(dofs, rule.points)
        err_u_sq += float(rule.weights @ np.sum((displacement(rule.points) - u_h) ** 2, axis=1))
        err_G_sq += float(rule.weights @ np.sum((gradient(rule.points) - G_h) ** 2, axis=(1, 2)))
    return ErrorSample(
        h=problem.mesh.mean_cell_diameter, err_u=math.sqrt(err_u_sq), err_G=math.sqrt(err_G_sq)
    )


@dataclass
class TractionField:
    """Дискретные тракции T_{T,F} на гранях ячеек.

    Attributes:
        coefficients: Массив (n_cells, число граней ячейки, n_face) коэффициентов
            в базисе грани
    """

    coefficients: np.ndarray

    def on(self, cell: int, local_face: int) -> np.ndarray:
        return self.coefficients[cell, local_face]


def _face_moments(problem: DiscreteProblem, cell: int, i: int, coeffs: np.ndarray) -> np.ndarray:
    return problem.operators[cell].local.face_masses[i] @ coeffs


def compute_tractions(
    problem: DiscreteProblem, state: DiscreteState
) -> TractionField:
    """Вычисляет равновесные тракции.

    uHHO: T_{T,F} = Pi^k_F(Pi^R_T(P) n_TF).
    sHHO: T_{T,F} = Pi^k_F(Pi^k_T(P) n_TF) + beta S_hat^*(h_F^{-1} S_hat(u_dT - u_T|dT))|_F.

    Pi^R_T(P) вычисляется той же квадратурой, что и невязка.

    Raises:
        NonPositiveJacobianError: Если det F_T <= 0
    """
    mesh = problem.mesh
    n_local = mesh.dim + 1
    coefficients = np.zeros((mesh.n_cells, n_local, problem.n_face))
    for ops in problem.operators:
        cell, local = ops.cell, ops.local
        dofs = problem.local_vector(state, cell)
        response = evaluate_material(ops, dofs, problem.law)
        stress = ops.project_values(response.P)
        for i, frule in enumerate(local.face_rules):
            normal = local.geometry.face_normals[i]
            tau_n = np.einsum("qiab,b->qia", ops.tensor_basis.eval(frule.points), normal)
            values = np.einsum("qia,i->qa", tau_n, stress)
            rhs = np.einsum("q,qjd,qd->j", frule.weights, local.face_values[i], values)
            coefficients[cell, i] = cho_solve(local.face_mass_factors[i], rhs)
        if problem.beta:
            stab = ops.stabilization
            theta = dofs[local.n_cell :].copy()
            for i in range(local.n_faces):
                w = local.face_rules[i].weights
                trace = np.einsum("qjd,j->qd", local.cell_traces[i], dofs[: local.n_cell])
                rhs = np.einsum("q,qjd,qd->j", w, local.face_values[i], trace)
                theta[i * local.n_face : (i + 1) * local.n_face] -= cho_solve(
                    local.face_mass_factors[i], rhs
                )
            scaled = stab.S_hat @ theta
            for i, h in enumerate(local.geometry.face_diameters):
                scaled[i * local.n_face : (i + 1) * local.n_face] /= h
            correction = problem.beta * (stab.S_hat_adjoint @ scaled)
            coefficients[cell] += correction.reshape(local.n_faces, local.n_face)
    return TractionField(coefficients=coefficients)


@dataclass(frozen=True)
class TractionBalance:
    """Невязки баланса тракций (нормы моментов по граням).

    Attributes:
        interface: max_F ||M_F (T_{T-,F} + T_{T+,F})|| по внутренним граням
        neumann: max_F ||M_F (T_{T,F} - Pi^k_F T_n)|| по граням Неймана
    """

    interface: float
    neumann: float


def traction_balance(
    problem: DiscreteProblem, tractions: TractionField, load_factor: float = 1.0
) -> TractionBalance:
    """Проверяет закон действия и противодействия и условия Неймана."""
    mesh = problem.mesh
    interface = neumann = 0.0
    for f in range(mesh.n_faces):
        owner, neighbour = mesh.face_cells[f].tolist()
        i_owner = int(np.flatnonzero(mesh.cell_faces[owner] == f)[0])
        moments = _face_moments(problem, owner, i_owner, tractions.on(owner, i_owner))
        if neighbour != BOUNDARY:
            i_nb = int(np.flatnonzero(mesh.cell_faces[neighbour] == f)[0])
            moments = moments + _face_moments(problem, neighbour, i_nb, tractions.on(neighbour, i_nb))
            interface = max(interface, float(np.linalg.norm(moments)))
        elif mesh.boundary_tags[f] not in problem.case.dirichlet:
            local = problem.operators[owner].local
            loads = problem.external_loads(owner, load_factor)[local.face_slice(i_owner)]
            neumann = max(neumann, float(np.linalg.norm(moments - loads)))
    return TractionBalance(interface=interface, neumann=neumann)


def check_local_virtual_work(
    problem: DiscreteProblem,
    state: DiscreteState,
    tractions: TractionField,
    load_factor: float = 1.0,
) -> float:
    """Максимальный по ячейкам дефект локального принципа виртуальных работ.

    Дефект ячейки: (P, grad v_T)_T - sum_F (T_{T,F}, v_T)_F - (f, v_T)_T по
    всем базисным функциям v_T ячейки.
    """
    worst = 0.0
    for ops in problem.operators:
        cell, local = ops.cell, ops.local
        dofs = problem.local_vector(state, cell)
        response = evaluate_material(ops, dofs, problem.law)
        rule = ops.quad_rule
        grads = local.cell_basis.grad_vector(rule.points)
        defect = np.einsum("q,qiab,qab->i", rule.weights, grads, response.P)
        for i, frule in enumerate(local.face_rules):
            values = np.einsum("qjd,j->qd", local.face_values[i], tractions.on(cell, i))
            defect -= np.einsum("q,qid,qd->i", frule.weights, local.cell_traces[i], values)
        defect -= problem.external_loads(cell, load_factor)[: local.n_cell]
        worst = max(worst, float(np.linalg.norm(defect)))
    return worst


def traction_resultant(problem: DiscreteProblem, tractions: TractionField, tag: str) -> np.ndarray:
    """Интеграл тракции по граничным граням с тегом tag, вектор (d,)."""
    mesh = problem.mesh
    total = np.zeros(mesh.dim)
    for f in mesh.faces_with_tag(tag).tolist():
        cell = int(mesh.face_cells[f, 0])
        i = int(np.flatnonzero(mesh.cell_faces[cell] == f)[0])
        local = problem.operators[cell].local
        values = np.einsum("qjd,j->qd", local.face_values[i], tractions.on(cell, i))
        total += local.face_rules[i].weights @ values
    return total


def von_mises(sigma: np.ndarray) -> np.ndarray:
    """Эквивалентное напряжение sqrt(3/2 s:s) по тензору Коши (..., 3, 3)."""
    sigma = np.asarray(sigma, dtype=float)
    trace = np.trace(sigma, axis1=-2, axis2=-1)
    deviator = sigma - trace[..., None, None] / 3.0 * np.eye(3)
    return np.sqrt(1.5 * np.einsum("...ij,...ij->...", deviator, deviator))


def _embed_3d(F: np.ndarray) -> np.ndarray:
    """Плоская деформация: F дополняется единицей по третьей оси."""
    d = F.shape[-1]
    if d == 3:
        return F
    full = np.broadcast_to(np.eye(3), F.shape[:-2] + (3, 3)).copy()
    full[..., :d, :d] = F
    return full


@dataclass
class DerivedFields:
    """Производные поля в барицентрах ячеек.

    Attributes:
        jacobian: J^h = det F_T, массив (n_cells,)
        von_mises: Напряжение по Мизесу, массив (n_cells,)
        displacement: u_T в барицентрах, массив (n_cells, d)
    """

    jacobian: np.ndarray
    von_mises: np.ndarray
    displacement: np.ndarray

    @property
    def displacement_magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.displacement, axis=1)


def derived_fields(problem: DiscreteProblem, state: DiscreteState) -> DerivedFields:
    """J^h, напряжение по Мизесу (sigma = J^{-1} P F^T) и перемещение в барицентрах.

    В 2D используется плоская деформация.

    Raises:
        NonPositiveJacobianError: Если det F_T <= 0 в барицентре
    """
    mesh = problem.mesh
    jacobian = np.empty(mesh.n_cells)
    stress = np.empty(mesh.n_cells)
    displacement = np.empty((mesh.n_cells, mesh.dim))
    for ops in problem.operators:
        cell = ops.cell
        center = ops.local.geometry.barycenter[None]
        dofs = problem.local_vector(state, cell)
        F = _embed_3d(np.eye(mesh.dim) + ops.gradient_at(dofs, center))
        P = problem.law.evaluate(F, cell=cell).P
        J = np.linalg.det(F)
        sigma = np.einsum("nij,nkj->nik", P, F) / J[:, None, None]
        jacobian[cell] = J[0]
        stress[cell] = von_mises(sigma)[0]
        displacement[cell] = ops.local.cell_displacement(state.cell_coeffs[cell], center)[0]
    return DerivedFields(jacobian=jacobian, von_mises=stress, displacement=displacement)


def vertex_displacement(problem: DiscreteProblem, state: DiscreteState) -> np.ndarray:
    """Перемещение в вершинах, усредненное по ячейкам, массив (n_vertices, d)."""
    mesh = problem.mesh
    total = np.zeros((len(mesh.vertices), mesh.dim))
    count = np.zeros(len(mesh.vertices))
    for ops in problem.operators:
        cell = ops.cell
        nodes = mesh.cells[cell]
        total[nodes] += ops.local.cell_displacement(state.cell_coeffs[cell], mesh.vertices[nodes])
        count[nodes] += 1
    return total / np.maximum(count, 1)[:, None]


class DiscreteField:
    """Вычисление дискретного решения в произвольных точках.

    Перемещение берется из полинома ячейки, градиент - из реконструкции
    G_T. Используется как эталон при сравнении с решением на мелкой сетке.
    """

    def __init__(self, problem: DiscreteProblem, state: DiscreteState) -> None:
        self.problem = problem
        self.state = state

    def _evaluate(self, points: np.ndarray, gradient: bool) -> np.ndarray:
        points = np.atleast_2d(points)
        cells = locate_points(self.problem.mesh, points)
        d = self.problem.mesh.dim
        out = np.zeros((len(points), d, d) if gradient else (len(points), d))
        for cell in np.unique(cells).tolist():
            mask = cells == cell
            ops = self.problem.operators[cell]
            if gradient:
                out[mask] = ops.gradient_at(self.problem.local_vector(self.state, cell), points[mask])
            else:
                out[mask] = ops.local.cell_displacement(self.state.cell_coeffs[cell], points[mask])
        return out

    def displacement(self, points: np.ndarray) -> np.ndarray:
        return self._evaluate(points, gradient=False)

    def gradient(self, points: np.ndarray) -> np.ndarray:
        return self._evaluate(points, gradient=True)
