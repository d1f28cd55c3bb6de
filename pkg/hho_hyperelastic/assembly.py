"""Локальные невязки и касательные матрицы, статическая конденсация и сборка.

Глобальные неизвестные граней нумеруются блоками: грань f занимает
позиции f * n_face, ..., (f + 1) * n_face - 1. Неизвестные ячеек
исключаются локально и в глобальную систему не входят.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.linalg import LinAlgError, cho_solve, lu_factor, lu_solve

from hho_hyperelastic.basis import FaceBasis, factorize_mass, mass_matrix
from hho_hyperelastic.cases import CaseDefinition
from hho_hyperelastic.config import MethodConfig
from hho_hyperelastic.exceptions import FactorizationError
from hho_hyperelastic.logging import get_logger
from hho_hyperelastic.material import MaterialLaw, MaterialResponse
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.operators import LocalOperators, OperatorCache, thread_count
from hho_hyperelastic.quadrature import MAX_ORDER, cell_rule, face_rule

logger = get_logger("assembly")


def evaluate_material(ops: LocalOperators, dofs: np.ndarray, law: MaterialLaw) -> MaterialResponse:
    """Отклик материала в узлах нелинейной квадратуры ячейки.

    Raises:
        NonPositiveJacobianError: Если det F_T <= 0 в каком-либо узле
    """
    return law.evaluate(ops.deformation_gradients(dofs), cell=ops.cell)


def _flat_tensors(ops: LocalOperators) -> np.ndarray:
    nq, n = ops.tensor_values.shape[:2]
    return ops.tensor_values.reshape(nq, n, -1)


def stress_moments(ops: LocalOperators, response: MaterialResponse) -> np.ndarray:
    """b_i = (P, tau_i)_T по квадратуре нелинейных интегралов."""
    return np.einsum("q,qiab,qab->i", ops.quad_rule.weights, ops.tensor_values, response.P)


def local_residual(
    ops: LocalOperators,
    dofs: np.ndarray,
    law: MaterialLaw,
    beta: float = 0.0,
    loads: np.ndarray | None = None,
    response: MaterialResponse | None = None,
) -> np.ndarray:
    """Локальная невязка ячейки.

    R(v) = (P(F_T), G_T(v))_T + beta (gamma S u, S v)_dT - (f, v_T)_T - sum_F (T_n, v_F)_F

    Args:
        ops: Локальные операторы ячейки
        dofs: Локальные неизвестные (ячейка, затем грани)
        law: Определяющее соотношение
        beta: Вес стабилизации (0 для uHHO)
        loads: Локальный вектор внешних сил (None: без нагрузки)
        response: Уже вычисленный отклик материала

    Returns:
        Вектор длины local.size

    Raises:
        NonPositiveJacobianError: Если det F_T <= 0
    """
    if response is None:
        response = evaluate_material(ops, dofs, law)
    residual = ops.G.T @ stress_moments(ops, response)
    if beta:
        residual += beta * (ops.stabilization.gram @ dofs)
    if loads is not None:
        residual -= loads
    return residual


def local_tangent(
    ops: LocalOperators,
    dofs: np.ndarray,
    law: MaterialLaw,
    beta: float = 0.0,
    response: MaterialResponse | None = None,
) -> np.ndarray:
    """Локальная касательная матрица G^T C G + beta S^T Gamma S.

    C_ij = (A(F_T) : tau_j, tau_i)_T вычисляется той же квадратурой,
    что и невязка.

    Raises:
        NonPositiveJacobianError: Если det F_T <= 0
    """
    if response is None:
        response = evaluate_material(ops, dofs, law)
    tau = _flat_tensors(ops)
    moduli = np.einsum("q,qia,qab,qjb->ij", ops.quad_rule.weights, tau, response.A, tau)
    tangent = ops.G.T @ moduli @ ops.G
    if beta:
        tangent += beta * ops.stabilization.gram
    return 0.5 * (tangent + tangent.T)


@dataclass(frozen=True)
class CondensedBlock:
    """Результат статической конденсации одной ячейки.

    Система K delta = -R заменяется системой на неизвестные граней
    matrix delta_F = -residual; приращение ячейки восстанавливается как
    recovery_matrix @ delta_F + recovery_vector.

    Attributes:
        cell: Индекс ячейки
        matrix: Дополнение Шура K_FF - K_FT K_TT^{-1} K_TF
        residual: Сконденсированная невязка R_F - K_FT K_TT^{-1} R_T
        recovery_matrix: -K_TT^{-1} K_TF
        recovery_vector: -K_TT^{-1} R_T
        cell_residual: Невязка ячейки R_T
        cell_coupling: Блок K_TF
    """

    cell: int | None
    matrix: np.ndarray
    residual: np.ndarray
    recovery_matrix: np.ndarray
    recovery_vector: np.ndarray
    cell_residual: np.ndarray
    cell_coupling: np.ndarray

    def recover(self, face_increment: np.ndarray) -> np.ndarray:
        """Приращение неизвестных ячейки по приращению ее граней."""
        return self.recovery_matrix @ face_increment + self.recovery_vector


def condense(
    K: np.ndarray, R: np.ndarray, n_cell: int, cell: int | None = None
) -> CondensedBlock:
    """Исключает неизвестные ячейки из локальной системы K delta = -R.

    Args:
        K: Локальная матрица (ячейка, затем грани)
        R: Локальная невязка
        n_cell: Число неизвестных ячейки
        cell: Индекс ячейки для сообщений об ошибках

    Returns:
        CondensedBlock

    Raises:
        FactorizationError: Если блок ячейки K_TT вырожден
    """
    K_TT, K_TF = K[:n_cell, :n_cell], K[:n_cell, n_cell:]
    K_FT, K_FF = K[n_cell:, :n_cell], K[n_cell:, n_cell:]
    try:
        factor = lu_factor(K_TT, check_finite=True)
    except (LinAlgError, ValueError) as e:
        raise FactorizationError(f"Cell block factorization failed: {e}", cell=cell) from e
    if np.any(np.abs(np.diag(factor[0])) <= 1e-14 * max(np.abs(K_TT).max(), 1e-300)):
        raise FactorizationError("Cell block is singular", cell=cell)
    solved = lu_solve(factor, np.column_stack([K_TF, R[:n_cell]]))
    inv_K_TF, inv_R_T = solved[:, :-1], solved[:, -1]
    return CondensedBlock(
        cell=cell,
        matrix=K_FF - K_FT @ inv_K_TF,
        residual=R[n_cell:] - K_FT @ inv_R_T,
        recovery_matrix=-inv_K_TF,
        recovery_vector=-inv_R_T,
        cell_residual=R[:n_cell].copy(),
        cell_coupling=K_TF.copy(),
    )


@dataclass
class DiscreteState:
    """Дискретное перемещение: коэффициенты всех ячеек и граней.

    Attributes:
        cell_coeffs: Массив (n_cells, n_cell)
        face_coeffs: Плоский массив (n_faces * n_face,)
    """

    cell_coeffs: np.ndarray
    face_coeffs: np.ndarray

    def copy(self) -> DiscreteState:
        return DiscreteState(self.cell_coeffs.copy(), self.face_coeffs.copy())

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.cell_coeffs**2) + np.sum(self.face_coeffs**2)))


@dataclass
class CondensedSystem:
    """Глобальная система на свободные неизвестные граней.

    Attributes:
        matrix: Разреженная матрица (free x free)
        rhs: Правая часть -(R_c + K_c delta_D) на свободных неизвестных
        free_dofs: Глобальные номера свободных неизвестных граней
        dirichlet_dofs: Глобальные номера неизвестных граней Дирихле
        dirichlet_increment: Известное приращение на гранях Дирихле
        blocks: Блоки конденсации всех ячеек
        residual_norm: Норма эффективной невязки (грани и ячейки)
    """

    matrix: sparse.csr_matrix
    rhs: np.ndarray
    free_dofs: np.ndarray
    dirichlet_dofs: np.ndarray
    dirichlet_increment: np.ndarray
    blocks: list[CondensedBlock]
    residual_norm: float

    @property
    def size(self) -> int:
        return len(self.free_dofs)


class DiscreteProblem:
    """Дискретная задача HHO на сетке для расчетного случая.

    Хранит локальные операторы, нумерацию неизвестных граней, проекции
    данных Дирихле и локальные векторы нагрузки при полной нагрузке.

    Attributes:
        mesh: Сетка
        case: Расчетный случай
        method: Параметры дискретизации
        operators: Локальные операторы всех ячеек
        beta: Вес стабилизации beta0 mu (0 для uHHO)
    """

    def __init__(
        self,
        mesh: Mesh,
        case: CaseDefinition,
        method: MethodConfig,
        operators: OperatorCache | None = None,
        threads: int | None = None,
    ) -> None:
        if mesh.dim != case.dim:
            raise ValueError(f"Case '{case.name}' is {case.dim}D but the mesh is {mesh.dim}D")
        self.mesh = mesh
        self.case = case
        self.method = method
        self.law = case.law
        self.threads = threads or thread_count()
        self.operators = operators or OperatorCache(
            mesh, method.k, method.grad_space, method.quadrature_order, self.threads
        )
        self.beta = method.beta(self.law.mu) if method.stabilized else 0.0
        self.n_face = self.operators.face_size
        self.n_cell = self.operators.cell_size
        self.n_face_dofs = mesh.n_faces * self.n_face

        dirichlet_faces = [
            f for f, tag in sorted(mesh.boundary_tags.items()) if tag in case.dirichlet
        ]
        self.dirichlet_faces = np.array(dirichlet_faces, dtype=np.int64)
        mask = np.zeros(self.n_face_dofs, dtype=bool)
        for f in dirichlet_faces:
            mask[self.face_dofs(f)] = True
        self.dirichlet_dofs = np.flatnonzero(mask)
        self.free_dofs = np.flatnonzero(~mask)
        self._dirichlet_unit = self._project_dirichlet()
        self._loads_unit = [self._unit_loads(ops) for ops in self.operators]
        logger.debug(
            f"{case.name}: {mesh.n_cells} cells, {len(self.free_dofs)} free face unknowns, "
            f"{len(self.dirichlet_dofs)} Dirichlet unknowns"
        )

    def face_dofs(self, face: int) -> slice:
        start = int(face) * self.n_face
        return slice(start, start + self.n_face)

    def cell_face_dofs(self, cell: int) -> np.ndarray:
        """Глобальные номера неизвестных граней ячейки в локальном порядке."""
        faces = self.mesh.cell_faces[cell]
        return (faces[:, None] * self.n_face + np.arange(self.n_face)).ravel()

    def zero_state(self) -> DiscreteState:
        return DiscreteState(
            np.zeros((self.mesh.n_cells, self.n_cell)), np.zeros(self.n_face_dofs)
        )

    def local_vector(self, state: DiscreteState, cell: int) -> np.ndarray:
        """Локальные неизвестные ячейки: блок ячейки, затем грани."""
        return np.concatenate([state.cell_coeffs[cell], state.face_coeffs[self.cell_face_dofs(cell)]])

    def _face_projection(self, face: int, values) -> np.ndarray:
        order = min(2 * self.method.k + 4, MAX_ORDER)
        rule = face_rule(self.mesh, face, order)
        basis = FaceBasis.for_face(self.mesh.face_vertices(face), self.method.k)
        phi = basis.eval_vector(rule.points)
        rhs = np.einsum("q,qid,qd->i", rule.weights, phi, values(rule.points))
        return cho_solve(factorize_mass(mass_matrix(basis, rule, vector=True)), rhs)

    def _project_dirichlet(self) -> np.ndarray:
        values = np.zeros(self.n_face_dofs)
        for f in self.dirichlet_faces.tolist():
            tag = self.mesh.boundary_tags[f]
            values[self.face_dofs(f)] = self._face_projection(
                f, lambda x, tag=tag: self.case.dirichlet_values(tag, x, 1.0)
            )
        return values

    def _unit_loads(self, ops: LocalOperators) -> np.ndarray:
        local = ops.local
        loads = np.zeros(local.size)
        order = min(2 * self.method.k + 4, MAX_ORDER)
        if self.case.body_force is not None:
            rule = cell_rule(self.mesh, local.cell, order)
            phi = local.cell_basis.eval_vector(rule.points)
            force = self.case.body_force_values(rule.points, 1.0)
            loads[: local.n_cell] = np.einsum("q,qid,qd->i", rule.weights, phi, force)
        for i, f in enumerate(local.faces.tolist()):
            tag = self.mesh.boundary_tags.get(f)
            if tag is None or self.case.neumann.get(tag) is None:
                continue
            rule = face_rule(self.mesh, f, order)
            phi = local.face_bases[i].eval_vector(rule.points)
            traction = self.case.traction_values(tag, rule.points, 1.0)
            loads[local.face_slice(i)] = np.einsum("q,qid,qd->i", rule.weights, phi, traction)
        return loads

    def dirichlet_values(self, load_factor: float) -> np.ndarray:
        """Значения Pi^k_F(u_d) на гранях Дирихле (нули на остальных)."""
        return load_factor * self._dirichlet_unit

    def external_loads(self, cell: int, load_factor: float) -> np.ndarray:
        """Локальный вектор внешних сил ячейки."""
        return load_factor * self._loads_unit[cell]

    def apply_dirichlet(self, state: DiscreteState, load_factor: float) -> DiscreteState:
        """Копия состояния с точными значениями на гранях Дирихле."""
        result = state.copy()
        result.face_coeffs[self.dirichlet_dofs] = self.dirichlet_values(load_factor)[self.dirichlet_dofs]
        return result

    def cell_residual(self, state: DiscreteState, cell: int, load_factor: float) -> np.ndarray:
        ops = self.operators[cell]
        return local_residual(
            ops, self.local_vector(state, cell), self.law, self.beta, self.external_loads(cell, load_factor)
        )

    def cell_system(
        self, state: DiscreteState, cell: int, load_factor: float
    ) -> tuple[np.ndarray, np.ndarray]:
        """Локальные невязка и касательная матрица ячейки.

        Raises:
            NonPositiveJacobianError: Если det F_T <= 0
        """
        ops = self.operators[cell]
        dofs = self.local_vector(state, cell)
        response = evaluate_material(ops, dofs, self.law)
        R = local_residual(
            ops, dofs, self.law, self.beta, self.external_loads(cell, load_factor), response
        )
        K = local_tangent(ops, dofs, self.law, self.beta, response)
        return R, K

    def _map_cells(self, work):
        cells = range(self.mesh.n_cells)
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(work, cells))
        return [work(c) for c in cells]

    def residuals(self, state: DiscreteState, load_factor: float) -> list[np.ndarray]:
        """Локальные невязки всех ячеек."""
        return self._map_cells(lambda c: self.cell_residual(state, c, load_factor))

    def condensed_blocks(self, state: DiscreteState, load_factor: float) -> list[CondensedBlock]:
        """Поячеечная фаза: невязка, касательная матрица и конденсация.

        Raises:
            NonPositiveJacobianError: Если det F_T <= 0 в какой-либо ячейке
            FactorizationError: Если блок ячейки вырожден
        """

        def work(cell: int) -> CondensedBlock:
            R, K = self.cell_system(state, cell, load_factor)
            return condense(K, R, self.n_cell, cell)

        return self._map_cells(work)

    def assemble(self, state: DiscreteState, load_factor: float) -> CondensedSystem:
        """Собирает глобальную систему для шага Ньютона к load_factor.

        Приращение на гранях Дирихле равно разности целевых значений и
        текущего состояния; его вклад переносится в правую часть.
        """
        target = self.dirichlet_values(load_factor)
        increment = np.zeros(self.n_face_dofs)
        increment[self.dirichlet_dofs] = target[self.dirichlet_dofs] - state.face_coeffs[self.dirichlet_dofs]
        blocks = self.condensed_blocks(state, load_factor)
        return assemble_global(self, blocks, increment)


def assemble_global(
    problem: DiscreteProblem, blocks: list[CondensedBlock], dirichlet_increment: np.ndarray
) -> CondensedSystem:
    """Собирает сконденсированные блоки в глобальную систему на свободные грани.

    Args:
        problem: Дискретная задача (нумерация неизвестных)
        blocks: Блоки конденсации по ячейкам
        dirichlet_increment: Приращение на всех неизвестных граней
            (ненулевое только на гранях Дирихле)

    Returns:
        CondensedSystem

    Raises:
        ValueError: Если размер блока не согласован с числом неизвестных граней
    """
    n = problem.n_face_dofs
    rows, cols, vals = [], [], []
    residual = np.zeros(n)
    cell_norm_sq = 0.0
    for cell, block in enumerate(blocks):
        dofs = problem.cell_face_dofs(cell)
        if block.matrix.shape != (len(dofs), len(dofs)):
            raise ValueError(
                f"Condensed block of cell {cell} has shape {block.matrix.shape}, "
                f"expected {(len(dofs), len(dofs))}"
            )
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(block.matrix.ravel())
        local_increment = dirichlet_increment[dofs]
        residual[dofs] += block.residual + block.matrix @ local_increment
        cell_norm_sq += float(np.sum((block.cell_residual + block.cell_coupling @ local_increment) ** 2))

    full = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    free = problem.free_dofs
    matrix = full[free][:, free].tocsr()
    rhs = -residual[free]
    norm = float(np.sqrt(np.sum(rhs**2) + cell_norm_sq))
    return CondensedSystem(
        matrix=matrix,
        rhs=rhs,
        free_dofs=free,
        dirichlet_dofs=problem.dirichlet_dofs,
        dirichlet_increment=dirichlet_increment,
        blocks=blocks,
        residual_norm=norm,
    )
