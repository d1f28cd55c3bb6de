"""Локальные операторы HHO: проекции, реконструкции и стабилизация.

Локальные неизвестные ячейки упорядочены так: сначала коэффициенты
векторного полинома ячейки степени k, затем коэффициенты векторных
полиномов граней в локальном порядке граней ячейки.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, solve

from hho_hyperelastic.basis import (
    CellBasis,
    FaceBasis,
    GradSpace,
    TensorBasis,
    build_tensor_basis,
    factorize_mass,
    mass_matrix,
)
from hho_hyperelastic.exceptions import FactorizationError
from hho_hyperelastic.logging import get_logger
from hho_hyperelastic.mesh import CellGeometry, Mesh
from hho_hyperelastic.quadrature import MAX_ORDER, QuadratureRule, cell_rule, face_rule
from hho_hyperelastic.types import TensorField, VectorField

THREADS_ENV = "HHO_NUM_THREADS"


class LocalSpace:
    """Базисы и квадратуры ячейки для построения локальных операторов.

    Квадратуры порядка 2k + 2 интегрируют точно все полиномиальные
    подынтегральные выражения локальных задач.

    Attributes:
        mesh: Сетка
        cell: Индекс ячейки
        k: Степень полиномов ячейки и граней
        geometry: Геометрия ячейки
        faces: Глобальные индексы граней в локальном порядке
    """

    def __init__(self, mesh: Mesh, cell: int, k: int) -> None:
        if k < 1:
            raise ValueError("Polynomial degree k must be >= 1")
        self.mesh = mesh
        self.cell = cell
        self.k = k
        self.dim = mesh.dim
        self.geometry: CellGeometry = mesh.geometries[cell]
        self.faces = mesh.cell_faces[cell]
        self.order = 2 * k + 2
        self.cell_basis = CellBasis.for_cell(self.geometry, k)
        self.reconstruction_basis = CellBasis.for_cell(self.geometry, k + 1)
        self.face_bases = [FaceBasis.for_face(mesh.face_vertices(f), k) for f in self.faces]
        self.cell_rule = cell_rule(mesh, cell, self.order)
        self.face_rules = [face_rule(mesh, f, self.order) for f in self.faces]

    @property
    def n_cell(self) -> int:
        """Число коэффициентов ячейки."""
        return self.cell_basis.vector_size

    @property
    def n_face(self) -> int:
        """Число коэффициентов одной грани."""
        return self.face_bases[0].vector_size

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def size(self) -> int:
        """Полное число локальных неизвестных."""
        return self.n_cell + self.n_faces * self.n_face

    def face_slice(self, i: int) -> slice:
        start = self.n_cell + i * self.n_face
        return slice(start, start + self.n_face)

    @cached_property
    def cell_mass(self) -> np.ndarray:
        return mass_matrix(self.cell_basis, self.cell_rule, vector=True)

    @cached_property
    def cell_mass_factor(self) -> tuple[np.ndarray, bool]:
        return factorize_mass(self.cell_mass, self.cell)

    @cached_property
    def face_masses(self) -> list[np.ndarray]:
        return [mass_matrix(b, r, vector=True) for b, r in zip(self.face_bases, self.face_rules)]

    @cached_property
    def face_mass_factors(self) -> list[tuple[np.ndarray, bool]]:
        return [factorize_mass(m, self.cell) for m in self.face_masses]

    @cached_property
    def cell_values(self) -> np.ndarray:
        """Векторный базис ячейки в узлах ячейки, (nq, n_cell, d)."""
        return self.cell_basis.eval_vector(self.cell_rule.points)

    @cached_property
    def cell_gradients(self) -> np.ndarray:
        """Градиенты векторного базиса ячейки, (nq, n_cell, d, d)."""
        return self.cell_basis.grad_vector(self.cell_rule.points)

    @cached_property
    def cell_traces(self) -> list[np.ndarray]:
        """Векторный базис ячейки в узлах каждой грани."""
        return [self.cell_basis.eval_vector(r.points) for r in self.face_rules]

    @cached_property
    def face_values(self) -> list[np.ndarray]:
        """Векторный базис грани в ее узлах."""
        return [b.eval_vector(r.points) for b, r in zip(self.face_bases, self.face_rules)]

    @cached_property
    def reconstruction_values(self) -> np.ndarray:
        return self.reconstruction_basis.eval_vector(self.cell_rule.points)

    @cached_property
    def reconstruction_gradients(self) -> np.ndarray:
        return self.reconstruction_basis.grad_vector(self.cell_rule.points)

    @cached_property
    def reconstruction_traces(self) -> list[np.ndarray]:
        return [self.reconstruction_basis.eval_vector(r.points) for r in self.face_rules]

    def cell_displacement(self, coeffs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Значения полинома ячейки в точках, массив (n, d)."""
        return np.einsum("qid,i->qd", self.cell_basis.eval_vector(points), coeffs)


@dataclass
class LocalDofs:
    """Локальные неизвестные ячейки.

    Attributes:
        cell_coeffs: Коэффициенты P^k_d(T; R^d)
        face_coeffs: Коэффициенты P^k_{d-1}(F; R^d) граней в локальном порядке
    """

    cell_coeffs: np.ndarray
    face_coeffs: list[np.ndarray]

    def as_vector(self) -> np.ndarray:
        """Конкатенация: блок ячейки, затем грани."""
        return np.concatenate([self.cell_coeffs, *self.face_coeffs])

    @classmethod
    def from_vector(cls, local: LocalSpace, vector: np.ndarray) -> LocalDofs:
        if len(vector) != local.size:
            raise ValueError(f"Expected {local.size} local coefficients, got {len(vector)}")
        return cls(
            cell_coeffs=np.array(vector[: local.n_cell]),
            face_coeffs=[np.array(vector[local.face_slice(i)]) for i in range(local.n_faces)],
        )


def _projection_order(k: int, order: int | None) -> int:
    return min(order if order is not None else 2 * k + 4, MAX_ORDER)


def project_cell(v: VectorField, local: LocalSpace, order: int | None = None) -> np.ndarray:
    """L^2-проекция векторного поля на P^k(T; R^d).

    Args:
        v: Поле X -> v(X), массив точек (n, d) -> (n, d)
        local: Локальное пространство ячейки
        order: Порядок квадратуры правой части (по умолчанию 2k + 4)

    Returns:
        Коэффициенты проекции

    Raises:
        FactorizationError: Если матрица масс не факторизуется
    """
    rule = cell_rule(local.mesh, local.cell, _projection_order(local.k, order))
    rhs = np.einsum("q,qid,qd->i", rule.weights, local.cell_basis.eval_vector(rule.points), v(rule.points))
    return cho_solve(local.cell_mass_factor, rhs)


def project_face(v: VectorField, local: LocalSpace, face: int, order: int | None = None) -> np.ndarray:
    """L^2-проекция векторного поля на P^k(F; R^d) локальной грани face."""
    rule = face_rule(local.mesh, int(local.faces[face]), _projection_order(local.k, order))
    basis = local.face_bases[face]
    rhs = np.einsum("q,qid,qd->i", rule.weights, basis.eval_vector(rule.points), v(rule.points))
    return cho_solve(local.face_mass_factors[face], rhs)


def reduction(v: VectorField, local: LocalSpace, order: int | None = None) -> LocalDofs:
    """Оператор редукции: проекции поля на ячейку и на каждую грань."""
    return LocalDofs(
        cell_coeffs=project_cell(v, local, order),
        face_coeffs=[project_face(v, local, i, order) for i in range(local.n_faces)],
    )


def trace_reduction(v: VectorField, local: LocalSpace, order: int | None = None) -> LocalDofs:
    """Модифицированная редукция: грани получают проекцию следа Pi^k_T(v)."""
    cell_coeffs = project_cell(v, local, order)
    faces = []
    for i in range(local.n_faces):
        w = local.face_rules[i].weights
        trace = np.einsum("qjd,j->qd", local.cell_traces[i], cell_coeffs)
        rhs = np.einsum("q,qid,qd->i", w, local.face_values[i], trace)
        faces.append(cho_solve(local.face_mass_factors[i], rhs))
    return LocalDofs(cell_coeffs=cell_coeffs, face_coeffs=faces)


def _gradient_system(local: LocalSpace, basis: TensorBasis) -> tuple[np.ndarray, np.ndarray]:
    """Матрица масс пространства реконструкции и правая часть задачи для G_T."""
    rule = local.cell_rule
    tau = basis.eval(rule.points)
    mass = np.einsum("q,qiab,qjab->ij", rule.weights, tau, tau)
    rhs = np.zeros((basis.size, local.size))
    rhs[:, : local.n_cell] = np.einsum("q,qiab,qjab->ij", rule.weights, tau, local.cell_gradients)
    for i, frule in enumerate(local.face_rules):
        normal = local.geometry.face_normals[i]
        tau_n = np.einsum("qiab,b->qia", basis.eval(frule.points), normal)
        rhs[:, : local.n_cell] -= np.einsum("q,qia,qja->ij", frule.weights, tau_n, local.cell_traces[i])
        rhs[:, local.face_slice(i)] = np.einsum(
            "q,qia,qja->ij", frule.weights, tau_n, local.face_values[i]
        )
    return mass, rhs


def build_gradient_reconstruction(
    local: LocalSpace, space: GradSpace
) -> tuple[np.ndarray, TensorBasis, np.ndarray]:
    """Строит матрицу реконструкции градиента G_T.

    (G_T(v), tau)_T = (grad v_T, tau)_T + (v_dT - v_T, tau n_T)_dT
    для всех tau из пространства реконструкции.

    Args:
        local: Локальное пространство ячейки
        space: Пространство реконструкции

    Returns:
        Кортеж (G, базис пространства, матрица масс пространства)

    Raises:
        FactorizationError: Если матрица масс не факторизуется
    """
    basis = build_tensor_basis(local.geometry, local.k, space)
    mass, rhs = _gradient_system(local, basis)
    G = cho_solve(factorize_mass(mass, local.cell), rhs)
    return G, basis, mass


def build_displacement_reconstruction(local: LocalSpace) -> np.ndarray:
    """Строит матрицу реконструкции перемещения D^{k+1}_T.

    Решается задача Неймана
    (grad D(v), grad w)_T = (grad v_T, grad w)_T + (v_dT - v_T, grad w n_T)_dT,
    постоянные моды фиксируются условием равенства средних D(v) и v_T
    (соответствующие строки системы заменяются этим условием).

    Returns:
        Матрица (d dim P^{k+1}_d, local.size)

    Raises:
        FactorizationError: Если локальная система вырождена
    """
    rule = local.cell_rule
    grads = local.reconstruction_gradients
    stiffness = np.einsum("q,qiab,qjab->ij", rule.weights, grads, grads)
    rhs = np.zeros((len(stiffness), local.size))
    rhs[:, : local.n_cell] = np.einsum("q,qiab,qjab->ij", rule.weights, grads, local.cell_gradients)
    for i, frule in enumerate(local.face_rules):
        normal = local.geometry.face_normals[i]
        grad_n = np.einsum(
            "qiab,b->qia", local.reconstruction_basis.grad_vector(frule.points), normal
        )
        rhs[:, : local.n_cell] -= np.einsum("q,qia,qja->ij", frule.weights, grad_n, local.cell_traces[i])
        rhs[:, local.face_slice(i)] = np.einsum(
            "q,qia,qja->ij", frule.weights, grad_n, local.face_values[i]
        )

    m = local.reconstruction_basis.size
    for c in range(local.dim):
        row = c * m
        stiffness[row] = rule.weights @ local.reconstruction_values[:, :, c]
        rhs[row] = 0.0
        rhs[row, : local.n_cell] = rule.weights @ local.cell_values[:, :, c]
    try:
        return solve(stiffness, rhs)
    except LinAlgError as e:
        raise FactorizationError(
            f"Displacement reconstruction system is singular: {e}", cell=local.cell
        ) from e


@dataclass(frozen=True)
class Stabilization:
    """Стабилизация и связанные операторы на границе ячейки.

    Attributes:
        S: Матрица S_dT (сложенные коэффициенты граней x local.size)
        gram: S^T Gamma S, Gamma - массы граней с весом h_F^{-1}
        S_hat: Матрица S_hat, действующая на v_dT - v_T|dT
        S_hat_adjoint: L^2(dT)-сопряженный к S_hat
        weights: Блочная матрица Gamma
    """

    S: np.ndarray
    gram: np.ndarray
    S_hat: np.ndarray
    S_hat_adjoint: np.ndarray
    weights: np.ndarray


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    size = sum(len(b) for b in blocks)
    out = np.zeros((size, size))
    start = 0
    for block in blocks:
        stop = start + len(block)
        out[start:stop, start:stop] = block
        start = stop
    return out


def build_stabilization(local: LocalSpace, D: np.ndarray | None = None) -> Stabilization:
    """Строит оператор стабилизации.

    S_dT(v) = Pi^k_dT(v_dT - D(v)|dT - (v_T - Pi^k_T D(v))|dT).

    Args:
        local: Локальное пространство ячейки
        D: Матрица реконструкции перемещения (строится, если не задана)

    Returns:
        Stabilization с матрицами S, S^T Gamma S, S_hat и его сопряженным
    """
    if D is None:
        D = build_displacement_reconstruction(local)
    rule = local.cell_rule
    n_cell, n_face = local.n_cell, local.n_face
    cross = np.einsum("q,qid,qjd->ij", rule.weights, local.cell_values, local.reconstruction_values)
    proj_cell_D = cho_solve(local.cell_mass_factor, cross)

    # v_T - Pi^k_T D(v) как оператор на локальных неизвестных
    cell_defect = -proj_cell_D @ D
    cell_defect[:, :n_cell] += np.eye(n_cell)

    S = np.zeros((local.n_faces * n_face, local.size))
    for i, frule in enumerate(local.face_rules):
        w = frule.weights
        face_vals = local.face_values[i]
        c_fd = np.einsum("q,qid,qjd->ij", w, face_vals, local.reconstruction_traces[i])
        c_ft = np.einsum("q,qid,qjd->ij", w, face_vals, local.cell_traces[i])
        rows = slice(i * n_face, (i + 1) * n_face)
        S[rows] = -cho_solve(local.face_mass_factors[i], c_fd @ D + c_ft @ cell_defect)
        S[rows, local.face_slice(i)] += np.eye(n_face)

    weights = _block_diag(
        [m / h for m, h in zip(local.face_masses, local.geometry.face_diameters)]
    )
    gram = S.T @ weights @ S

    # S(v) = S_hat(v_dT - v_T|dT): столбцы граней S совпадают с S_hat
    S_hat = S[:, n_cell:]
    face_mass = _block_diag(local.face_masses)
    S_hat_adjoint = solve(face_mass, S_hat.T @ face_mass, assume_a="pos")
    return Stabilization(S=S, gram=0.5 * (gram + gram.T), S_hat=S_hat, S_hat_adjoint=S_hat_adjoint, weights=weights)


def stabilization_hat(local: LocalSpace, D: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Возвращает S_hat и его L^2(dT)-сопряженный оператор."""
    stab = build_stabilization(local, D)
    return stab.S_hat, stab.S_hat_adjoint


def seminorm_gram(local: LocalSpace) -> np.ndarray:
    """Матрица полунормы деформаций.

    |v|^2 = ||grad v_T||^2_T + sum_F h_F^{-1} ||v_T - v_F||^2_F.

    Returns:
        Симметричная положительно полуопределенная матрица (size, size)
    """
    rule = local.cell_rule
    n_cell = local.n_cell
    gram = np.zeros((local.size, local.size))
    gram[:n_cell, :n_cell] = np.einsum(
        "q,qiab,qjab->ij", rule.weights, local.cell_gradients, local.cell_gradients
    )
    for i, frule in enumerate(local.face_rules):
        weight = 1.0 / local.geometry.face_diameters[i]
        w = frule.weights
        trace, face_vals = local.cell_traces[i], local.face_values[i]
        fs = local.face_slice(i)
        gram[:n_cell, :n_cell] += weight * np.einsum("q,qid,qjd->ij", w, trace, trace)
        coupling = weight * np.einsum("q,qid,qjd->ij", w, trace, face_vals)
        gram[:n_cell, fs] -= coupling
        gram[fs, :n_cell] -= coupling.T
        gram[fs, fs] += weight * local.face_masses[i]
    return gram


@dataclass(frozen=True, eq=False)
class LocalOperators:
    """Локальные операторы ячейки.

    Attributes:
        local: Локальное пространство ячейки
        space: Пространство реконструкции градиента
        G: Матрица G_T (размер пространства x local.size)
        D: Матрица D^{k+1}_T
        stabilization: Стабилизация (S, S^T Gamma S, S_hat и сопряженный)
        seminorm_gram: Матрица полунормы деформаций
        tensor_basis: Базис пространства реконструкции
        mass_R: Матрица масс пространства реконструкции
        quad_rule: Квадратура нелинейных интегралов
        tensor_values: Тензорный базис в узлах quad_rule, (nq, NG, d, d)
    """

    local: LocalSpace
    space: GradSpace
    G: np.ndarray
    D: np.ndarray
    stabilization: Stabilization
    seminorm_gram: np.ndarray
    tensor_basis: TensorBasis
    mass_R: np.ndarray
    quad_rule: QuadratureRule
    tensor_values: np.ndarray

    @property
    def cell(self) -> int:
        return self.local.cell

    @property
    def S(self) -> np.ndarray:
        return self.stabilization.S

    @cached_property
    def mass_R_factor(self) -> tuple[np.ndarray, bool]:
        return factorize_mass(self.mass_R, self.cell)

    def deformation_gradients(self, dofs: np.ndarray) -> np.ndarray:
        """F_T = I + G_T(dofs) в узлах quad_rule, массив (nq, d, d)."""
        grad = np.einsum("qiab,i->qab", self.tensor_values, self.G @ dofs)
        return grad + np.eye(self.local.dim)

    def gradient_at(self, dofs: np.ndarray, points: np.ndarray) -> np.ndarray:
        """Значения G_T(dofs) в произвольных точках, массив (n, d, d)."""
        return np.einsum("qiab,i->qab", self.tensor_basis.eval(points), self.G @ dofs)

    def project_values(self, values: np.ndarray) -> np.ndarray:
        """Pi^R по значениям тензорного поля в узлах quad_rule."""
        rhs = np.einsum("q,qiab,qab->i", self.quad_rule.weights, self.tensor_values, values)
        return cho_solve(self.mass_R_factor, rhs)


def project_tensor(
    field: TensorField, ops: LocalOperators, order: int | None = None
) -> np.ndarray:
    """L^2-проекция Pi^R_T тензорного поля на пространство реконструкции.

    Args:
        field: Поле X -> (n, d, d)
        ops: Локальные операторы ячейки
        order: Порядок квадратуры (по умолчанию 2k + 4)

    Returns:
        Коэффициенты в базисе ops.tensor_basis
    """
    local = ops.local
    rule = cell_rule(local.mesh, local.cell, _projection_order(local.k, order))
    rhs = np.einsum("q,qiab,qab->i", rule.weights, ops.tensor_basis.eval(rule.points), field(rule.points))
    return cho_solve(ops.mass_R_factor, rhs)


def nonlinear_order(k: int, space: GradSpace, override: int | None = None) -> int:
    """Порядок квадратуры нелинейных интегралов: 2k (P^k) или 2k + 2."""
    if override is not None:
        return override
    return 2 * k if space is GradSpace.PK else 2 * k + 2


def build_local_operators(
    mesh: Mesh, cell: int, k: int, space: GradSpace, quadrature_order: int | None = None
) -> LocalOperators:
    """Строит все локальные операторы ячейки.

    Args:
        mesh: Сетка
        cell: Индекс ячейки
        k: Степень
        space: Пространство реконструкции градиента
        quadrature_order: Порядок квадратуры нелинейных интегралов

    Returns:
        LocalOperators
    """
    local = LocalSpace(mesh, cell, k)
    G, basis, mass = build_gradient_reconstruction(local, space)
    D = build_displacement_reconstruction(local)
    stab = build_stabilization(local, D)
    rule = cell_rule(mesh, cell, nonlinear_order(k, space, quadrature_order))
    return LocalOperators(
        local=local,
        space=space,
        G=G,
        D=D,
        stabilization=stab,
        seminorm_gram=seminorm_gram(local),
        tensor_basis=basis,
        mass_R=mass,
        quad_rule=rule,
        tensor_values=basis.eval(rule.points),
    )


def thread_count() -> int:
    """Число потоков поячеечной фазы из переменной HHO_NUM_THREADS."""
    value = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(value))
    except ValueError:
        get_logger("operators").warning(f"Ignoring invalid {THREADS_ENV}={value!r}")
        return 1


class OperatorCache:
    """Локальные операторы всех ячеек сетки, построенные один раз.

    Операторы зависят только от геометрии и переиспользуются на всех
    итерациях Ньютона и шагах нагрузки.

    Attributes:
        mesh: Сетка
        k: Степень
        space: Пространство реконструкции градиента
    """

    def __init__(
        self,
        mesh: Mesh,
        k: int,
        space: GradSpace,
        quadrature_order: int | None = None,
        threads: int | None = None,
    ) -> None:
        self.mesh = mesh
        self.k = k
        self.space = space
        self.quadrature_order = quadrature_order
        threads = threads or thread_count()
        logger = get_logger("operators")
        logger.debug(f"Building {space.value} operators, k={k}, {mesh.n_cells} cells")

        def build(cell: int) -> LocalOperators:
            return build_local_operators(mesh, cell, k, space, quadrature_order)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                self._operators = list(pool.map(build, range(mesh.n_cells)))
        else:
            self._operators = [build(c) for c in range(mesh.n_cells)]

    def __getitem__(self, cell: int) -> LocalOperators:
        return self._operators[cell]

    def __len__(self) -> int:
        return len(self._operators)

    def __iter__(self):
        return iter(self._operators)

    @property
    def face_size(self) -> int:
        """Число коэффициентов одной грани."""
        return self._operators[0].local.n_face

    @property
    def cell_size(self) -> int:
        return self._operators[0].local.n_cell
