"""Полиномиальные базисы на ячейках и гранях.

Скалярные базисы - масштабированные смещенные мономы
((x - x_B) / (h / 2))^alpha в градуированно-лексикографическом порядке.
Векторные и тензорные базисы упорядочены по компонентам: функция
с номером c * m + i равна phi_i e_c (m - размер скалярного базиса).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from itertools import product

import numpy as np
from scipy.linalg import LinAlgError, cho_factor

from hho_hyperelastic.exceptions import FactorizationError
from hho_hyperelastic.mesh import CellGeometry
from hho_hyperelastic.quadrature import QuadratureRule


class GradSpace(Enum):
    """Пространство реконструкции градиента.

    Attributes:
        PK: P^k(T; R^{d x d}) (стабилизированный метод)
        PKP1: P^{k+1}(T; R^{d x d})
        RTN: Построчное пространство Равьяра-Тома-Неделека RTN^k
    """

    PK = "Pk_tensor"
    PKP1 = "Pkp1_tensor"
    RTN = "RTN_k"


def poly_dim(dim: int, degree: int) -> int:
    """Размерность P^degree_dim = C(degree + dim, dim)."""
    if degree < 0:
        return 0
    return math.comb(degree + dim, dim)


@lru_cache(maxsize=None)
def monomial_exponents(dim: int, degree: int) -> np.ndarray:
    """Мультииндексы степени <= degree в градуированно-лексикографическом порядке."""
    exponents = [
        alpha
        for total in range(degree + 1)
        for alpha in product(range(total, -1, -1), repeat=dim)
        if sum(alpha) == total
    ]
    result = np.array(exponents, dtype=np.int64).reshape(-1, dim)
    result.setflags(write=False)
    return result


@lru_cache(maxsize=None)
def homogeneous_exponents(dim: int, degree: int) -> np.ndarray:
    """Мультииндексы степени ровно degree."""
    exponents = monomial_exponents(dim, degree)
    return exponents[exponents.sum(axis=1) == degree]


def _monomials(exponents: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Значения мономов в масштабированных координатах, массив (n, m)."""
    return np.prod(xi[:, None, :] ** exponents[None, :, :], axis=2)


def _monomial_gradients(exponents: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Градиенты мономов по масштабированным координатам, массив (n, m, dim)."""
    n_dim = exponents.shape[1]
    grads = np.empty((len(xi), len(exponents), n_dim))
    for j in range(n_dim):
        lowered = exponents.copy()
        lowered[:, j] = np.maximum(lowered[:, j] - 1, 0)
        grads[:, :, j] = exponents[None, :, j] * _monomials(lowered, xi)
    return grads


@dataclass(frozen=True, eq=False)
class CellBasis:
    """Скалярный базис масштабированных мономов на ячейке.

    Attributes:
        dim: Размерность пространства
        degree: Степень k
        center: Центр (барицентр ячейки)
        scale: Масштаб h_T / 2
    """

    dim: int
    degree: int
    center: np.ndarray
    scale: float

    @classmethod
    def for_cell(cls, geometry: CellGeometry, degree: int) -> CellBasis:
        return cls(len(geometry.barycenter), degree, geometry.barycenter, geometry.diameter / 2.0)

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.dim, self.degree)

    @property
    def size(self) -> int:
        """Число скалярных функций dim P^k_d."""
        return poly_dim(self.dim, self.degree)

    @property
    def vector_size(self) -> int:
        return self.dim * self.size

    def local_coordinates(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.center) / self.scale

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Значения функций в точках, массив (n, size)."""
        return _monomials(self.exponents, self.local_coordinates(points))

    def grad(self, points: np.ndarray) -> np.ndarray:
        """Градиенты функций в точках, массив (n, size, dim)."""
        return _monomial_gradients(self.exponents, self.local_coordinates(points)) / self.scale

    def eval_vector(self, points: np.ndarray) -> np.ndarray:
        """Значения векторного базиса, массив (n, dim * size, dim)."""
        return _vectorize(self.eval(points), self.dim)

    def grad_vector(self, points: np.ndarray) -> np.ndarray:
        """Градиенты векторного базиса, массив (n, dim * size, dim, dim)."""
        scalar = self.grad(points)
        n, m, d = scalar.shape
        out = np.zeros((n, d * m, d, d))
        for c in range(d):
            out[:, c * m : (c + 1) * m, c, :] = scalar
        return out


def _vectorize(values: np.ndarray, dim: int) -> np.ndarray:
    n, m = values.shape
    out = np.zeros((n, dim * m, dim))
    for c in range(dim):
        out[:, c * m : (c + 1) * m, c] = values
    return out


def eval_cell_basis(basis: CellBasis, point: np.ndarray) -> np.ndarray:
    """Значения всех скалярных функций базиса в одной точке."""
    return basis.eval(np.asarray(point, dtype=float))[0]


def eval_cell_basis_gradients(basis: CellBasis, point: np.ndarray) -> np.ndarray:
    """Градиенты всех скалярных функций базиса в одной точке, массив (size, dim)."""
    return basis.grad(np.asarray(point, dtype=float))[0]


def face_frame(vertices: np.ndarray) -> np.ndarray:
    """Ортонормированный касательный репер грани, массив (dim - 1, dim).

    Строится процессом Грама-Шмидта по ребрам из первой вершины; порядок
    вершин задается вызывающим кодом (возрастание глобальных индексов).
    """
    edges = vertices[1:] - vertices[0]
    frame = []
    for edge in edges:
        t = edge - sum(np.dot(edge, f) * f for f in frame)
        frame.append(t / np.linalg.norm(t))
    return np.array(frame)


@dataclass(frozen=True, eq=False)
class FaceBasis:
    """Скалярный базис мономов от касательных координат грани.

    Attributes:
        degree: Степень k
        origin: Барицентр грани
        frame: Ортонормированный касательный репер (dim - 1, dim)
        scale: Масштаб h_F / 2
    """

    degree: int
    origin: np.ndarray
    frame: np.ndarray
    scale: float

    @classmethod
    def for_face(cls, vertices: np.ndarray, degree: int) -> FaceBasis:
        """Строит базис по вершинам грани (в порядке глобальных индексов)."""
        vertices = np.asarray(vertices, dtype=float)
        diameter = max(
            float(np.linalg.norm(p - q)) for i, p in enumerate(vertices) for q in vertices[i + 1 :]
        )
        return cls(degree, vertices.mean(axis=0), face_frame(vertices), diameter / 2.0)

    @property
    def dim(self) -> int:
        """Размерность объемлющего пространства."""
        return self.frame.shape[1]

    @property
    def exponents(self) -> np.ndarray:
        return monomial_exponents(self.dim - 1, self.degree)

    @property
    def size(self) -> int:
        return poly_dim(self.dim - 1, self.degree)

    @property
    def vector_size(self) -> int:
        return self.dim * self.size

    def local_coordinates(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.origin) @ self.frame.T / self.scale

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Значения функций в точках грани, массив (n, size)."""
        return _monomials(self.exponents, self.local_coordinates(points))

    def eval_vector(self, points: np.ndarray) -> np.ndarray:
        """Значения векторного базиса, массив (n, dim * size, dim)."""
        return _vectorize(self.eval(points), self.dim)


@dataclass(frozen=True, eq=False)
class TensorBasis:
    """Базис тензорного пространства реконструкции градиента.

    Для PK и PKP1 функции phi_i E_ab упорядочены по индексу (a * d + b) * m + i.
    Для RTN к базису P^k добавляются построчные функции h_j(xi) xi в строке a
    (h_j - однородные мономы степени k, xi - масштабированные координаты).

    Attributes:
        space: Тип пространства
        degree: Степень метода k
        cell_basis: Скалярный базис полиномиальной части
    """

    space: GradSpace
    degree: int
    cell_basis: CellBasis

    @property
    def dim(self) -> int:
        return self.cell_basis.dim

    @cached_property
    def homogeneous(self) -> np.ndarray:
        return homogeneous_exponents(self.dim, self.degree)

    @property
    def polynomial_size(self) -> int:
        return self.dim**2 * self.cell_basis.size

    @property
    def size(self) -> int:
        """Размерность пространства."""
        extra = self.dim * len(self.homogeneous) if self.space is GradSpace.RTN else 0
        return self.polynomial_size + extra

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Значения тензорных функций, массив (n, size, dim, dim)."""
        d = self.dim
        scalar = self.cell_basis.eval(points)
        n, m = scalar.shape
        out = np.zeros((n, self.size, d, d))
        for a in range(d):
            for b in range(d):
                block = (a * d + b) * m
                out[:, block : block + m, a, b] = scalar
        if self.space is GradSpace.RTN:
            xi = self.cell_basis.local_coordinates(points)
            hom = _monomials(self.homogeneous, xi)
            mh = hom.shape[1]
            offset = self.polynomial_size
            for a in range(d):
                out[:, offset + a * mh : offset + (a + 1) * mh, a, :] = hom[:, :, None] * xi[:, None, :]
        return out


def build_tensor_basis(geometry: CellGeometry, k: int, space: GradSpace) -> TensorBasis:
    """Строит базис пространства реконструкции градиента степени метода k."""
    poly_degree = k + 1 if space is GradSpace.PKP1 else k
    return TensorBasis(space, k, CellBasis.for_cell(geometry, poly_degree))


def build_rtn_basis(geometry: CellGeometry, k: int) -> TensorBasis:
    """Строит построчный базис RTN^k(T; R^{d x d}).

    Args:
        geometry: Геометрия ячейки
        k: Степень (k >= 1)

    Returns:
        TensorBasis размерности d^2 dim P^k_d + d dim H^k_d
    """
    if k < 1:
        raise ValueError("RTN reconstruction requires k >= 1")
    return build_tensor_basis(geometry, k, GradSpace.RTN)


def _flat_values(basis: CellBasis | FaceBasis | TensorBasis, points: np.ndarray, vector: bool) -> np.ndarray:
    if isinstance(basis, TensorBasis):
        values = basis.eval(points)
    elif vector:
        values = basis.eval_vector(points)
    else:
        values = basis.eval(points)
    return values.reshape(values.shape[0], values.shape[1], -1)


def mass_matrix(
    basis: CellBasis | FaceBasis | TensorBasis, rule: QuadratureRule, vector: bool = False
) -> np.ndarray:
    """Матрица Грама базиса в L^2 скалярном произведении.

    Args:
        basis: Базис (скалярный, векторный при vector=True, или тензорный)
        rule: Квадратура точности не ниже удвоенной степени базиса
        vector: Использовать векторный вариант скалярного базиса

    Returns:
        Симметричная матрица (size, size)
    """
    values = _flat_values(basis, rule.points, vector)
    return np.einsum("q,qip,qjp->ij", rule.weights, values, values)


def cross_mass_matrix(
    test: CellBasis | FaceBasis | TensorBasis,
    trial: CellBasis | FaceBasis | TensorBasis,
    rule: QuadratureRule,
    vector: bool = False,
) -> np.ndarray:
    """Матрица (test_i, trial_j) двух базисов одного типа значений."""
    left = _flat_values(test, rule.points, vector)
    right = _flat_values(trial, rule.points, vector)
    return np.einsum("q,qip,qjp->ij", rule.weights, left, right)


def factorize_mass(matrix: np.ndarray, cell: int | None = None) -> tuple[np.ndarray, bool]:
    """Факторизация Холецкого матрицы масс.

    Raises:
        FactorizationError: Если матрица не положительно определена
    """
    try:
        return cho_factor(matrix)
    except (LinAlgError, ValueError) as e:
        raise FactorizationError(f"Mass matrix factorization failed: {e}", cell=cell) from e
