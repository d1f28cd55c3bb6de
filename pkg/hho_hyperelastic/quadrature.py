"""Квадратурные формулы на симплексах.

Правила строятся как тензорные произведения формул Гаусса-Якоби в
коллапсированных координатах (преобразование Даффи): для порядка p на
каждое направление берется ceil((p + 1) / 2) узлов с весом Якоби,
поглощающим якобиан коллапса. Такое правило точно для любого порядка до
MAX_ORDER и имеет положительные веса и узлы внутри симплекса, но число
узлов растет как n^d: для тетраэдра при p = 8 это 125 узлов против 45
у табличного симметричного правила Keast. Узлы и веса кэшируются по
(dim, order), поэтому лишние узлы стоят только при вычислении интегралов.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from hho_hyperelastic.exceptions import QuadratureError
from hho_hyperelastic.mesh import Mesh

MAX_ORDER = 20


@dataclass(frozen=True)
class QuadratureRule:
    """Квадратурная формула.

    Attributes:
        points: Узлы, массив (n, dim)
        weights: Веса, массив (n,); сумма равна мере элемента
        order: Порядок точности (точна для полиномов степени <= order)
    """

    points: np.ndarray
    weights: np.ndarray
    order: int

    def __post_init__(self) -> None:
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights must have the same length")
        self.points.setflags(write=False)
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Интегрирует значения в узлах (первая ось - узлы)."""
        return np.tensordot(self.weights, values, axes=(0, 0))


def _gauss_jacobi(n: int, alpha: int) -> tuple[np.ndarray, np.ndarray]:
    """Узлы и веса Гаусса-Якоби на [0, 1] с весом (1 - t)^alpha."""
    x, w = roots_jacobi(n, alpha, 0)
    return (x + 1.0) / 2.0, w / 2.0 ** (alpha + 1)


@lru_cache(maxsize=None)
def simplex_rule(dim: int, order: int) -> QuadratureRule:
    """Возвращает формулу на эталонном симплексе с вершинами 0, e_1, ..., e_dim.

    Используется коническое произведение одномерных формул Гаусса-Якоби
    (преобразование Даффи); все веса положительны, узлы внутренние.

    Args:
        dim: Размерность симплекса (1, 2 или 3)
        order: Требуемый порядок точности (0 <= order <= 20)

    Returns:
        QuadratureRule на эталонном симплексе

    Raises:
        QuadratureError: Если порядок вне таблицы или размерность не поддерживается
    """
    if dim not in (1, 2, 3):
        raise QuadratureError(f"Unsupported simplex dimension {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise QuadratureError(f"Quadrature order {order} outside the table [0, {MAX_ORDER}]")
    n = order // 2 + 1
    # Якобиан коллапса: (1 - s_1)^(dim - 1) (1 - s_2)^(dim - 2) ...
    factors = [_gauss_jacobi(n, dim - 1 - axis) for axis in range(dim)]
    grids = np.meshgrid(*[f[0] for f in factors], indexing="ij")
    s = np.stack([g.ravel() for g in grids], axis=1)
    weights = np.ones(1)
    for _, w in factors:
        weights = np.outer(weights, w).ravel()

    points = np.empty_like(s)
    scale = np.ones(len(s))
    for axis in range(dim):
        points[:, axis] = s[:, axis] * scale
        scale = scale * (1.0 - s[:, axis])
    return QuadratureRule(points=points, weights=weights, order=order)


def map_rule(rule: QuadratureRule, vertices: np.ndarray) -> QuadratureRule:
    """Переносит эталонную формулу на аффинный симплекс.

    Для грани (симплекс меньшей размерности, чем пространство) веса
    масштабируются корнем из определителя матрицы Грама.

    Args:
        rule: Формула на эталонном симплексе
        vertices: Вершины физического симплекса, массив (m + 1, D)

    Returns:
        QuadratureRule в физических координатах

    Raises:
        QuadratureError: Если симплекс вырожден
    """
    vertices = np.asarray(vertices, dtype=float)
    edges = vertices[1:] - vertices[0]
    if edges.shape[0] != rule.points.shape[1]:
        raise QuadratureError("Rule dimension does not match the simplex")
    if edges.shape[0] == edges.shape[1]:
        jac = abs(float(np.linalg.det(edges)))
    else:
        jac = math.sqrt(max(float(np.linalg.det(edges @ edges.T)), 0.0))
    size = float(np.max(np.linalg.norm(edges, axis=1)))
    if jac <= 1e-14 * size ** edges.shape[0]:
        raise QuadratureError("Cannot map a quadrature rule onto a degenerate simplex")
    points = vertices[0] + rule.points @ edges
    weights = rule.weights * jac
    return QuadratureRule(points=points, weights=weights, order=rule.order)


def cell_rule(mesh: Mesh, cell: int, order: int) -> QuadratureRule:
    """Формула порядка order на ячейке сетки."""
    return map_rule(simplex_rule(mesh.dim, order), mesh.cell_vertices(cell))


def face_rule(mesh: Mesh, face: int, order: int) -> QuadratureRule:
    """Формула порядка order на грани сетки.

    Узлы не зависят от ячейки, с которой рассматривается грань.
    """
    return map_rule(simplex_rule(mesh.dim - 1, order), mesh.face_vertices(face))
