"""Расчетные случаи: геометрия, закон материала, граничные условия и нагрузки.

Все данные нагрузки (перемещения Дирихле, поверхностные силы, объемная
сила) задаются при полной нагрузке и масштабируются коэффициентом
нагружения в [0, 1].
"""

from __future__ import annotations

import inspect
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

from hho_hyperelastic.exceptions import ConfigError
from hho_hyperelastic.material import (
    CavitationLaw,
    LinearElasticLaw,
    MaterialLaw,
    NeohookeanLaw,
    make_law,
)
from hho_hyperelastic.mesh import (
    Mesh,
    generate_annulus_mesh,
    generate_ball_mesh,
    generate_box_mesh,
    generate_cube_mesh,
    generate_hollow_cylinder_mesh,
    generate_square_mesh,
    load_gmsh,
)
from hho_hyperelastic.types import TensorField, VectorField

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

ANNULUS_INNER_RADIUS = 0.5
ANNULUS_OUTER_RADIUS = 1.0
CYLINDER_RADII = (0.75, 1.0)
CYLINDER_HEIGHT = 4.0
SPHERE_CAVITIES = (((-0.7, -0.7, 0.0), 0.15), ((0.25, 0.25, 0.25), 0.2))


def _zero(points: np.ndarray) -> np.ndarray:
    return np.zeros_like(np.asarray(points, dtype=float))


def _constant(value: tuple[float, ...]) -> VectorField:
    vector = np.asarray(value, dtype=float)

    def field_(points: np.ndarray) -> np.ndarray:
        return np.broadcast_to(vector, np.shape(points)).copy()

    return field_


@dataclass(frozen=True)
class CaseDefinition:
    """Описание расчетного случая.

    Attributes:
        name: Имя случая
        dim: Размерность
        law: Определяющее соотношение
        mesh_factory: Генератор сетки по уровню измельчения
        dirichlet: Тег -> перемещение u_d(X) при полной нагрузке
        neumann: Тег -> поверхностная сила T_n(X) (None: свободная граница)
        body_force: Объемная сила f(X) (None: нулевая)
        exact_displacement: Точное перемещение (если известно)
        exact_gradient: Точный градиент перемещения (если известен)
        load_steps: Рекомендуемое число шагов нагрузки
        beta0: Рекомендуемый масштаб стабилизации sHHO
        self_reference: Сравнивать ли с решением на мелкой сетке
        curved: Граница криволинейная (аппроксимируется плоскими гранями)
        description: Краткое описание
    """

    name: str
    dim: int
    law: MaterialLaw
    mesh_factory: Callable[[int], Mesh]
    dirichlet: Mapping[str, VectorField]
    neumann: Mapping[str, VectorField | None] = field(default_factory=dict)
    body_force: VectorField | None = None
    exact_displacement: VectorField | None = None
    exact_gradient: TensorField | None = None
    load_steps: int = 1
    beta0: float = 1.0
    self_reference: bool = False
    curved: bool = False
    description: str = ""

    def __post_init__(self) -> None:
        """Валидация ролей границ и точного решения."""
        if self.dim not in (2, 3):
            raise ValueError("dim must be 2 or 3")
        shared = set(self.dirichlet) & set(self.neumann)
        if shared:
            raise ValueError(f"Tags with both Dirichlet and Neumann roles: {sorted(shared)}")
        if (self.exact_displacement is None) != (self.exact_gradient is None):
            raise ValueError("exact_displacement and exact_gradient must be given together")
        if self.load_steps < 1:
            raise ValueError("load_steps must be >= 1")

    @property
    def has_exact(self) -> bool:
        return self.exact_displacement is not None

    @property
    def roles(self) -> dict[str, str]:
        """Роль каждого тега границы."""
        roles = {tag: DIRICHLET for tag in self.dirichlet}
        roles.update({tag: NEUMANN for tag in self.neumann})
        return roles

    def mesh(self, level: int, path: str | Path | None = None) -> Mesh:
        """Сетка уровня level или сетка из файла формата Gmsh.

        Raises:
            MeshError: Если файл некорректен
        """
        if path is not None:
            return load_gmsh(path)
        return self.mesh_factory(level)

    def with_law(self, name: str | None = None) -> CaseDefinition:
        """Копия случая с другим законом (параметры mu, lam сохраняются).

        Raises:
            ConfigError: Если имя закона неизвестно
        """
        if name is None or name == self.law.name:
            return self
        return replace(self, law=make_law(name, self.law.mu, self.law.lam))

    def dirichlet_values(self, tag: str, points: np.ndarray, load_factor: float) -> np.ndarray:
        return load_factor * np.asarray(self.dirichlet[tag](points), dtype=float)

    def traction_values(self, tag: str, points: np.ndarray, load_factor: float) -> np.ndarray:
        traction = self.neumann.get(tag)
        if traction is None:
            return _zero(points)
        return load_factor * np.asarray(traction(points), dtype=float)

    def body_force_values(self, points: np.ndarray, load_factor: float) -> np.ndarray:
        if self.body_force is None:
            return _zero(points)
        return load_factor * np.asarray(self.body_force(points), dtype=float)


def manufactured_case(
    alpha: float = 0.1, gamma: float = 0.1, mu: float = 1.0, lam: float = 10.0
) -> CaseDefinition:
    """Единичный куб с известным решением для неогуковского закона (Theta = ln J).

    u_X = (1/lam + alpha) X + alpha sin(pi Y)
    u_Y = -(1/lam + (alpha + gamma + alpha gamma) / (1 + alpha + gamma + alpha gamma)) Y
    u_Z = (1/lam + gamma) Z + gamma sin(pi X)

    Якобиан J постоянен и Div F^{-T} = 0, поэтому -Div P = -mu Div F и
    f = (mu alpha pi^2 sin(pi Y), 0, mu gamma pi^2 sin(pi X)).
    Все шесть сторон куба имеют условие Дирихле с точным перемещением.

    Raises:
        ConfigError: Если lam <= 0
    """
    if not lam > 0.0:
        raise ConfigError("The manufactured case requires lambda > 0")
    s = alpha + gamma + alpha * gamma
    a_x = 1.0 / lam + alpha
    a_y = -(1.0 / lam + s / (1.0 + s))
    a_z = 1.0 / lam + gamma
    pi = np.pi

    def displacement(points: np.ndarray) -> np.ndarray:
        x, y, z = points[:, 0], points[:, 1], points[:, 2]
        return np.column_stack(
            [a_x * x + alpha * np.sin(pi * y), a_y * y, a_z * z + gamma * np.sin(pi * x)]
        )

    def gradient(points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        grad = np.zeros((len(points), 3, 3))
        grad[:, 0, 0] = a_x
        grad[:, 0, 1] = alpha * pi * np.cos(pi * y)
        grad[:, 1, 1] = a_y
        grad[:, 2, 0] = gamma * pi * np.cos(pi * x)
        grad[:, 2, 2] = a_z
        return grad

    def body_force(points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        return np.column_stack(
            [
                mu * alpha * pi**2 * np.sin(pi * y),
                np.zeros(len(points)),
                mu * gamma * pi**2 * np.sin(pi * x),
            ]
        )

    return CaseDefinition(
        name="manufactured",
        dim=3,
        law=NeohookeanLaw(mu=mu, lam=lam),
        mesh_factory=generate_cube_mesh,
        dirichlet={tag: displacement for tag in ("x0", "x1", "y0", "y1", "z0", "z1")},
        body_force=body_force,
        exact_displacement=displacement,
        exact_gradient=gradient,
        beta0=1.0,
        description="Unit cube with a manufactured Neohookean solution",
    )


def linear_manufactured_case(dim: int = 3, mu: float = 1.0, lam: float = 1.0) -> CaseDefinition:
    """Линейная упругость с гладким бездивергентным решением.

    u_i = 0.1 sin(pi x_s) + 0.05 x_s^2, s = (i + 1) mod d. Так как
    div u = 0, объемная сила f = -mu Laplace u не зависит от lam.
    """
    if dim not in (2, 3):
        raise ConfigError("The linear manufactured case is defined for d = 2 or 3")
    shifted = [(i + 1) % dim for i in range(dim)]
    pi = np.pi

    def displacement(points: np.ndarray) -> np.ndarray:
        xs = points[:, shifted]
        return 0.1 * np.sin(pi * xs) + 0.05 * xs**2

    def gradient(points: np.ndarray) -> np.ndarray:
        grad = np.zeros((len(points), dim, dim))
        for i, s in enumerate(shifted):
            grad[:, i, s] = 0.1 * pi * np.cos(pi * points[:, s]) + 0.1 * points[:, s]
        return grad

    def body_force(points: np.ndarray) -> np.ndarray:
        xs = points[:, shifted]
        return mu * (0.1 * pi**2 * np.sin(pi * xs) - 0.1)

    tags = ("x0", "x1", "y0", "y1", "z0", "z1")[: 2 * dim]
    return CaseDefinition(
        name="linear_manufactured",
        dim=dim,
        law=LinearElasticLaw(mu=mu, lam=lam),
        mesh_factory=generate_cube_mesh if dim == 3 else generate_square_mesh,
        dirichlet={tag: displacement for tag in tags},
        body_force=body_force,
        exact_displacement=displacement,
        exact_gradient=gradient,
        beta0=1.0,
        description="Linear elasticity with a smooth divergence-free solution",
    )


def annulus_case(r0: float = 1.5, mu: float = 0.333, lam: float = 1666.44) -> CaseDefinition:
    """Кольцо R0 = 0.5, R1 = 1, раздуваемое изнутри.

    На внутренней окружности u_d(X) = X (r0 - R0) / R0, внешняя свободна.
    Точного решения нет; ошибки считаются относительно решения на
    сетке, измельченной дважды.

    Raises:
        ConfigError: Если r0 <= 0
    """
    if not r0 > 0.0:
        raise ConfigError("The annulus case requires r0 > 0")
    scale = (r0 - ANNULUS_INNER_RADIUS) / ANNULUS_INNER_RADIUS

    def inner(points: np.ndarray) -> np.ndarray:
        return scale * np.asarray(points, dtype=float)

    def mesh_factory(level: int) -> Mesh:
        return generate_annulus_mesh(ANNULUS_INNER_RADIUS, ANNULUS_OUTER_RADIUS, level, 8 * level)

    return CaseDefinition(
        name="annulus",
        dim=2,
        law=NeohookeanLaw(mu=mu, lam=lam),
        mesh_factory=mesh_factory,
        dirichlet={"inner": inner},
        neumann={"outer": None},
        load_steps=30 if lam > 100.0 else 5,
        beta0=100.0,
        self_reference=True,
        curved=True,
        description="Annulus inflated from the inner circle",
    )


def _block_tagger(points: np.ndarray) -> str:
    z = points[:, 2]
    if np.allclose(z, -1.0, atol=1e-12):
        return "bottom"
    if np.allclose(z, 1.0, atol=1e-12):
        inside = np.all(np.abs(points[:, :2]) <= 0.5 + 1e-12)
        return "indent" if inside else "top"
    return "sides"


def block_case(mu: float = 1.0, lam: float = 4999.0, depth: float = -0.8) -> CaseDefinition:
    """Блок (-1, 1)^3, вдавливаемый жестким штампом.

    Нижняя грань закреплена, на участок (-0.5, 0.5)^2 x {1} верхней грани
    наложено вертикальное перемещение depth, остальная граница свободна.
    Уровень l дает 4 l разбиений ребра, чтобы край штампа совпал с сеткой.
    """

    def mesh_factory(level: int) -> Mesh:
        return generate_box_mesh((-1.0, -1.0, -1.0), (1.0, 1.0, 1.0), 4 * level, tagger=_block_tagger)

    return CaseDefinition(
        name="block",
        dim=3,
        law=NeohookeanLaw(mu=mu, lam=lam),
        mesh_factory=mesh_factory,
        dirichlet={"bottom": _zero, "indent": _constant((0.0, 0.0, depth))},
        neumann={"top": None, "sides": None},
        load_steps=10,
        beta0=100.0,
        description="Block indented on a patch of its top face",
    )


def cylinder_case(mu: float = 0.1, lam: float = 1.0, shift: float = -1.0) -> CaseDefinition:
    """Полый цилиндр (радиусы 0.75 и 1, высота 4) при сжатии со сдвигом.

    Нижний торец закреплен, верхнему задано перемещение shift по
    горизонтали (ось X) и по вертикали (ось Z), боковые поверхности свободны.
    """

    def mesh_factory(level: int) -> Mesh:
        r_in, r_out = CYLINDER_RADII
        return generate_hollow_cylinder_mesh(r_in, r_out, CYLINDER_HEIGHT, level, 8 * level, 4 * level)

    return CaseDefinition(
        name="cylinder",
        dim=3,
        law=NeohookeanLaw(mu=mu, lam=lam),
        mesh_factory=mesh_factory,
        dirichlet={"bottom": _zero, "top": _constant((shift, 0.0, shift))},
        neumann={"inner": None, "outer": None},
        load_steps=30,
        beta0=100.0,
        curved=True,
        description="Hollow cylinder under compression and shear",
    )


def sphere_case(r: float = 1.0, mu: float = 1.0, lam: float = 1.0) -> CaseDefinition:
    """Единичный шар с двумя полостями, растягиваемый радиально.

    На внешней сфере u(X) = r X, полости свободны; закон для кавитации.
    По умолчанию используется сгенерированная сетка со ступенчатыми
    полостями; реальная геометрия задается файлом сетки.
    """

    def outer(points: np.ndarray) -> np.ndarray:
        return r * np.asarray(points, dtype=float)

    def mesh_factory(level: int) -> Mesh:
        return generate_ball_mesh(4 * level, cavities=SPHERE_CAVITIES)

    return CaseDefinition(
        name="sphere",
        dim=3,
        law=CavitationLaw(mu=mu, lam=lam),
        mesh_factory=mesh_factory,
        dirichlet={"outer": outer},
        neumann={"cavity": None},
        load_steps=10,
        beta0=100.0,
        curved=True,
        description="Sphere with two cavities under radial extension",
    )


CaseFactory = Callable[..., CaseDefinition]


class CaseRegistry:
    """Реестр фабрик расчетных случаев.

    Пример использования:
        >>> registry = CaseRegistry.default()
        >>> "annulus" in registry
        True
        >>> case = registry.create("annulus", lam=10.0)

    Attributes:
        _factories: Словарь фабрик (имя случая -> фабрика)
    """

    def __init__(self, factories: Mapping[str, CaseFactory] | None = None) -> None:
        self._factories: dict[str, CaseFactory] = {}
        for name, factory in (factories or {}).items():
            self.register(name, factory)

    @classmethod
    def default(cls) -> CaseRegistry:
        """Реестр со всеми встроенными случаями."""
        return cls(
            {
                "manufactured": manufactured_case,
                "linear_manufactured": linear_manufactured_case,
                "annulus": annulus_case,
                "block": block_case,
                "cylinder": cylinder_case,
                "sphere": sphere_case,
            }
        )

    def register(self, name: str, factory: CaseFactory) -> None:
        """Регистрирует фабрику случая.

        Raises:
            ValueError: Если случай с таким именем уже зарегистрирован
        """
        if name in self._factories:
            raise ValueError(f"Case with name '{name}' is already registered")
        self._factories[name] = factory

    def create(self, name: str, **params: Any) -> CaseDefinition:
        """Создает случай; параметры, которых фабрика не принимает, и None пропускаются.

        Raises:
            ConfigError: Если случай неизвестен или параметры некорректны
        """
        if name not in self._factories:
            raise ConfigError(f"Unknown case '{name}'. Known: {self.names}")
        factory = self._factories[name]
        accepted = inspect.signature(factory).parameters
        kwargs = {k: v for k, v in params.items() if k in accepted and v is not None}
        try:
            return factory(**kwargs)
        except ValueError as e:
            raise ConfigError(f"Invalid parameters for case '{name}': {e}") from e

    @property
    def names(self) -> list[str]:
        return sorted(self._factories)

    def __contains__(self, name: str) -> bool:
        return name in self._factories

    def __getitem__(self, name: str) -> CaseFactory:
        return self._factories[name]
