"""Тесты для расчетных случаев и реестра."""

from __future__ import annotations

import numpy as np
import pytest

from hho_hyperelastic.cases import (
    DIRICHLET,
    NEUMANN,
    CaseDefinition,
    CaseRegistry,
    annulus_case,
    block_case,
    cylinder_case,
    linear_manufactured_case,
    manufactured_case,
    sphere_case,
)
from hho_hyperelastic.exceptions import ConfigError
from hho_hyperelastic.material import CavitationLaw, LinearElasticLaw, NeohookeanLaw
from hho_hyperelastic.mesh import generate_square_mesh
from hho_hyperelastic.verification import manufactured_divergence_defect


def zero_field(points: np.ndarray) -> np.ndarray:
    return np.zeros_like(points)


class TestManufacturedCase:
    """Тесты для случая с изготовленным решением."""

    def test_body_force_matches_divergence(self, manufactured: CaseDefinition, rng: np.random.Generator) -> None:
        """Тест: f = -Div P(F(u)) в случайных точках."""
        assert manufactured_divergence_defect(manufactured, rng) < 1e-6

    def test_constant_jacobian(self, manufactured: CaseDefinition, rng: np.random.Generator) -> None:
        """Тест: det F(u) постоянен в кубе."""
        points = rng.uniform(0.0, 1.0, (20, 3))
        J = np.linalg.det(np.eye(3) + manufactured.exact_gradient(points))
        np.testing.assert_allclose(J, J[0], rtol=1e-12)

    def test_gradient_matches_displacement(self, manufactured: CaseDefinition) -> None:
        """Тест: точный градиент совпадает с разностной производной перемещения."""
        X = np.array([[0.3, 0.6, 0.2]])
        step = 1e-6
        grad = manufactured.exact_gradient(X)[0]
        for b in range(3):
            shift = np.eye(3)[b] * step
            fd = (manufactured.exact_displacement(X + shift) - manufactured.exact_displacement(X - shift)) / (2 * step)
            np.testing.assert_allclose(grad[:, b], fd[0], atol=1e-8)

    def test_configuration(self, manufactured: CaseDefinition) -> None:
        """Тест: все шесть сторон куба - Дирихле, закон неогуковский."""
        assert manufactured.dim == 3
        assert manufactured.has_exact
        assert isinstance(manufactured.law, NeohookeanLaw)
        assert set(manufactured.roles.values()) == {DIRICHLET}
        assert set(manufactured.roles) == manufactured.mesh(1).tags

    def test_lambda_must_be_positive(self) -> None:
        """Тест: lambda = 0 вызывает ConfigError."""
        with pytest.raises(ConfigError, match="lambda > 0"):
            manufactured_case(lam=0.0)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_linear_case_body_force(self, dim: int, rng: np.random.Generator) -> None:
        """Тест: объемная сила линейного случая согласована с решением."""
        case = linear_manufactured_case(dim, mu=2.0, lam=5.0)
        assert isinstance(case.law, LinearElasticLaw)
        assert manufactured_divergence_defect(case, rng) < 1e-6

    def test_linear_case_2d_tags(self) -> None:
        """Тест: в 2D используются только стороны квадрата."""
        case = linear_manufactured_case(2)
        assert set(case.dirichlet) == {"x0", "x1", "y0", "y1"}
        assert case.mesh(2).n_cells == generate_square_mesh(2).n_cells

    def test_divergence_requires_exact_data(self, rng: np.random.Generator) -> None:
        """Тест: случай без точного решения вызывает ValueError."""
        with pytest.raises(ValueError, match="no exact gradient"):
            manufactured_divergence_defect(annulus_case(), rng)


class TestBenchmarkCases:
    """Тесты для случаев без точного решения."""

    def test_annulus(self) -> None:
        """Тест: кольцо, внутренняя окружность Дирихле, внешняя свободна."""
        case = annulus_case(r0=1.5)
        mesh = case.mesh(1)
        assert mesh.n_cells == 2 * 1 * 8
        assert case.roles == {"inner": DIRICHLET, "outer": NEUMANN}
        assert case.self_reference and case.curved
        X = np.array([[0.5, 0.0], [0.0, -0.5]])
        np.testing.assert_allclose(case.dirichlet_values("inner", X, 1.0), 2.0 * X)
        np.testing.assert_allclose(case.dirichlet_values("inner", X, 0.5), X)

    def test_annulus_load_steps(self) -> None:
        """Тест: квазинесжимаемый вариант требует больше шагов нагрузки."""
        assert annulus_case(lam=1666.44).load_steps > annulus_case(lam=1.0).load_steps

    def test_annulus_invalid_radius(self) -> None:
        """Тест: r0 <= 0 вызывает ConfigError."""
        with pytest.raises(ConfigError):
            annulus_case(r0=0.0)

    def test_block_tags(self) -> None:
        """Тест: блок имеет теги bottom, indent, top, sides."""
        case = block_case()
        mesh = case.mesh(1)
        assert mesh.tags == {"bottom", "indent", "top", "sides"}
        assert set(case.roles) == mesh.tags
        indent = mesh.faces_with_tag("indent")
        assert len(indent) == 2 * 2 * 2
        for f in indent:
            assert np.all(np.abs(mesh.face_vertices(f)[:, :2]) <= 0.5 + 1e-12)

    def test_block_dirichlet_values(self) -> None:
        """Тест: штамп задает вертикальное перемещение depth."""
        case = block_case(depth=-0.8)
        X = np.array([[0.0, 0.0, 1.0]])
        np.testing.assert_allclose(case.dirichlet_values("indent", X, 0.5), [[0.0, 0.0, -0.4]])
        np.testing.assert_allclose(case.dirichlet_values("bottom", X, 1.0), 0.0)

    def test_cylinder(self) -> None:
        """Тест: полый цилиндр, торцы Дирихле, боковые поверхности свободны."""
        case = cylinder_case()
        mesh = case.mesh(1)
        assert mesh.tags == {"bottom", "top", "inner", "outer"}
        assert case.roles["top"] == DIRICHLET
        assert case.roles["inner"] == NEUMANN
        np.testing.assert_allclose(case.dirichlet_values("top", np.zeros((1, 3)), 1.0), [[-1.0, 0.0, -1.0]])

    def test_sphere(self) -> None:
        """Тест: шар с законом кавитации и радиальным растяжением."""
        case = sphere_case(r=0.5)
        assert isinstance(case.law, CavitationLaw)
        mesh = case.mesh(1)
        assert "outer" in mesh.tags
        assert mesh.tags <= set(case.roles)
        X = np.array([[1.0, 0.0, 0.0]])
        np.testing.assert_allclose(case.dirichlet_values("outer", X, 1.0), [[0.5, 0.0, 0.0]])


class TestCaseDefinition:
    """Тесты для описания случая."""

    def test_shared_roles(self) -> None:
        """Тест: тег с двумя ролями вызывает ValueError."""
        with pytest.raises(ValueError, match="both Dirichlet and Neumann"):
            CaseDefinition(
                name="bad",
                dim=2,
                law=NeohookeanLaw(1.0, 1.0),
                mesh_factory=generate_square_mesh,
                dirichlet={"x0": zero_field},
                neumann={"x0": None},
            )

    def test_exact_pair_required(self) -> None:
        """Тест: точное перемещение без градиента вызывает ValueError."""
        with pytest.raises(ValueError, match="together"):
            CaseDefinition(
                name="bad",
                dim=2,
                law=NeohookeanLaw(1.0, 1.0),
                mesh_factory=generate_square_mesh,
                dirichlet={"x0": zero_field},
                exact_displacement=zero_field,
            )

    def test_traction_and_body_force_defaults(self) -> None:
        """Тест: свободная граница и отсутствующая объемная сила дают нули."""
        case = block_case()
        points = np.ones((3, 3))
        np.testing.assert_array_equal(case.traction_values("top", points, 1.0), np.zeros((3, 3)))
        np.testing.assert_array_equal(case.body_force_values(points, 1.0), np.zeros((3, 3)))

    def test_body_force_scaled(self, manufactured: CaseDefinition) -> None:
        """Тест: объемная сила масштабируется коэффициентом нагрузки."""
        X = np.array([[0.5, 0.5, 0.5]])
        full = manufactured.body_force_values(X, 1.0)
        np.testing.assert_allclose(manufactured.body_force_values(X, 0.25), 0.25 * full)

    def test_with_law(self, manufactured: CaseDefinition) -> None:
        """Тест: смена закона сохраняет параметры Ламе."""
        changed = manufactured.with_law("cavitation")
        assert isinstance(changed.law, CavitationLaw)
        assert changed.law.mu == manufactured.law.mu
        assert changed.law.lam == manufactured.law.lam
        assert manufactured.with_law(None) is manufactured
        assert manufactured.with_law("neohookean") is manufactured

    def test_with_unknown_law(self, manufactured: CaseDefinition) -> None:
        """Тест: неизвестный закон вызывает ConfigError."""
        with pytest.raises(ConfigError):
            manufactured.with_law("plastic")


class TestCaseRegistry:
    """Тесты для реестра случаев."""

    def test_default_names(self) -> None:
        """Тест: реестр по умолчанию содержит все встроенные случаи."""
        registry = CaseRegistry.default()
        assert registry.names == sorted(
            ["manufactured", "linear_manufactured", "annulus", "block", "cylinder", "sphere"]
        )
        assert "annulus" in registry
        assert "torus" not in registry
        assert registry["block"] is block_case

    def test_create_with_params(self) -> None:
        """Тест: параметры передаются фабрике, None и лишние пропускаются."""
        registry = CaseRegistry.default()
        case = registry.create("annulus", lam=10.0, mu=None, depth=3.0)
        assert case.law.lam == 10.0
        assert case.law.mu == pytest.approx(0.333)

    def test_create_unknown(self) -> None:
        """Тест: неизвестный случай вызывает ConfigError."""
        with pytest.raises(ConfigError, match="Unknown case 'torus'"):
            CaseRegistry.default().create("torus")

    def test_create_invalid_params(self) -> None:
        """Тест: некорректные параметры материала вызывают ConfigError."""
        with pytest.raises(ConfigError, match="Invalid parameters"):
            CaseRegistry.default().create("block", mu=-1.0)

    def test_register_duplicate(self) -> None:
        """Тест: повторная регистрация вызывает ValueError."""
        registry = CaseRegistry({"block": block_case})
        with pytest.raises(ValueError, match="already registered"):
            registry.register("block", block_case)
