"""Тесты для проверок свойств операторов и набора verify."""

from __future__ import annotations

import numpy as np
import pytest

from hho_hyperelastic.basis import GradSpace
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.operators import build_local_operators
from hho_hyperelastic.verification import (
    PropertyResult,
    VerificationReport,
    condition_numbers,
    generalized_bounds,
    norm_bounds,
    polynomial_field,
    random_cell_mesh,
    random_deformation_gradients,
    rtn_inclusion_defect,
    run_verification,
)


class TestHelpers:
    """Тесты для вспомогательных построений."""

    @pytest.mark.parametrize("dim", [2, 3])
    def test_random_cell_is_shape_regular(self, dim: int, rng: np.random.Generator) -> None:
        """Тест: случайная ячейка невырождена."""
        mesh = random_cell_mesh(rng, dim)
        assert mesh.n_cells == 1
        assert mesh.dim == dim
        assert mesh.geometries[0].measure > 0.0

    def test_polynomial_gradient(self, rng: np.random.Generator) -> None:
        """Тест: градиент случайного полинома совпадает с разностной производной."""
        value, gradient = polynomial_field(rng, 3, 3)
        X = np.array([[0.3, 0.2, 0.4]])
        step = 1e-6
        for b in range(3):
            shift = np.eye(3)[b] * step
            fd = (value(X + shift) - value(X - shift)) / (2 * step)
            np.testing.assert_allclose(gradient(X)[0, :, b], fd[0], atol=1e-7)

    def test_deformation_gradients_range(self, rng: np.random.Generator) -> None:
        """Тест: det F лежит в заданном диапазоне."""
        F = random_deformation_gradients(rng, 50, det_range=(0.5, 2.0))
        J = np.linalg.det(F)
        assert np.all(J >= 0.5 - 1e-12) and np.all(J <= 2.0 + 1e-12)

    def test_generalized_bounds(self) -> None:
        """Тест: крайние собственные числа пары диагональных матриц."""
        assert generalized_bounds(np.diag([2.0, 6.0]), np.diag([1.0, 2.0])) == pytest.approx((2.0, 3.0))

    def test_generalized_bounds_skip_kernel(self) -> None:
        """Тест: направления ядра полунормы исключаются."""
        assert generalized_bounds(np.diag([4.0, 5.0]), np.diag([1.0, 0.0])) == pytest.approx((4.0, 4.0))


class TestStability:
    """Тесты эквивалентности норм."""

    def test_stabilized_bounds(self, cube_mesh: Mesh) -> None:
        """Тест: sHHO с beta > 0 ограничивает полунорму снизу."""
        operators = [build_local_operators(cube_mesh, c, 1, GradSpace.PK) for c in range(cube_mesh.n_cells)]
        lo, hi = norm_bounds(operators, beta=1.0)
        assert 0.0 < lo <= hi

    def test_pk_without_stabilization_degenerates(self, unit_tetra: Mesh) -> None:
        """Тест: градиент в P^k без стабилизации имеет ложные нулевые моды."""
        lo, hi = norm_bounds([build_local_operators(unit_tetra, 0, 1, GradSpace.PK)])
        assert lo < 1e-8 * hi

    @pytest.mark.parametrize("space", [GradSpace.PKP1, GradSpace.RTN])
    def test_unstabilized_bounds(self, space: GradSpace, unit_tetra: Mesh) -> None:
        """Тест: пространства PKP1 и RTN устойчивы без стабилизации."""
        lo, hi = norm_bounds([build_local_operators(unit_tetra, 0, 1, space)])
        assert lo > 1e-6 * hi

    def test_rtn_inclusion(self, rng: np.random.Generator) -> None:
        """Тест: RTN^k содержится в P^{k+1}."""
        mesh = random_cell_mesh(rng)
        assert rtn_inclusion_defect(mesh, 0, 1) < 1e-6

    def test_conditioning_grows_with_beta(self, cube_mesh: Mesh) -> None:
        """Тест: при beta0 от 1 до 1e3 обусловленность растет примерно в 1e2 раз."""
        kappa = condition_numbers(cube_mesh, 1, (1.0, 1e3))
        assert kappa[0] > 1.0
        assert 10.0 <= kappa[1] / kappa[0] <= 1e3


class TestVerificationReport:
    """Тесты для отчета проверок."""

    def test_passed_and_failed(self) -> None:
        """Тест: отчет не пройден, если хотя бы одна проверка не выполнена."""
        report = VerificationReport()
        report.add(PropertyResult("a", 1e-14, 1e-12, True))
        assert report.passed
        bad = PropertyResult("b", 1.0, 1e-12, False)
        report.add(bad)
        assert not report.passed
        assert report.failed == [bad]

    @pytest.mark.slow
    def test_run_verification(self) -> None:
        """Тест: все проверки набора выполнены."""
        report = run_verification(k=1, cells=3, level=1, seed=0)
        assert report.passed, [r.name for r in report.failed]
        results = {r.name: r for r in report.results}
        for name in (
            "commuting (RTN)",
            "weak commuting",
            "stabilization consistency",
            "RTN in P^{k+1}",
            "tangent (neohookean)",
            "tangent (cavitation)",
            "stress (neohookean)",
            "manufactured divergence",
            "static condensation",
        ):
            assert results[name].passed, name
        for name in ("norm equivalence (sHHO)", "norm equivalence (uHHO RTN)", "beta conditioning growth"):
            assert results[name].passed, results[name].detail
