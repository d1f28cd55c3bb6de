"""Тесты для полиномиальных базисов."""

from __future__ import annotations

import numpy as np
import pytest

from hho_hyperelastic.basis import (
    CellBasis,
    FaceBasis,
    GradSpace,
    build_rtn_basis,
    build_tensor_basis,
    cross_mass_matrix,
    eval_cell_basis,
    eval_cell_basis_gradients,
    face_frame,
    factorize_mass,
    mass_matrix,
    monomial_exponents,
    poly_dim,
)
from hho_hyperelastic.exceptions import FactorizationError
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.quadrature import cell_rule, face_rule


class TestMonomials:
    """Тесты для мультииндексов."""

    @pytest.mark.parametrize(
        ("dim", "degree", "expected"),
        [(1, 2, 3), (2, 1, 3), (2, 2, 6), (3, 1, 4), (3, 2, 10), (3, 3, 20), (2, -1, 0)],
    )
    def test_poly_dim(self, dim: int, degree: int, expected: int) -> None:
        """Тест размерности пространства полиномов."""
        assert poly_dim(dim, degree) == expected

    def test_graded_order(self) -> None:
        """Тест: мультииндексы упорядочены по возрастанию степени."""
        exps = monomial_exponents(2, 2)
        np.testing.assert_array_equal(exps[:3], [[0, 0], [1, 0], [0, 1]])
        assert list(exps.sum(axis=1)) == [0, 1, 1, 2, 2, 2]
        assert len(exps) == poly_dim(2, 2)


class TestCellBasis:
    """Тесты для базиса на ячейке."""

    def test_values_at_center(self, unit_tetra: Mesh) -> None:
        """Тест: в барицентре ненулевая только константа."""
        geo = unit_tetra.geometries[0]
        basis = CellBasis.for_cell(geo, 2)
        values = basis.eval(geo.barycenter)
        assert values.shape == (1, 10)
        np.testing.assert_allclose(values[0], np.eye(10)[0], atol=1e-15)

    def test_single_point_evaluation(self, unit_tetra: Mesh) -> None:
        """Тест: значения и градиенты в одной точке совпадают с пакетной оценкой."""
        basis = CellBasis.for_cell(unit_tetra.geometries[0], 1)
        point = np.array([0.1, 0.2, 0.3])
        values = eval_cell_basis(basis, point)
        gradients = eval_cell_basis_gradients(basis, point)
        assert values.shape == (4,)
        assert gradients.shape == (4, 3)
        np.testing.assert_allclose(values, basis.eval(point[None])[0])
        np.testing.assert_allclose(gradients[0], 0.0)
        np.testing.assert_allclose(gradients, basis.grad(point[None])[0])

    def test_gradients_match_finite_differences(self, unit_tetra: Mesh, rng: np.random.Generator) -> None:
        """Тест: градиенты совпадают с центральными разностями."""
        basis = CellBasis.for_cell(unit_tetra.geometries[0], 3)
        point = np.array([0.2, 0.3, 0.1])
        grads = basis.grad(point)[0]
        step = 1e-6
        for j in range(3):
            shift = np.eye(3)[j] * step
            fd = (basis.eval(point + shift)[0] - basis.eval(point - shift)[0]) / (2 * step)
            np.testing.assert_allclose(grads[:, j], fd, atol=1e-7)

    def test_vector_layout(self, unit_triangle: Mesh) -> None:
        """Тест: векторная функция c * m + i равна phi_i e_c."""
        basis = CellBasis.for_cell(unit_triangle.geometries[0], 1)
        point = np.array([0.2, 0.5])
        scalar = basis.eval(point)[0]
        vector = basis.eval_vector(point)[0]
        assert vector.shape == (6, 2)
        np.testing.assert_allclose(vector[:3, 0], scalar)
        np.testing.assert_allclose(vector[3:, 1], scalar)
        np.testing.assert_allclose(vector[:3, 1], 0.0)

    def test_vector_gradient_layout(self, unit_triangle: Mesh) -> None:
        """Тест: градиент векторной функции занимает одну строку."""
        basis = CellBasis.for_cell(unit_triangle.geometries[0], 2)
        grads = basis.grad_vector(np.array([0.3, 0.3]))[0]
        m = basis.size
        np.testing.assert_allclose(grads[m:, 0, :], 0.0)
        np.testing.assert_allclose(grads[:m, 1, :], 0.0)


class TestFaceBasis:
    """Тесты для базиса на грани."""

    def test_frame_is_orthonormal(self, unit_tetra: Mesh) -> None:
        """Тест: касательный репер ортонормирован и ортогонален нормали."""
        geo = unit_tetra.geometries[0]
        for i, f in enumerate(unit_tetra.cell_faces[0]):
            frame = face_frame(unit_tetra.face_vertices(int(f)))
            np.testing.assert_allclose(frame @ frame.T, np.eye(2), atol=1e-14)
            np.testing.assert_allclose(frame @ geo.face_normals[i], 0.0, atol=1e-14)

    def test_size_and_origin(self, unit_tetra: Mesh) -> None:
        """Тест: размер базиса dim P^k_{d-1}, константа в барицентре."""
        vertices = unit_tetra.face_vertices(int(unit_tetra.cell_faces[0][0]))
        basis = FaceBasis.for_face(vertices, 2)
        assert basis.dim == 3
        assert basis.size == 6
        assert basis.vector_size == 18
        np.testing.assert_allclose(basis.eval(vertices.mean(axis=0))[0], np.eye(6)[0], atol=1e-15)

    def test_face_mass_is_positive_definite(self, cube_mesh: Mesh) -> None:
        """Тест: матрица масс грани положительно определена."""
        f = int(cube_mesh.interior_faces[0])
        basis = FaceBasis.for_face(cube_mesh.face_vertices(f), 2)
        mass = mass_matrix(basis, face_rule(cube_mesh, f, 4), vector=True)
        assert mass.shape == (18, 18)
        assert np.linalg.eigvalsh(mass).min() > 0.0


class TestTensorBasis:
    """Тесты для пространств реконструкции градиента."""

    @pytest.mark.parametrize(
        ("space", "dim", "k", "expected"),
        [
            (GradSpace.PK, 3, 1, 36),
            (GradSpace.PKP1, 3, 1, 90),
            (GradSpace.RTN, 3, 1, 45),
            (GradSpace.PK, 2, 1, 12),
            (GradSpace.RTN, 2, 1, 16),
            (GradSpace.RTN, 3, 2, 9 * 10 + 3 * 6),
        ],
    )
    def test_dimensions(self, space: GradSpace, dim: int, k: int, expected: int, unit_tetra: Mesh, unit_triangle: Mesh) -> None:
        """Тест размерностей пространств PK, PKP1 и RTN."""
        mesh = unit_tetra if dim == 3 else unit_triangle
        basis = build_tensor_basis(mesh.geometries[0], k, space)
        assert basis.size == expected
        values = basis.eval(mesh.geometries[0].barycenter)
        assert values.shape == (1, expected, dim, dim)

    def test_rtn_requires_k_positive(self, unit_tetra: Mesh) -> None:
        """Тест: RTN при k = 0 не поддерживается."""
        with pytest.raises(ValueError, match="k >= 1"):
            build_rtn_basis(unit_tetra.geometries[0], 0)

    def test_rtn_row_divergence_is_polynomial(self, unit_triangle: Mesh) -> None:
        """Тест: дополнительные функции RTN лежат в строке a и пропорциональны xi."""
        geo = unit_triangle.geometries[0]
        basis = build_rtn_basis(geo, 1)
        point = geo.barycenter + np.array([0.1, 0.05])
        values = basis.eval(point)[0]
        extra = values[basis.polynomial_size :]
        xi = basis.cell_basis.local_coordinates(point)[0]
        # первая дополнительная функция: xi_0 * xi в строке 0
        np.testing.assert_allclose(extra[0, 0], xi[0] * xi)
        np.testing.assert_allclose(extra[0, 1], 0.0)

    @pytest.mark.parametrize("space", list(GradSpace))
    def test_mass_is_positive_definite(self, space: GradSpace, unit_tetra: Mesh) -> None:
        """Тест: матрица Грама тензорного базиса положительно определена."""
        basis = build_tensor_basis(unit_tetra.geometries[0], 1, space)
        mass = mass_matrix(basis, cell_rule(unit_tetra, 0, 4))
        np.testing.assert_allclose(mass, mass.T, atol=1e-14)
        factorize_mass(mass)


class TestMassMatrices:
    """Тесты для матриц масс."""

    def test_constant_entry_is_measure(self, unit_tetra: Mesh) -> None:
        """Тест: элемент (0, 0) матрицы масс равен |T|."""
        basis = CellBasis.for_cell(unit_tetra.geometries[0], 1)
        mass = mass_matrix(basis, cell_rule(unit_tetra, 0, 2))
        assert mass[0, 0] == pytest.approx(1.0 / 6.0, rel=1e-14)

    def test_cross_mass_with_itself(self, unit_triangle: Mesh) -> None:
        """Тест: смешанная матрица базиса с самим собой равна матрице масс."""
        basis = CellBasis.for_cell(unit_triangle.geometries[0], 2)
        rule = cell_rule(unit_triangle, 0, 4)
        np.testing.assert_allclose(cross_mass_matrix(basis, basis, rule, vector=True), mass_matrix(basis, rule, vector=True))

    def test_cross_mass_subspace(self, unit_triangle: Mesh) -> None:
        """Тест: P^1 - подпространство P^2, первые столбцы совпадают."""
        geo = unit_triangle.geometries[0]
        low, high = CellBasis.for_cell(geo, 1), CellBasis.for_cell(geo, 2)
        rule = cell_rule(unit_triangle, 0, 4)
        cross = cross_mass_matrix(high, low, rule)
        np.testing.assert_allclose(cross, mass_matrix(high, rule)[:, :3], atol=1e-15)

    def test_factorization_failure(self) -> None:
        """Тест: незнакоопределенная матрица вызывает FactorizationError с номером ячейки."""
        with pytest.raises(FactorizationError) as exc_info:
            factorize_mass(np.array([[1.0, 2.0], [2.0, 1.0]]), cell=7)
        assert exc_info.value.cell == 7
