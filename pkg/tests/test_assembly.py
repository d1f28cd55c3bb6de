"""Тесты для локальной невязки, статической конденсации и глобальной сборки."""

from __future__ import annotations

import numpy as np
import pytest

from hho_hyperelastic.assembly import (
    CondensedBlock,
    DiscreteProblem,
    DiscreteState,
    assemble_global,
    condense,
    local_residual,
    local_tangent,
)
from hho_hyperelastic.cases import CaseDefinition
from hho_hyperelastic.config import MethodConfig, NewtonConfig
from hho_hyperelastic.exceptions import FactorizationError
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.solver import newton_solve
from hho_hyperelastic.verification import condensation_defect


def fd_jacobian(residual, dofs: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Матрица Якоби невязки по центральным разностям."""
    columns = []
    for j in range(len(dofs)):
        shift = np.zeros_like(dofs)
        shift[j] = step
        columns.append((residual(dofs + shift) - residual(dofs - shift)) / (2 * step))
    return np.column_stack(columns)


@pytest.fixture
def problem(cube_mesh: Mesh, manufactured: CaseDefinition, shho: MethodConfig) -> DiscreteProblem:
    return DiscreteProblem(cube_mesh, manufactured, shho, threads=1)


class TestCondense:
    """Тесты для статической конденсации."""

    def test_matches_full_solve(self, rng: np.random.Generator) -> None:
        """Тест: конденсация и восстановление дают решение полной системы."""
        n, n_cell = 10, 4
        M = rng.standard_normal((n, n))
        K = M @ M.T + n * np.eye(n)
        R = rng.standard_normal(n)
        full = np.linalg.solve(K, -R)

        block = condense(K, R, n_cell)
        faces = np.linalg.solve(block.matrix, -block.residual)
        np.testing.assert_allclose(faces, full[n_cell:], atol=1e-12)
        np.testing.assert_allclose(block.recover(faces), full[:n_cell], atol=1e-12)

    def test_blocks_are_kept(self, rng: np.random.Generator) -> None:
        """Тест: блок сохраняет невязку ячейки и связь ячейка-грани."""
        K = np.eye(5) + 0.1 * np.ones((5, 5))
        R = rng.standard_normal(5)
        block = condense(K, R, 2, cell=3)
        assert block.cell == 3
        np.testing.assert_array_equal(block.cell_residual, R[:2])
        np.testing.assert_array_equal(block.cell_coupling, K[:2, 2:])
        np.testing.assert_allclose(block.matrix, block.matrix.T, atol=1e-15)

    def test_singular_cell_block(self) -> None:
        """Тест: вырожденный блок ячейки вызывает FactorizationError."""
        K = np.eye(4)
        K[:2, :2] = 0.0
        with pytest.raises(FactorizationError) as exc_info:
            condense(K, np.zeros(4), 2, cell=5)
        assert exc_info.value.cell == 5


class TestLocalResidual:
    """Тесты для локальной невязки и касательной матрицы."""

    @pytest.mark.parametrize("method", [MethodConfig.shho(k=1), MethodConfig.uhho(k=1)])
    def test_tangent_matches_finite_differences(
        self, method: MethodConfig, cube_mesh: Mesh, manufactured: CaseDefinition, rng: np.random.Generator
    ) -> None:
        """Тест: касательная матрица равна производной невязки."""
        problem = DiscreteProblem(cube_mesh, manufactured, method, threads=1)
        ops = problem.operators[0]
        dofs = 1e-2 * rng.standard_normal(ops.local.size)
        K = local_tangent(ops, dofs, problem.law, problem.beta)
        fd = fd_jacobian(lambda d: local_residual(ops, d, problem.law, problem.beta), dofs)
        np.testing.assert_allclose(K, fd, atol=1e-6 * np.abs(K).max())

    def test_tangent_is_symmetric(self, problem: DiscreteProblem, rng: np.random.Generator) -> None:
        """Тест симметрии касательной матрицы."""
        ops = problem.operators[1]
        K = local_tangent(ops, 1e-2 * rng.standard_normal(ops.local.size), problem.law, problem.beta)
        np.testing.assert_array_equal(K, K.T)

    def test_zero_residual_at_reference(self, problem: DiscreteProblem) -> None:
        """Тест: в отсчетной конфигурации без нагрузки невязка равна нулю."""
        ops = problem.operators[0]
        R = local_residual(ops, np.zeros(ops.local.size), problem.law, problem.beta)
        np.testing.assert_allclose(R, 0.0, atol=1e-14)

    def test_loads_are_subtracted(self, problem: DiscreteProblem, rng: np.random.Generator) -> None:
        """Тест: внешние силы вычитаются из невязки."""
        ops = problem.operators[0]
        loads = rng.standard_normal(ops.local.size)
        R = local_residual(ops, np.zeros(ops.local.size), problem.law, problem.beta, loads)
        np.testing.assert_allclose(R, -loads, atol=1e-14)


class TestDiscreteProblem:
    """Тесты для дискретной задачи."""

    def test_dimension_mismatch(self, square_mesh: Mesh, manufactured: CaseDefinition, shho: MethodConfig) -> None:
        """Тест: трехмерный случай на двумерной сетке вызывает ValueError."""
        with pytest.raises(ValueError, match="3D but the mesh is 2D"):
            DiscreteProblem(square_mesh, manufactured, shho)

    def test_dof_counts(self, problem: DiscreteProblem) -> None:
        """Тест: 18 граней по 9 неизвестных, 12 граней Дирихле."""
        assert problem.n_face == 9
        assert problem.n_cell == 12
        assert problem.n_face_dofs == 18 * 9
        assert len(problem.dirichlet_faces) == 12
        assert len(problem.dirichlet_dofs) == 108
        assert len(problem.free_dofs) == 54
        assert np.intersect1d(problem.free_dofs, problem.dirichlet_dofs).size == 0

    def test_stabilization_weight(self, cube_mesh: Mesh, manufactured: CaseDefinition, uhho: MethodConfig, problem: DiscreteProblem) -> None:
        """Тест: beta = beta0 mu для sHHO и ноль для uHHO."""
        assert problem.beta == pytest.approx(problem.method.beta0 * problem.law.mu)
        assert DiscreteProblem(cube_mesh, manufactured, uhho, threads=1).beta == 0.0

    def test_cell_face_dofs(self, problem: DiscreteProblem) -> None:
        """Тест: неизвестные граней ячейки идут в локальном порядке граней."""
        dofs = problem.cell_face_dofs(0)
        assert len(dofs) == 4 * 9
        first = int(problem.mesh.cell_faces[0][0])
        np.testing.assert_array_equal(dofs[:9], np.arange(first * 9, first * 9 + 9))

    def test_local_vector_layout(self, problem: DiscreteProblem, rng: np.random.Generator) -> None:
        """Тест: локальный вектор начинается с неизвестных ячейки."""
        state = DiscreteState(rng.standard_normal((6, 12)), rng.standard_normal(problem.n_face_dofs))
        local = problem.local_vector(state, 2)
        np.testing.assert_array_equal(local[:12], state.cell_coeffs[2])
        np.testing.assert_array_equal(local[12:], state.face_coeffs[problem.cell_face_dofs(2)])

    def test_apply_dirichlet(self, problem: DiscreteProblem) -> None:
        """Тест: значения Дирихле масштабируются и ставятся только на грани Дирихле."""
        state = problem.apply_dirichlet(problem.zero_state(), 0.5)
        values = problem.dirichlet_values(1.0)
        np.testing.assert_allclose(state.face_coeffs[problem.dirichlet_dofs], 0.5 * values[problem.dirichlet_dofs])
        np.testing.assert_array_equal(state.face_coeffs[problem.free_dofs], 0.0)
        np.testing.assert_array_equal(values[problem.free_dofs], 0.0)
        assert np.abs(values).max() > 0.0

    def test_external_loads_scaling(self, problem: DiscreteProblem) -> None:
        """Тест: объемная сила масштабируется коэффициентом нагрузки."""
        full = problem.external_loads(0, 1.0)
        assert np.abs(full[: problem.n_cell]).max() > 0.0
        np.testing.assert_allclose(problem.external_loads(0, 0.25), 0.25 * full)

    def test_translation_has_no_residual(self, problem: DiscreteProblem) -> None:
        """Тест: жесткое смещение без нагрузки не создает невязки."""
        state = problem.zero_state()
        shift = np.array([0.3, -0.2, 0.1])
        for c in range(3):
            state.cell_coeffs[:, c * 4] = shift[c]
        faces = state.face_coeffs.reshape(problem.mesh.n_faces, 3, 3)
        faces[:, :, 0] = shift
        for R in problem.residuals(state, 0.0):
            np.testing.assert_allclose(R, 0.0, atol=1e-13)


class TestAssemble:
    """Тесты для глобальной сборки."""

    def test_reference_state_unloaded(self, problem: DiscreteProblem) -> None:
        """Тест: при нулевой нагрузке невязка отсчетного состояния равна нулю."""
        system = problem.assemble(problem.zero_state(), 0.0)
        assert system.size == 54
        assert system.residual_norm == pytest.approx(0.0, abs=1e-14)
        np.testing.assert_allclose(system.rhs, 0.0, atol=1e-14)

    def test_matrix_is_symmetric(self, problem: DiscreteProblem) -> None:
        """Тест: сконденсированная матрица симметрична."""
        matrix = problem.assemble(problem.zero_state(), 1.0).matrix
        assert matrix.shape == (54, 54)
        assert abs(matrix - matrix.T).max() < 1e-12 * abs(matrix).max()

    def test_dirichlet_increment(self, problem: DiscreteProblem) -> None:
        """Тест: в отсчетном состоянии приращение Дирихле равно целевым значениям."""
        system = problem.assemble(problem.zero_state(), 0.25)
        target = problem.dirichlet_values(1.0)
        np.testing.assert_allclose(
            system.dirichlet_increment[problem.dirichlet_dofs], 0.25 * target[problem.dirichlet_dofs]
        )
        np.testing.assert_array_equal(system.dirichlet_increment[problem.free_dofs], 0.0)
        assert system.residual_norm > 0.0

    def test_dirichlet_increment_after_solve(self, problem: DiscreteProblem) -> None:
        """Тест: после решения приращение Дирихле и невязка на свободных гранях исчезают."""
        state = newton_solve(problem, NewtonConfig()).state
        system = problem.assemble(state, 1.0)
        np.testing.assert_allclose(system.dirichlet_increment, 0.0, atol=1e-12)
        assert system.residual_norm <= 1e-6

    def test_threads_do_not_change_result(self, cube_mesh: Mesh, manufactured: CaseDefinition, shho: MethodConfig) -> None:
        """Тест: многопоточная сборка совпадает с последовательной."""
        one = DiscreteProblem(cube_mesh, manufactured, shho, threads=1)
        two = DiscreteProblem(cube_mesh, manufactured, shho, operators=one.operators, threads=2)
        a = one.assemble(one.zero_state(), 1.0)
        b = two.assemble(two.zero_state(), 1.0)
        np.testing.assert_allclose(a.rhs, b.rhs, atol=1e-14)
        assert a.residual_norm == pytest.approx(b.residual_norm, rel=1e-14)

    @pytest.mark.parametrize("method", [MethodConfig.shho(k=1), MethodConfig.uhho(k=1)])
    def test_condensation_matches_monolithic(self, method: MethodConfig, cube_mesh: Mesh, manufactured: CaseDefinition) -> None:
        """Тест: приращение через конденсацию совпадает с монолитным."""
        problem = DiscreteProblem(cube_mesh, manufactured, method, threads=1)
        assert condensation_defect(problem) < 1e-10

    def test_block_shape_mismatch(self, problem: DiscreteProblem) -> None:
        """Тест: блок неверного размера вызывает ValueError."""
        bad = CondensedBlock(
            cell=0,
            matrix=np.eye(2),
            residual=np.zeros(2),
            recovery_matrix=np.zeros((1, 2)),
            recovery_vector=np.zeros(1),
            cell_residual=np.zeros(1),
            cell_coupling=np.zeros((1, 2)),
        )
        with pytest.raises(ValueError, match="Condensed block of cell 0"):
            assemble_global(problem, [bad], np.zeros(problem.n_face_dofs))
