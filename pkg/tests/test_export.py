"""Тесты для записи таблиц сходимости и полей VTK."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from hho_hyperelastic.assembly import DiscreteProblem
from hho_hyperelastic.cases import CaseDefinition
from hho_hyperelastic.config import MethodConfig
from hho_hyperelastic.exceptions import ExportError
from hho_hyperelastic.export import (
    CSV_COLUMNS,
    export_solution,
    output_path,
    read_error_csv,
    read_vtk,
    write_error_csv,
    write_vtk,
)
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.postproc import ErrorReport, ErrorSample


@pytest.fixture
def report() -> ErrorReport:
    report = ErrorReport()
    report.add(ErrorSample(h=0.5, err_u=4e-2, err_G=2e-1, newton_iters=4))
    report.add(ErrorSample(h=0.25, err_u=5e-3, err_G=5e-2, newton_iters=5))
    return report


class TestOutputPath:
    """Тесты для имен файлов результатов."""

    def test_naming(self, tmp_path: Path) -> None:
        """Тест: <case>_<method>_k<k>_<level>.<suffix>."""
        path = output_path(tmp_path, "annulus", "uhho-pkp1", 2, 4, "vtk")
        assert path == tmp_path / "annulus_uhho-pkp1_k2_4.vtk"
        assert output_path("out", "block", "shho", 1, "errors", "csv").name == "block_shho_k1_errors.csv"


class TestErrorCsv:
    """Тесты для таблицы ошибок."""

    def test_write_and_read(self, report: ErrorReport, tmp_path: Path) -> None:
        """Тест: столбцы, пустой порядок в первой строке и значения."""
        path = write_error_csv(report, tmp_path / "nested" / "errors.csv")
        assert path.read_text().splitlines()[0] == ",".join(CSV_COLUMNS)
        rows = read_error_csv(path)
        assert len(rows) == 2
        assert rows[0]["order_u"] is None
        assert rows[1]["order_u"] == pytest.approx(3.0)
        assert rows[1]["newton_iters"] == 5.0
        assert rows[1]["h"] == pytest.approx(0.25)

    def test_write_failure(self, report: ErrorReport, tmp_path: Path) -> None:
        """Тест: каталог на месте файла вызывает ExportError."""
        blocker = tmp_path / "blocker"
        blocker.write_text("")
        with pytest.raises(ExportError, match="Cannot write"):
            write_error_csv(report, blocker / "errors.csv")

    def test_read_missing(self, tmp_path: Path) -> None:
        """Тест: отсутствующий файл вызывает ExportError."""
        with pytest.raises(ExportError, match="Cannot read"):
            read_error_csv(tmp_path / "missing.csv")


class TestVtk:
    """Тесты для записи полей в формате VTK."""

    def test_tetrahedral_mesh(self, cube_mesh: Mesh, tmp_path: Path) -> None:
        """Тест: вершины, ячейки и поля сохраняются."""
        jacobian = np.linspace(0.9, 1.1, cube_mesh.n_cells)
        displacement = np.tile([0.1, 0.0, -0.1], (len(cube_mesh.vertices), 1))
        path = write_vtk(
            tmp_path / "cube.vtk",
            cube_mesh,
            point_data={"displacement": displacement},
            cell_data={"jacobian": jacobian},
        )
        data = read_vtk(path)
        np.testing.assert_allclose(data.points, cube_mesh.vertices)
        np.testing.assert_array_equal(data.cells, cube_mesh.cells)
        np.testing.assert_allclose(data.cell_data["jacobian"], jacobian)
        np.testing.assert_allclose(data.point_data["displacement"], displacement)

    def test_planar_fields_are_padded(self, square_mesh: Mesh, tmp_path: Path) -> None:
        """Тест: в 2D координаты и векторы дополняются нулевой компонентой."""
        displacement = np.ones((len(square_mesh.vertices), 2))
        data = read_vtk(write_vtk(tmp_path / "square.vtk", square_mesh, point_data={"u": displacement}))
        assert data.points.shape == (len(square_mesh.vertices), 3)
        np.testing.assert_allclose(data.points[:, 2], 0.0)
        np.testing.assert_allclose(data.point_data["u"][:, :2], 1.0)
        np.testing.assert_allclose(data.point_data["u"][:, 2], 0.0)

    def test_read_missing(self, tmp_path: Path) -> None:
        """Тест: отсутствующий файл вызывает ExportError."""
        with pytest.raises(ExportError):
            read_vtk(tmp_path / "missing.vtk")

    def test_export_solution(self, cube_mesh: Mesh, manufactured: CaseDefinition, shho: MethodConfig, tmp_path: Path) -> None:
        """Тест: решение записывается с перемещением и полями ячеек."""
        problem = DiscreteProblem(cube_mesh, manufactured, shho, threads=1)
        path = export_solution(problem, problem.zero_state(), tmp_path / "solution.vtk")
        data = read_vtk(path)
        assert set(data.cell_data) == {"jacobian", "von_mises", "displacement_magnitude"}
        np.testing.assert_allclose(data.cell_data["jacobian"], 1.0)
        np.testing.assert_allclose(data.point_data["displacement"], 0.0)
