"""Запись результатов: таблицы сходимости (CSV) и поля (VTK legacy ASCII)."""

from __future__ import annotations

import csv
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import meshio
import numpy as np

from hho_hyperelastic.assembly import DiscreteProblem, DiscreteState
from hho_hyperelastic.exceptions import ExportError
from hho_hyperelastic.mesh import Mesh
from hho_hyperelastic.postproc import ErrorReport, derived_fields, vertex_displacement

CSV_COLUMNS = ["h", "err_u", "order_u", "err_G", "order_G", "newton_iters"]
_VTK_CELL_TYPES = {2: "triangle", 3: "tetra"}


def output_path(
    out_dir: str | Path, case: str, method_label: str, k: int, level: int | str, suffix: str
) -> Path:
    """Имя файла результата: <case>_<method>_k<k>_<level>.<suffix>."""
    return Path(out_dir) / f"{case}_{method_label}_k{k}_{level}.{suffix}"


def _format(value: float | int | None) -> str:
    if value is None:
        return ""
    return str(value) if isinstance(value, int) else f"{value:.10e}"


def write_error_csv(report: ErrorReport, path: str | Path) -> Path:
    """Записывает таблицу ошибок; порядки пусты в первой строке.

    Raises:
        ExportError: Если файл не удалось записать
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for row in report.rows():
                writer.writerow({key: _format(row[key]) for key in CSV_COLUMNS})
    except OSError as e:
        raise ExportError(f"Cannot write '{path}': {e}") from e
    return path


def read_error_csv(path: str | Path) -> list[dict[str, float | None]]:
    """Читает таблицу ошибок, записанную write_error_csv.

    Raises:
        ExportError: Если файл не удалось прочитать
    """
    try:
        with Path(path).open(newline="") as handle:
            return [
                {key: float(value) if value else None for key, value in row.items()}
                for row in csv.DictReader(handle)
            ]
    except (OSError, ValueError) as e:
        raise ExportError(f"Cannot read '{path}': {e}") from e


@dataclass
class VtkData:
    """Содержимое VTK-файла.

    Attributes:
        points: Координаты вершин (n, 3)
        cells: Связность ячеек
        point_data: Поля в вершинах
        cell_data: Поля в ячейках
    """

    points: np.ndarray
    cells: np.ndarray
    point_data: dict[str, np.ndarray]
    cell_data: dict[str, np.ndarray]


def _pad3(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 2 and values.shape[1] < 3:
        return np.hstack([values, np.zeros((len(values), 3 - values.shape[1]))])
    return values


def write_vtk(
    path: str | Path,
    mesh: Mesh,
    point_data: Mapping[str, np.ndarray] | None = None,
    cell_data: Mapping[str, np.ndarray] | None = None,
) -> Path:
    """Записывает сетку и поля в формате VTK legacy ASCII.

    Векторные поля в 2D дополняются нулевой третьей компонентой.

    Raises:
        ExportError: Если файл не удалось записать
    """
    path = Path(path)
    data = meshio.Mesh(
        points=_pad3(mesh.vertices),
        cells=[(_VTK_CELL_TYPES[mesh.dim], np.asarray(mesh.cells))],
        point_data={name: _pad3(values) for name, values in (point_data or {}).items()},
        cell_data={name: [np.asarray(values, dtype=float)] for name, values in (cell_data or {}).items()},
    )
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        meshio.write(str(path), data, file_format="vtk", binary=False)
    except OSError as e:
        raise ExportError(f"Cannot write '{path}': {e}") from e
    return path


def read_vtk(path: str | Path) -> VtkData:
    """Читает VTK-файл, записанный write_vtk.

    Raises:
        ExportError: Если файл не удалось прочитать
    """
    try:
        data = meshio.read(str(path), file_format="vtk")
    except (OSError, meshio.ReadError, ValueError) as e:
        raise ExportError(f"Cannot read '{path}': {e}") from e
    return VtkData(
        points=np.asarray(data.points),
        cells=np.vstack([block.data for block in data.cells]),
        point_data={name: np.asarray(values) for name, values in data.point_data.items()},
        cell_data={name: np.concatenate(values) for name, values in data.cell_data.items()},
    )


def export_solution(problem: DiscreteProblem, state: DiscreteState, path: str | Path) -> Path:
    """Записывает перемещение в вершинах и поля J^h, von Mises в ячейках."""
    fields = derived_fields(problem, state)
    return write_vtk(
        path,
        problem.mesh,
        point_data={"displacement": vertex_displacement(problem, state)},
        cell_data={
            "jacobian": fields.jacobian,
            "von_mises": fields.von_mises,
            "displacement_magnitude": fields.displacement_magnitude,
        },
    )
