"""Симплициальные сетки: чтение, генерация, грани и геометрия ячеек."""

from __future__ import annotations

import math
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations, permutations
from pathlib import Path

import meshio
import numpy as np
from scipy.spatial import cKDTree

from hho_hyperelastic.exceptions import MeshError
from hho_hyperelastic.logging import get_logger

# Маркер отсутствующего соседа у граничной грани
BOUNDARY = -1
DEFAULT_BOUNDARY_TAG = "boundary"
DEGENERACY_THRESHOLD = 1e-14

# Типы элементов файла Gmsh, которые допускает чтение
_GMSH_CELL_TYPES = {"vertex", "line", "triangle", "tetra"}

FaceTagger = Callable[[np.ndarray], "str | None"]


@dataclass(frozen=True)
class Mesh:
    """Аффинная симплициальная сетка с ориентированным скелетом граней.

    Локальная грань i ячейки противолежит ее вершине i. Грань
    идентифицируется отсортированным кортежем индексов вершин; владелец
    грани - ячейка с меньшим индексом.

    Attributes:
        dim: Размерность пространства (2 или 3)
        vertices: Координаты вершин, массив (n_vertices, dim)
        cells: Индексы вершин ячеек, массив (n_cells, dim + 1), det > 0
        faces: Отсортированные индексы вершин граней, массив (n_faces, dim)
        cell_faces: Индексы граней ячейки в локальном порядке
        cell_face_signs: +1 если ячейка владелец грани, -1 если сосед
        face_cells: Пара (владелец, сосед или BOUNDARY) для каждой грани
        boundary_tags: Тег каждой граничной грани (индекс грани -> тег)
    """

    dim: int
    vertices: np.ndarray
    cells: np.ndarray
    faces: np.ndarray
    cell_faces: np.ndarray
    cell_face_signs: np.ndarray
    face_cells: np.ndarray
    boundary_tags: Mapping[int, str]

    @classmethod
    def from_cells(
        cls,
        vertices: np.ndarray | Sequence[Sequence[float]],
        cells: np.ndarray | Sequence[Sequence[int]],
        facet_tags: Mapping[tuple[int, ...], str] | None = None,
        tagger: FaceTagger | None = None,
        default_tag: str = DEFAULT_BOUNDARY_TAG,
    ) -> Mesh:
        """Строит сетку по вершинам и ячейкам.

        Ориентация ячеек исправляется перестановкой двух вершин, если
        определитель якобиана отрицателен.

        Args:
            vertices: Координаты вершин (лишние координаты отбрасываются)
            cells: Ячейки как (dim + 1)-кортежи индексов вершин
            facet_tags: Теги граничных граней по отсортированному кортежу вершин
            tagger: Функция, возвращающая тег по координатам вершин грани
            default_tag: Тег граничных граней, не получивших другого тега

        Returns:
            Неизменяемая сетка

        Raises:
            MeshError: Если ячейка вырождена или грань принадлежит более
                чем двум ячейкам
        """
        cells_arr = np.array(cells, dtype=np.int64)
        if cells_arr.ndim != 2 or cells_arr.shape[1] not in (3, 4):
            raise MeshError("Cells must be triangles or tetrahedra")
        dim = cells_arr.shape[1] - 1
        verts = np.array(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] < dim:
            raise MeshError(f"Vertices must have at least {dim} coordinates")
        verts = np.ascontiguousarray(verts[:, :dim])

        edges = verts[cells_arr[:, 1:]] - verts[cells_arr[:, :1]]
        dets = np.linalg.det(edges)
        flipped = dets < 0.0
        cells_arr[flipped, 1], cells_arr[flipped, 2] = (
            cells_arr[flipped, 2].copy(),
            cells_arr[flipped, 1].copy(),
        )
        for c in np.flatnonzero(np.abs(dets) < DEGENERACY_THRESHOLD):
            pts = verts[cells_arr[c]]
            diameter = max(np.linalg.norm(p - q) for p, q in combinations(pts, 2))
            if abs(dets[c]) / math.factorial(dim) < DEGENERACY_THRESHOLD * diameter**dim:
                raise MeshError(f"Cell {c} is degenerate")

        face_index: dict[tuple[int, ...], int] = {}
        faces: list[tuple[int, ...]] = []
        face_cells: list[list[int]] = []
        cell_faces = np.empty((len(cells_arr), dim + 1), dtype=np.int64)
        signs = np.empty((len(cells_arr), dim + 1), dtype=np.int64)
        for c, cell in enumerate(cells_arr.tolist()):
            for i in range(dim + 1):
                key = tuple(sorted(cell[:i] + cell[i + 1 :]))
                f = face_index.get(key)
                if f is None:
                    f = len(faces)
                    face_index[key] = f
                    faces.append(key)
                    face_cells.append([c, BOUNDARY])
                    signs[c, i] = 1
                else:
                    if face_cells[f][1] != BOUNDARY:
                        raise MeshError(
                            f"Face {key} is shared by more than two cells "
                            "(hanging nodes or non-manifold mesh)"
                        )
                    face_cells[f][1] = c
                    signs[c, i] = -1
                cell_faces[c, i] = f

        face_cells_arr = np.array(face_cells, dtype=np.int64)
        boundary_tags: dict[int, str] = {}
        for f in np.flatnonzero(face_cells_arr[:, 1] == BOUNDARY).tolist():
            key = faces[f]
            tag = facet_tags.get(key) if facet_tags else None
            if tag is None and tagger is not None:
                tag = tagger(verts[list(key)])
            boundary_tags[f] = tag if tag is not None else default_tag

        arrays = (
            verts,
            cells_arr,
            np.array(faces, dtype=np.int64),
            cell_faces,
            signs,
            face_cells_arr,
        )
        for arr in arrays:
            arr.setflags(write=False)
        return cls(dim, *arrays, boundary_tags)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def boundary_faces(self) -> np.ndarray:
        """Индексы граничных граней в порядке возрастания."""
        return np.flatnonzero(self.face_cells[:, 1] == BOUNDARY)

    @cached_property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self.face_cells[:, 1] != BOUNDARY)

    @property
    def tags(self) -> set[str]:
        """Множество тегов граничных граней."""
        return set(self.boundary_tags.values())

    def faces_with_tag(self, tag: str) -> np.ndarray:
        """Возвращает индексы граничных граней с заданным тегом.

        Args:
            tag: Тег границы

        Returns:
            Отсортированный массив индексов граней
        """
        return np.array(
            sorted(f for f, t in self.boundary_tags.items() if t == tag), dtype=np.int64
        )

    def face_vertices(self, face: int) -> np.ndarray:
        """Координаты вершин грани в порядке возрастания глобальных индексов."""
        return self.vertices[self.faces[face]]

    def cell_vertices(self, cell: int) -> np.ndarray:
        return self.vertices[self.cells[cell]]

    @cached_property
    def geometries(self) -> tuple[CellGeometry, ...]:
        """Геометрия всех ячеек (вычисляется один раз)."""
        return tuple(cell_geometry(self, c) for c in range(self.n_cells))

    @property
    def mean_cell_diameter(self) -> float:
        """Средний диаметр ячеек (средний размер сетки h)."""
        return float(np.mean([g.diameter for g in self.geometries]))

    @property
    def total_measure(self) -> float:
        return float(sum(g.measure for g in self.geometries))


@dataclass(frozen=True)
class CellGeometry:
    """Геометрические величины ячейки и ее граней.

    Массивы граней упорядочены как локальные грани ячейки.

    Attributes:
        barycenter: Барицентр ячейки
        diameter: Диаметр h_T (максимальное расстояние между вершинами)
        measure: Объем (площадь) |T|
        face_diameters: Диаметры h_F граней
        face_normals: Единичные внешние нормали граней
        face_measures: Площади (длины) граней
        face_barycenters: Барицентры граней
    """

    barycenter: np.ndarray
    diameter: float
    measure: float
    face_diameters: np.ndarray
    face_normals: np.ndarray
    face_measures: np.ndarray
    face_barycenters: np.ndarray

    @property
    def gamma(self) -> np.ndarray:
        """Весовая функция h_F^{-1} полунормы деформаций по граням."""
        return 1.0 / self.face_diameters


def _diameter(points: np.ndarray) -> float:
    return max(float(np.linalg.norm(p - q)) for p, q in combinations(points, 2))


def cell_geometry(mesh: Mesh, cell: int) -> CellGeometry:
    """Вычисляет геометрию ячейки.

    Args:
        mesh: Сетка
        cell: Индекс ячейки

    Returns:
        CellGeometry ячейки

    Raises:
        MeshError: Если мера ячейки меньше 1e-14 * h_T^d
    """
    if not 0 <= cell < mesh.n_cells:
        raise IndexError(f"Cell index {cell} out of range")
    dim = mesh.dim
    pts = mesh.cell_vertices(cell)
    barycenter = pts.mean(axis=0)
    diameter = _diameter(pts)
    measure = abs(float(np.linalg.det(pts[1:] - pts[0]))) / math.factorial(dim)
    if measure < DEGENERACY_THRESHOLD * diameter**dim:
        raise MeshError(f"Cell {cell} is degenerate (measure {measure:.3e})")

    normals = np.empty((dim + 1, dim))
    face_measures = np.empty(dim + 1)
    face_diameters = np.empty(dim + 1)
    face_barycenters = np.empty((dim + 1, dim))
    for i in range(dim + 1):
        fp = np.delete(pts, i, axis=0)
        fb = fp.mean(axis=0)
        if dim == 2:
            t = fp[1] - fp[0]
            n = np.array([t[1], -t[0]])
            face_measures[i] = np.linalg.norm(t)
        else:
            n = np.cross(fp[1] - fp[0], fp[2] - fp[0])
            face_measures[i] = 0.5 * np.linalg.norm(n)
        n = n / np.linalg.norm(n)
        if np.dot(n, fb - barycenter) < 0.0:
            n = -n
        normals[i] = n
        face_diameters[i] = _diameter(fp)
        face_barycenters[i] = fb
    return CellGeometry(
        barycenter=barycenter,
        diameter=diameter,
        measure=measure,
        face_diameters=face_diameters,
        face_normals=normals,
        face_measures=face_measures,
        face_barycenters=face_barycenters,
    )


def load_gmsh(path: str | Path) -> Mesh:
    """Читает сетку в формате обмена Gmsh (через meshio).

    Ячейки - треугольники (2D) или тетраэдры (3D); элементы размерности
    на единицу меньше с физическим тегом задают теги граничных граней.
    Имя тега берется из физических имен файла, иначе используется номер тега.

    Args:
        path: Путь к файлу .msh

    Returns:
        Сетка с заполненными boundary_tags

    Raises:
        MeshError: Если файл поврежден, содержит неподдерживаемый тип
            элемента или висячие узлы
    """
    logger = get_logger("mesh")
    try:
        data = meshio.read(str(path), file_format="gmsh")
    except OSError as e:
        raise MeshError(f"Cannot read mesh file '{path}': {e}") from e
    except (meshio.ReadError, ValueError, IndexError, KeyError) as e:
        raise MeshError(f"Malformed mesh file '{path}': {e}") from e

    for block in data.cells:
        if block.type not in _GMSH_CELL_TYPES:
            raise MeshError(f"unsupported element type {block.type}")
    types = {block.type for block in data.cells}
    dim = 3 if "tetra" in types else 2
    cell_type, facet_type = ("tetra", "triangle") if dim == 3 else ("triangle", "line")
    cells = [block.data for block in data.cells if block.type == cell_type]
    if not cells:
        raise MeshError(f"Mesh file '{path}' contains no simplicial cells")

    names = {
        int(tag): name for name, (tag, tag_dim) in data.field_data.items() if tag_dim == dim - 1
    }
    physical = data.cell_data.get("gmsh:physical", [None] * len(data.cells))
    facet_tags: dict[tuple[int, ...], str] = {}
    for block, tags in zip(data.cells, physical):
        if block.type != facet_type or tags is None:
            continue
        for nodes, tag in zip(block.data.tolist(), np.asarray(tags).tolist()):
            if tag > 0:
                facet_tags[tuple(sorted(nodes))] = names.get(int(tag), str(tag))

    mesh = Mesh.from_cells(data.points, np.vstack(cells), facet_tags=facet_tags)
    logger.debug(
        f"Loaded {path}: {mesh.n_cells} cells, {mesh.n_faces} faces, "
        f"tags {sorted(mesh.tags)}"
    )
    return mesh


def _kuhn_cells(
    shape: Sequence[int], vertex_id: Callable[[Sequence[int]], int]
) -> list[list[int]]:
    """Разбиение Куна каждого гиперкуба индексной решетки на d! симплексов."""
    dim = len(shape)
    cells = []
    for corner in np.ndindex(*shape):
        for perm in permutations(range(dim)):
            idx = list(corner)
            simplex = [vertex_id(idx)]
            for axis in perm:
                idx[axis] += 1
                simplex.append(vertex_id(idx))
            cells.append(simplex)
    return cells


def _axis_tagger(lower: Sequence[float], upper: Sequence[float]) -> FaceTagger:
    def tag(points: np.ndarray) -> str | None:
        for axis, name in enumerate("xyz"[: points.shape[1]]):
            if np.allclose(points[:, axis], lower[axis], atol=1e-12):
                return f"{name}0"
            if np.allclose(points[:, axis], upper[axis], atol=1e-12):
                return f"{name}1"
        return None

    return tag


def generate_box_mesh(
    lower: Sequence[float],
    upper: Sequence[float],
    divisions: int | Sequence[int],
    tagger: FaceTagger | None = None,
) -> Mesh:
    """Генерирует структурированную сетку прямоугольника или параллелепипеда.

    Каждая клетка решетки разбивается по Куну (2 треугольника или
    6 тетраэдров). По умолчанию граничные грани помечаются
    "x0", "x1", "y0", "y1" (и "z0", "z1" в 3D).

    Args:
        lower: Нижний угол области
        upper: Верхний угол области
        divisions: Число разбиений по каждой оси
        tagger: Функция тегирования граней (по умолчанию по сторонам)

    Returns:
        Сетка области
    """
    dim = len(lower)
    shape = [divisions] * dim if isinstance(divisions, int) else list(divisions)
    if len(shape) != dim or min(shape) < 1:
        raise ValueError("divisions must be >= 1 for every axis")
    counts = [n + 1 for n in shape]
    axes = [np.linspace(lower[a], upper[a], counts[a]) for a in range(dim)]
    strides = np.cumprod([1] + counts[:-1])
    # первая ось меняется быстрее всех
    vertices = np.array(
        [
            [axes[a][rev[dim - 1 - a]] for a in range(dim)]
            for rev in np.ndindex(*reversed(counts))
        ]
    )

    def vertex_id(idx: Sequence[int]) -> int:
        return int(np.dot(idx, strides))

    cells = _kuhn_cells(shape, vertex_id)
    return Mesh.from_cells(vertices, cells, tagger=tagger or _axis_tagger(lower, upper))


def generate_cube_mesh(n: int) -> Mesh:
    """Генерирует сетку единичного куба из 6 n^3 тетраэдров.

    Args:
        n: Число разбиений ребра (n >= 1)

    Returns:
        Сетка с тегами граней "x0", "x1", "y0", "y1", "z0", "z1"
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    return generate_box_mesh((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), n)


def generate_square_mesh(n: int) -> Mesh:
    """Генерирует сетку единичного квадрата из 2 n^2 треугольников."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return generate_box_mesh((0.0, 0.0), (1.0, 1.0), n)


def _radius_tagger(named_radii: Mapping[str, float]) -> FaceTagger:
    def tag(points: np.ndarray) -> str | None:
        radii = np.hypot(points[:, 0], points[:, 1])
        for name, r in named_radii.items():
            if np.allclose(radii, r, rtol=0.0, atol=1e-12):
                return name
        return None

    return tag


def generate_annulus_mesh(
    r_inner: float, r_outer: float, n_radial: int, n_angular: int
) -> Mesh:
    """Генерирует триангуляцию кольца с центром в начале координат.

    Граница аппроксимируется многоугольником с вершинами ровно на
    окружностях. Внутренняя окружность помечается "inner", внешняя "outer".

    Args:
        r_inner: Внутренний радиус
        r_outer: Внешний радиус
        n_radial: Число слоев по радиусу (>= 1)
        n_angular: Число секторов по углу (>= 3)

    Returns:
        Сетка из 2 * n_radial * n_angular треугольников
    """
    if not 0.0 < r_inner < r_outer:
        raise ValueError("Expected 0 < r_inner < r_outer")
    if n_radial < 1 or n_angular < 3:
        raise ValueError("Expected n_radial >= 1 and n_angular >= 3")
    radii = np.linspace(r_inner, r_outer, n_radial + 1)
    radii[0], radii[-1] = r_inner, r_outer
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    vertices = np.array([[r * np.cos(t), r * np.sin(t)] for r in radii for t in theta])

    def vid(i: int, j: int) -> int:
        return (j % n_angular) + n_angular * i

    cells = []
    for i in range(n_radial):
        for j in range(n_angular):
            a, b = vid(i, j), vid(i, j + 1)
            c, e = vid(i + 1, j + 1), vid(i + 1, j)
            cells.extend([[a, b, c], [a, c, e]])
    tagger = _radius_tagger({"inner": r_inner, "outer": r_outer})
    return Mesh.from_cells(vertices, cells, tagger=tagger)


def generate_hollow_cylinder_mesh(
    r_inner: float,
    r_outer: float,
    height: float,
    n_radial: int,
    n_angular: int,
    n_height: int,
) -> Mesh:
    """Генерирует тетраэдральную сетку полого цилиндра вдоль оси Z.

    Решетка (радиус, угол, высота) разбивается по Куну в индексном
    пространстве; разбиение согласовано на угловом шве. Теги: "bottom"
    (Z = 0), "top" (Z = height), "inner", "outer".
    """
    if not 0.0 < r_inner < r_outer or height <= 0.0:
        raise ValueError("Expected 0 < r_inner < r_outer and height > 0")
    if n_radial < 1 or n_angular < 3 or n_height < 1:
        raise ValueError("Expected n_radial >= 1, n_angular >= 3, n_height >= 1")
    radii = np.linspace(r_inner, r_outer, n_radial + 1)
    theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
    heights = np.linspace(0.0, height, n_height + 1)
    vertices = np.array(
        [
            [r * np.cos(t), r * np.sin(t), z]
            for z in heights
            for r in radii
            for t in theta
        ]
    )

    def vertex_id(idx: Sequence[int]) -> int:
        i, j, level = idx
        return (j % n_angular) + n_angular * (i + (n_radial + 1) * level)

    cells = _kuhn_cells((n_radial, n_angular, n_height), vertex_id)
    radial = _radius_tagger({"inner": r_inner, "outer": r_outer})

    def tagger(points: np.ndarray) -> str | None:
        if np.allclose(points[:, 2], 0.0, atol=1e-12):
            return "bottom"
        if np.allclose(points[:, 2], height, atol=1e-12):
            return "top"
        return radial(points)

    return Mesh.from_cells(vertices, cells, tagger=tagger)


def generate_ball_mesh(
    n: int,
    radius: float = 1.0,
    cavities: Sequence[tuple[Sequence[float], float]] = (),
) -> Mesh:
    """Генерирует грубую тетраэдральную сетку шара с полостями.

    Решетка куба [-1, 1]^3 отображается на шар радиальным растяжением
    (вершины граней куба попадают на сферу). Ячейки, барицентр которых
    лежит внутри полости, удаляются; граница полости получается
    ступенчатой. Теги: "outer" (внешняя сфера) и "cavity".

    Args:
        n: Число разбиений ребра куба (четное, >= 2)
        radius: Радиус шара
        cavities: Пары (центр, радиус) сферических полостей

    Returns:
        Сетка шара
    """
    if n < 2 or n % 2:
        raise ValueError("n must be an even integer >= 2")
    axis = np.linspace(-1.0, 1.0, n + 1)
    grid = np.array([[x, y, z] for z in axis for y in axis for x in axis])
    norms = np.linalg.norm(grid, axis=1)
    stretch = np.divide(
        np.max(np.abs(grid), axis=1), norms, out=np.zeros_like(norms), where=norms > 0.0
    )
    vertices = radius * grid * stretch[:, None]
    strides = np.array([1, n + 1, (n + 1) ** 2])

    def vertex_id(idx: Sequence[int]) -> int:
        return int(np.dot(idx, strides))

    cells = np.array(_kuhn_cells((n, n, n), vertex_id))
    centers = vertices[cells].mean(axis=1)
    keep = np.ones(len(cells), dtype=bool)
    for center, r in cavities:
        keep &= np.linalg.norm(centers - np.asarray(center, dtype=float), axis=1) > r
    cells = cells[keep]
    used, compact = np.unique(cells, return_inverse=True)

    def tagger(points: np.ndarray) -> str:
        on_sphere = np.allclose(np.linalg.norm(points, axis=1), radius, rtol=0.0, atol=1e-9)
        return "outer" if on_sphere else "cavity"

    return Mesh.from_cells(vertices[used], compact.reshape(cells.shape), tagger=tagger)


def barycentric_coordinates(mesh: Mesh, cell: int, points: np.ndarray) -> np.ndarray:
    """Барицентрические координаты точек относительно ячейки, массив (n, d + 1)."""
    pts = mesh.cell_vertices(cell)
    lam = np.linalg.solve((pts[1:] - pts[0]).T, (np.atleast_2d(points) - pts[0]).T).T
    return np.column_stack([1.0 - lam.sum(axis=1), lam])


def locate_points(mesh: Mesh, points: np.ndarray, candidates: int = 16) -> np.ndarray:
    """Находит ячейку, содержащую каждую точку.

    Кандидаты отбираются по ближайшим барицентрам; если точка лежит вне
    сетки (например, из-за многоугольной аппроксимации кривой границы),
    возвращается ближайшая по барицентрическим координатам ячейка.

    Args:
        mesh: Сетка
        points: Точки, массив (n, dim)
        candidates: Число ближайших ячеек для проверки

    Returns:
        Индексы ячеек, массив (n,)
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    centers = np.array([g.barycenter for g in mesh.geometries])
    k = min(candidates, mesh.n_cells)
    _, nearest = cKDTree(centers).query(points, k=k)
    nearest = np.asarray(nearest).reshape(len(points), k)
    found = np.empty(len(points), dtype=np.int64)
    for p, point in enumerate(points):
        best, best_score = int(nearest[p, 0]), -np.inf
        for c in nearest[p]:
            score = float(barycentric_coordinates(mesh, int(c), point).min())
            if score > best_score:
                best, best_score = int(c), score
            if score >= -1e-10:
                break
        found[p] = best
    return found
