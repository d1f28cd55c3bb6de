"""Фикстуры pytest для тестирования hho-hyperelastic."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from datetime import datetime

import numpy as np
import pytest

from hho_hyperelastic.cases import linear_manufactured_case, manufactured_case
from hho_hyperelastic.config import MethodConfig
from hho_hyperelastic.mesh import Mesh, generate_cube_mesh, generate_square_mesh
from hho_hyperelastic.progress import LoadStepProgress, StepStatus


@pytest.fixture(autouse=True)
def restore_package_logger() -> Iterator[None]:
    """Восстанавливает обработчики и уровень логгера пакета после теста."""
    logger = logging.getLogger("hho_hyperelastic")
    handlers, level, propagate = list(logger.handlers), logger.level, logger.propagate
    yield
    logger.handlers[:] = handlers
    logger.setLevel(level)
    logger.propagate = propagate


@pytest.fixture
def rng() -> np.random.Generator:
    """Генератор случайных чисел с фиксированным seed."""
    return np.random.default_rng(1234)


@pytest.fixture
def unit_tetra() -> Mesh:
    """Сетка из одного опорного тетраэдра."""
    vertices = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    return Mesh.from_cells(vertices, [[0, 1, 2, 3]])


@pytest.fixture
def unit_triangle() -> Mesh:
    """Сетка из одного опорного треугольника."""
    return Mesh.from_cells([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 2]])


@pytest.fixture
def cube_mesh() -> Mesh:
    """Сетка куба из 6 тетраэдров."""
    return generate_cube_mesh(1)


@pytest.fixture
def cube_mesh_2() -> Mesh:
    """Сетка куба из 48 тетраэдров."""
    return generate_cube_mesh(2)


@pytest.fixture
def square_mesh() -> Mesh:
    """Сетка квадрата из 8 треугольников."""
    return generate_square_mesh(2)


@pytest.fixture
def shho() -> MethodConfig:
    return MethodConfig.shho(k=1)


@pytest.fixture
def uhho() -> MethodConfig:
    return MethodConfig.uhho(k=1)


@pytest.fixture
def manufactured():
    """Случай с изготовленным решением (параметры по умолчанию)."""
    return manufactured_case()


@pytest.fixture
def linear_case_3d():
    return linear_manufactured_case(3)


@pytest.fixture
def converged_step() -> LoadStepProgress:
    """Сошедшийся шаг нагружения."""
    return LoadStepProgress(
        step=0,
        load_factor=1.0,
        status=StepStatus.CONVERGED,
        residual_history=[1.0, 1e-3, 1e-9],
        iterations=2,
        started_at=datetime(2024, 1, 1, 12, 0, 0),
        completed_at=datetime(2024, 1, 1, 12, 0, 5),
    )


@pytest.fixture
def bisected_step() -> LoadStepProgress:
    """Шаг нагружения, разделенный пополам."""
    return LoadStepProgress(
        step=1,
        load_factor=0.5,
        status=StepStatus.BISECTED,
        residual_history=[1.0, 2.0],
        iterations=1,
        error_message="Newton iterations did not converge",
    )
