"""
HHO Hyperelastic - Hybrid High-Order methods for finite-deformation hyperelasticity.

Стабилизированный (sHHO) и нестабилизированный (uHHO) варианты метода на
симплициальных сетках: локальные реконструкции, статическая конденсация,
метод Ньютона с пошаговым нагружением и равновесные тракции.

Основные компоненты:
    - ConvergenceStudy: Решение случая на последовательности сеток
    - DiscreteProblem: Дискретная задача (операторы, неизвестные, сборка)
    - CaseRegistry, CaseDefinition: Расчетные случаи
    - MethodConfig, NewtonConfig, RunConfig: Конфигурация
    - StepMonitor: Абстрактный класс мониторов шагов нагружения
    - LoadStepper: Итератор по коэффициентам нагрузки с делением шага

Пример использования:
    >>> from hho_hyperelastic import ConvergenceStudy, MethodConfig, NewtonConfig
    >>> from hho_hyperelastic.cases import manufactured_case
    >>> from hho_hyperelastic.adapters import MemoryStepMonitor
    >>>
    >>> study = ConvergenceStudy(
    ...     manufactured_case(), MethodConfig.shho(k=1), NewtonConfig(), monitor=MemoryStepMonitor()
    ... )
    >>> result = study.run([2, 4])
    >>> result.report.orders_u
"""

__version__ = "0.1.0"
from hho_hyperelastic.assembly import DiscreteProblem, DiscreteState
from hho_hyperelastic.cases import CaseDefinition, CaseRegistry
from hho_hyperelastic.config import Method, MethodConfig, NewtonConfig, RunConfig
from hho_hyperelastic.core import ConvergenceStudy, StudyResult
from hho_hyperelastic.exceptions import (
    ConfigError,
    ConvergenceError,
    ExportError,
    FactorizationError,
    HHOError,
    LinearSolveError,
    MeshError,
    MonitorError,
    NonPositiveJacobianError,
    QuadratureError,
)
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.iterators import LoadStepper
from hho_hyperelastic.logging import get_logger, setup_logging
from hho_hyperelastic.progress import LoadStepProgress, StepStatus
from hho_hyperelastic.solver import SolveResult, newton_solve
from hho_hyperelastic.validators import BoundaryRoleValidator, ConfigValidator

__all__ = [
    "ConvergenceStudy",
    "StudyResult",
    "DiscreteProblem",
    "DiscreteState",
    "CaseDefinition",
    "CaseRegistry",
    "Method",
    "MethodConfig",
    "NewtonConfig",
    "RunConfig",
    "SolveResult",
    "newton_solve",
    "StepMonitor",
    "LoadStepper",
    "LoadStepProgress",
    "StepStatus",
    "ConfigValidator",
    "BoundaryRoleValidator",
    "HHOError",
    "MeshError",
    "QuadratureError",
    "FactorizationError",
    "NonPositiveJacobianError",
    "LinearSolveError",
    "ConvergenceError",
    "ConfigError",
    "MonitorError",
    "ExportError",
    "get_logger",
    "setup_logging",
]

# Адаптеры импортируются напрямую из hho_hyperelastic.adapters
# Например: from hho_hyperelastic.adapters import CsvStepMonitor
