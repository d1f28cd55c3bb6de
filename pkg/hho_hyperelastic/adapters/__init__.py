"""Адаптеры для мониторов шагов нагружения."""

from __future__ import annotations

from hho_hyperelastic.adapters.csvfile import CsvStepMonitor
from hho_hyperelastic.adapters.memory import MemoryStepMonitor

__all__ = ["CsvStepMonitor", "MemoryStepMonitor"]

# Опциональные адаптеры импортируются только при наличии зависимостей
try:
    from hho_hyperelastic.adapters.sql import SQLStepMonitor  # noqa: F401

    __all__.append("SQLStepMonitor")
except ImportError:
    pass
