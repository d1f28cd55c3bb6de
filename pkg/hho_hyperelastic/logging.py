"""Логирование для hho-hyperelastic.

Все модули пишут в логгер пакета `hho_hyperelastic` через адаптер с
именем компонента (`newton`, `study`, `mesh`, ...). Уровень задается
ключом `log_level` секции `[run]` или флагом `-v`; журнал расчета можно
дополнительно писать в файл (`log_file`).
"""

from __future__ import annotations

import logging
from logging import LoggerAdapter
from pathlib import Path

PACKAGE_LOGGER = "hho_hyperelastic"
CONSOLE_FORMAT = "[hho-hyperelastic] %(component)s: %(message)s"
FILE_FORMAT = "%(asctime)s %(levelname)-7s %(component)s: %(message)s"

LOG_LEVELS = {
    "debug": logging.DEBUG,
    "info": logging.INFO,
    "warning": logging.WARNING,
    "error": logging.ERROR,
}

_logger = logging.getLogger(PACKAGE_LOGGER)


def parse_level(value: int | str) -> int:
    """Переводит имя уровня из конфигурации в числовой уровень logging.

    Raises:
        ValueError: Если имя уровня неизвестно
    """
    if isinstance(value, int):
        return value
    try:
        return LOG_LEVELS[value.strip().lower()]
    except KeyError:
        raise ValueError(f"unknown log level {value!r}, expected one of {sorted(LOG_LEVELS)}") from None


def get_logger(component: str | None = None) -> LoggerAdapter:
    """Логгер компонента пакета.

    Args:
        component: Имя компонента, например "newton"

    Returns:
        LoggerAdapter, добавляющий поле `component` в записи

    Пример использования:
        >>> logger = get_logger("newton")
        >>> logger.info("Load step 1 converged")
        # Выведет: [hho-hyperelastic] newton: Load step 1 converged
    """
    return logging.LoggerAdapter(_logger, {"component": component or "core"})


def _own_handlers(kind: str) -> list[logging.Handler]:
    return [h for h in _logger.handlers if getattr(h, "_hho_handler", None) == kind]


def setup_logging(level: int | str = logging.INFO, log_file: str | Path | None = None) -> None:
    """Настраивает вывод логгера пакета.

    Консольный обработчик устанавливается один раз; файловый заменяется
    при каждом вызове с log_file.

    Args:
        level: Уровень (число или имя: "debug", "info", ...)
        log_file: Файл журнала расчета (None: только консоль)

    Raises:
        ValueError: Если имя уровня неизвестно
    """
    numeric = parse_level(level)
    if not _own_handlers("console"):
        console = logging.StreamHandler()
        console.setFormatter(logging.Formatter(CONSOLE_FORMAT))
        console._hho_handler = "console"  # type: ignore[attr-defined]
        _logger.addHandler(console)
    if log_file is not None:
        for old in _own_handlers("file"):
            _logger.removeHandler(old)
            old.close()
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, encoding="utf-8")
        handler.setFormatter(logging.Formatter(FILE_FORMAT))
        handler._hho_handler = "file"  # type: ignore[attr-defined]
        _logger.addHandler(handler)
    _logger.setLevel(numeric)
    _logger.propagate = False
