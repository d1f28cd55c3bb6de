"""Конфигурация метода, решателя Ньютона и расчета."""

from __future__ import annotations

import configparser
from collections.abc import Mapping
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any

from hho_hyperelastic.basis import GradSpace
from hho_hyperelastic.exceptions import ConfigError
from hho_hyperelastic.logging import parse_level

GRAD_SPACE_NAMES = {"pk": GradSpace.PK, "pkp1": GradSpace.PKP1, "rtn": GradSpace.RTN}


class Method(Enum):
    """Вариант метода HHO.

    Attributes:
        SHHO: Стабилизированный (градиент в P^k, стабилизация с beta = beta0 mu)
        UHHO: Нестабилизированный (градиент в P^{k+1} или RTN^k)
    """

    SHHO = "shho"
    UHHO = "uhho"


def parse_grad_space(value: str | GradSpace) -> GradSpace:
    """Разбирает имя пространства реконструкции ("pk", "pkp1", "rtn").

    Raises:
        ConfigError: Если имя неизвестно
    """
    if isinstance(value, GradSpace):
        return value
    key = value.strip().lower()
    if key in GRAD_SPACE_NAMES:
        return GRAD_SPACE_NAMES[key]
    try:
        return GradSpace(value)
    except ValueError:
        raise ConfigError(
            f"Unknown gradient space '{value}'. Known: {sorted(GRAD_SPACE_NAMES)}"
        ) from None


def grad_space_name(space: GradSpace) -> str:
    return next(name for name, s in GRAD_SPACE_NAMES.items() if s is space)


@dataclass(frozen=True)
class MethodConfig:
    """Параметры дискретизации.

    Attributes:
        method: Вариант метода
        k: Степень полиномов ячеек и граней (>= 1)
        grad_space: Пространство реконструкции градиента
        beta0: Масштаб стабилизации (beta = beta0 mu), 0 для uHHO
        quadrature_order: Порядок квадратуры нелинейных интегралов
            (None: 2k для sHHO, 2k + 2 для uHHO)
    """

    method: Method = Method.SHHO
    k: int = 1
    grad_space: GradSpace = GradSpace.PK
    beta0: float = 1.0
    quadrature_order: int | None = None

    def __post_init__(self) -> None:
        """Валидация согласованности метода и пространства."""
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.method is Method.SHHO:
            if self.grad_space is not GradSpace.PK:
                raise ValueError("sHHO requires the Pk_tensor gradient space")
            if not self.beta0 > 0.0:
                raise ValueError("sHHO requires beta0 > 0")
        else:
            if self.grad_space is GradSpace.PK:
                raise ValueError("uHHO requires the Pkp1_tensor or RTN_k gradient space")
            if self.beta0 != 0.0:
                raise ValueError("uHHO requires beta0 = 0")
        if self.quadrature_order is not None and self.quadrature_order < 0:
            raise ValueError("quadrature_order cannot be negative")

    @classmethod
    def shho(cls, k: int = 1, beta0: float = 1.0, **kwargs: Any) -> MethodConfig:
        return cls(Method.SHHO, k, GradSpace.PK, beta0, **kwargs)

    @classmethod
    def uhho(cls, k: int = 1, grad_space: GradSpace = GradSpace.PKP1, **kwargs: Any) -> MethodConfig:
        return cls(Method.UHHO, k, grad_space, 0.0, **kwargs)

    @classmethod
    def create(
        cls,
        method: str | Method,
        k: int = 1,
        grad_space: str | GradSpace | None = None,
        beta0: float | None = None,
        quadrature_order: int | None = None,
    ) -> MethodConfig:
        """Создает конфигурацию с умолчаниями, зависящими от метода.

        Raises:
            ConfigError: Если комбинация параметров некорректна
        """
        try:
            method = Method(method) if isinstance(method, str) else method
            if method is Method.SHHO:
                space = parse_grad_space(grad_space) if grad_space else GradSpace.PK
                return cls(method, k, space, 1.0 if beta0 is None else beta0, quadrature_order)
            space = parse_grad_space(grad_space) if grad_space else GradSpace.PKP1
            return cls(method, k, space, 0.0 if beta0 is None else beta0, quadrature_order)
        except ValueError as e:
            raise ConfigError(f"Invalid method configuration: {e}") from e

    @property
    def stabilized(self) -> bool:
        return self.method is Method.SHHO

    def beta(self, mu: float) -> float:
        """Вес стабилизации beta = beta0 mu."""
        return self.beta0 * mu

    @property
    def label(self) -> str:
        """Короткая метка для имен файлов: "shho" или "uhho-rtn"."""
        if self.stabilized:
            return self.method.value
        return f"{self.method.value}-{grad_space_name(self.grad_space)}"


@dataclass(frozen=True)
class NewtonConfig:
    """Параметры метода Ньютона и нагружения.

    Attributes:
        rel_tol: Относительный допуск по невязке
        abs_tol: Абсолютный допуск по невязке
        max_iters: Максимум итераций на шаг
        load_steps: Число равномерных шагов нагрузки
        step_bisection_limit: Максимум делений шага пополам
        damping: Множитель приращения Ньютона (0 < damping <= 1)
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_iters: int = 20
    load_steps: int = 1
    step_bisection_limit: int = 8
    damping: float = 1.0

    def __post_init__(self) -> None:
        """Валидация параметров."""
        if not (self.rel_tol > 0.0 and self.abs_tol > 0.0):
            raise ValueError("Tolerances must be positive")
        if self.max_iters < 1 or self.load_steps < 1 or self.step_bisection_limit < 1:
            raise ValueError("max_iters, load_steps and step_bisection_limit must be >= 1")
        if not 0.0 < self.damping <= 1.0:
            raise ValueError("damping must lie in (0, 1]")


@dataclass(frozen=True)
class RunConfig:
    """Конфигурация расчета.

    Attributes:
        case: Имя расчетного случая
        method: Параметры дискретизации
        newton: Параметры метода Ньютона
        levels: Уровни сетки (число разбиений для генерируемых сеток)
        mesh: Путь к файлу сетки (для случаев с внешней геометрией)
        out_dir: Каталог результатов
        write_vtk: Записывать ли поля в формате VTK
        law: Имя определяющего соотношения (None: закон случая)
        mu: Модуль сдвига (None: значение случая)
        lam: Параметр Ламе lambda (None: значение случая)
        log_level: Уровень логирования ("debug", "info", "warning", "error")
        log_file: Файл журнала расчета (None: только консоль)
        monitor_url: Строка подключения SQLAlchemy для журнала шагов
            (None: CSV-файл в каталоге результатов)
    """

    case: str = "manufactured"
    method: MethodConfig = field(default_factory=MethodConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    levels: tuple[int, ...] = (2, 4, 8)
    mesh: Path | None = None
    out_dir: Path = Path("results")
    write_vtk: bool = False
    law: str | None = None
    mu: float | None = None
    lam: float | None = None
    log_level: str = "info"
    log_file: Path | None = None
    monitor_url: str | None = None

    def __post_init__(self) -> None:
        """Валидация параметров."""
        if not self.case:
            raise ValueError("case cannot be empty")
        if not self.levels or min(self.levels) < 1:
            raise ValueError("levels must be a non-empty list of positive integers")
        parse_level(self.log_level)

    def with_overrides(self, **changes: Any) -> RunConfig:
        """Копия с замененными полями (значения None игнорируются)."""
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def as_mapping(self) -> dict[str, dict[str, str]]:
        """Представление по секциям INI-файла."""
        run = {
            "case": self.case,
            "levels": ", ".join(str(level) for level in self.levels),
            "out": str(self.out_dir),
            "vtk": str(self.write_vtk).lower(),
            "log_level": self.log_level,
        }
        if self.mesh is not None:
            run["mesh"] = str(self.mesh)
        if self.log_file is not None:
            run["log_file"] = str(self.log_file)
        method = {
            "method": self.method.method.value,
            "order": str(self.method.k),
            "grad_space": grad_space_name(self.method.grad_space),
            "beta0": repr(self.method.beta0),
        }
        if self.method.quadrature_order is not None:
            method["quadrature_order"] = str(self.method.quadrature_order)
        newton = {
            "rel_tol": repr(self.newton.rel_tol),
            "abs_tol": repr(self.newton.abs_tol),
            "max_iters": str(self.newton.max_iters),
            "load_steps": str(self.newton.load_steps),
            "step_bisection_limit": str(self.newton.step_bisection_limit),
            "damping": repr(self.newton.damping),
        }
        material = {}
        if self.law is not None:
            material["law"] = self.law
        if self.mu is not None:
            material["mu"] = repr(self.mu)
        if self.lam is not None:
            material["lambda"] = repr(self.lam)
        mapping = {"run": run, "method": method, "newton": newton, "material": material}
        if self.monitor_url is not None:
            mapping["monitor"] = {"url": self.monitor_url}
        return mapping

    @classmethod
    def from_mapping(cls, data: Mapping[str, Mapping[str, str]]) -> RunConfig:
        """Создает конфигурацию из секций INI.

        Raises:
            ConfigError: Если значение некорректно или ключ неизвестен
        """
        known = {
            "run": {"case", "levels", "mesh", "out", "vtk", "log_level", "log_file"},
            "method": {"method", "order", "grad_space", "beta0", "quadrature_order"},
            "newton": {"rel_tol", "abs_tol", "max_iters", "load_steps", "step_bisection_limit", "damping"},
            "material": {"law", "mu", "lambda"},
            "monitor": {"url"},
        }
        for section, values in data.items():
            if section not in known:
                raise ConfigError(f"Unknown config section [{section}]")
            unknown = set(values) - known[section]
            if unknown:
                raise ConfigError(f"Unknown keys in [{section}]: {sorted(unknown)}")

        run = data.get("run", {})
        method = data.get("method", {})
        newton = data.get("newton", {})
        material = data.get("material", {})
        monitor = data.get("monitor", {})
        try:
            method_config = MethodConfig.create(
                method.get("method", "shho"),
                k=int(method.get("order", 1)),
                grad_space=method.get("grad_space"),
                beta0=float(method["beta0"]) if "beta0" in method else None,
                quadrature_order=int(method["quadrature_order"]) if "quadrature_order" in method else None,
            )
            newton_config = NewtonConfig(
                rel_tol=float(newton.get("rel_tol", 1e-8)),
                abs_tol=float(newton.get("abs_tol", 1e-10)),
                max_iters=int(newton.get("max_iters", 20)),
                load_steps=int(newton.get("load_steps", 1)),
                step_bisection_limit=int(newton.get("step_bisection_limit", 8)),
                damping=float(newton.get("damping", 1.0)),
            )
            levels = tuple(int(x) for x in run.get("levels", "2, 4, 8").split(",") if x.strip())
            return cls(
                case=run.get("case", "manufactured"),
                method=method_config,
                newton=newton_config,
                levels=levels,
                mesh=Path(run["mesh"]) if run.get("mesh") else None,
                out_dir=Path(run.get("out", "results")),
                write_vtk=_parse_bool(run.get("vtk", "false")),
                law=material.get("law"),
                mu=float(material["mu"]) if "mu" in material else None,
                lam=float(material["lambda"]) if "lambda" in material else None,
                log_level=run.get("log_level", "info"),
                log_file=Path(run["log_file"]) if run.get("log_file") else None,
                monitor_url=monitor.get("url") or None,
            )
        except ValueError as e:
            raise ConfigError(f"Invalid configuration value: {e}") from e

    @classmethod
    def from_file(cls, path: str | Path) -> RunConfig:
        """Читает конфигурацию из INI-файла.

        Raises:
            ConfigError: Если файл не найден или некорректен
        """
        parser = configparser.ConfigParser()
        try:
            with open(path) as handle:
                parser.read_file(handle)
        except OSError as e:
            raise ConfigError(f"Cannot read config file '{path}': {e}") from e
        except configparser.Error as e:
            raise ConfigError(f"Malformed config file '{path}': {e}") from e
        return cls.from_mapping({s: dict(parser[s]) for s in parser.sections()})

    def to_file(self, path: str | Path) -> None:
        """Записывает конфигурацию в INI-файл."""
        parser = configparser.ConfigParser()
        for section, values in self.as_mapping().items():
            parser[section] = values
        with open(path, "w") as handle:
            parser.write(handle)


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")
