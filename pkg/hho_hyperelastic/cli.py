"""Интерфейс командной строки hho-hyperelastic.

Подкоманды:
    run          Решение случая на уровнях сетки, запись CSV/VTK, таблица ошибок
    convergence  То же с ожидаемыми порядками сходимости
    verify       Проверки свойств операторов, материала и решателя
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from hho_hyperelastic.adapters import CsvStepMonitor
from hho_hyperelastic.cases import CaseRegistry
from hho_hyperelastic.config import GRAD_SPACE_NAMES, Method, MethodConfig, RunConfig, grad_space_name
from hho_hyperelastic.core import ConvergenceStudy, StudyResult, build_case, expected_orders
from hho_hyperelastic.exceptions import ConfigError, HHOError
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.logging import get_logger, setup_logging
from hho_hyperelastic.verification import VerificationReport, run_verification

logger = get_logger("cli")


def parse_levels(value: str) -> tuple[int, ...]:
    """Разбирает --levels: "3" означает уровни 2, 4, 8; "2,4,8" - явный список."""
    try:
        if "," in value:
            levels = tuple(int(x) for x in value.split(",") if x.strip())
        else:
            levels = tuple(2 ** (i + 1) for i in range(int(value)))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid levels: {value!r}") from None
    if not levels or min(levels) < 1:
        raise argparse.ArgumentTypeError("levels must be positive")
    return levels


def _add_run_arguments(parser: argparse.ArgumentParser, registry: CaseRegistry) -> None:
    parser.add_argument("--config", type=Path, help="INI configuration file")
    parser.add_argument("--case", choices=registry.names, help="test case")
    parser.add_argument("--method", choices=[m.value for m in Method], help="HHO variant")
    parser.add_argument("-k", "--order", type=int, help="polynomial degree k >= 1")
    parser.add_argument("--grad-space", choices=sorted(GRAD_SPACE_NAMES), help="gradient reconstruction space")
    parser.add_argument("--beta0", type=float, help="sHHO stabilization scale (beta = beta0 mu)")
    parser.add_argument("--levels", type=parse_levels, help="number of levels or comma-separated list")
    parser.add_argument("--mesh", type=Path, help="Gmsh mesh file (replaces the generated meshes)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--mu", type=float, help="shear modulus")
    parser.add_argument("--lambda", dest="lam", type=float, help="Lame parameter lambda")
    parser.add_argument("--law", choices=["neohookean", "cavitation", "linear"], help="constitutive law")
    parser.add_argument("--load-steps", type=int, help="number of uniform load steps")
    parser.add_argument("--vtk", action="store_true", help="write VTK fields per level")
    parser.add_argument("--monitor-url", help="SQLAlchemy URL for the load-step log (default: CSV in --out)")
    parser.add_argument("--log-file", type=Path, help="also write the run log to this file")


def build_parser(registry: CaseRegistry | None = None) -> argparse.ArgumentParser:
    registry = registry or CaseRegistry.default()
    parser = argparse.ArgumentParser(
        prog="hho-hyperelastic",
        description="Hybrid High-Order solver for finite-deformation hyperelasticity.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run_arguments(sub.add_parser("run", help="solve a case on a sequence of meshes"), registry)
    _add_run_arguments(
        sub.add_parser("convergence", help="convergence study with expected orders"), registry
    )
    verify = sub.add_parser("verify", help="run the operator and solver property suites")
    verify.add_argument("-k", "--order", type=int, default=1, help="polynomial degree k >= 1")
    verify.add_argument("--cells", type=int, default=20, help="random cells for local checks")
    verify.add_argument("--level", type=int, default=2, help="coarse cube level for refinement checks")
    verify.add_argument("--seed", type=int, default=0, help="random seed")
    return parser


def resolve_config(args: argparse.Namespace, registry: CaseRegistry) -> RunConfig:
    """Собирает RunConfig: файл конфигурации, затем флаги командной строки.

    Без файла beta0 стабилизации и число шагов нагрузки берутся из
    рекомендаций случая.

    Raises:
        ConfigError: Если комбинация параметров некорректна
    """
    from_file = args.config is not None
    config = RunConfig.from_file(args.config) if from_file else RunConfig()
    case_name = args.case or config.case
    if case_name not in registry:
        raise ConfigError(f"Unknown case '{case_name}'. Known: {registry.names}")
    defaults = registry.create(case_name)

    same_method = args.method is None or args.method == config.method.method.value
    method_name = args.method or config.method.method.value
    grad_space = args.grad_space or (grad_space_name(config.method.grad_space) if same_method else None)
    beta0 = args.beta0
    if beta0 is None and from_file and same_method:
        beta0 = config.method.beta0
    if beta0 is None and method_name == Method.SHHO.value:
        beta0 = defaults.beta0
    method = MethodConfig.create(
        method_name,
        k=args.order if args.order is not None else config.method.k,
        grad_space=grad_space,
        beta0=beta0,
        quadrature_order=config.method.quadrature_order,
    )

    load_steps = args.load_steps
    if load_steps is None:
        load_steps = config.newton.load_steps if from_file else defaults.load_steps
    try:
        return replace(
            config,
            case=case_name,
            method=method,
            newton=replace(config.newton, load_steps=load_steps),
            levels=args.levels or config.levels,
            mesh=args.mesh or config.mesh,
            out_dir=args.out or config.out_dir,
            write_vtk=args.vtk or config.write_vtk,
            law=args.law or config.law,
            mu=args.mu if args.mu is not None else config.mu,
            lam=args.lam if args.lam is not None else config.lam,
            monitor_url=args.monitor_url or config.monitor_url,
            log_file=args.log_file or config.log_file,
            log_level="debug" if args.verbose else config.log_level,
        )
    except ValueError as e:
        raise ConfigError(f"Invalid configuration: {e}") from e


def _format_order(value: float | None) -> str:
    return "-" if value is None else f"{value:.2f}"


def format_table(result: StudyResult, with_expected: bool = False) -> str:
    """Таблица сходимости для вывода в консоль."""
    report = result.report
    lines = [f"{result.case} {result.method.label} k={result.method.k} (reference: {report.reference})"]
    if not report.samples:
        for level in result.levels:
            lines.append(
                f"  level {level.level}: load {level.solve.load_factor:.3g}, "
                f"{level.solve.iterations} Newton iterations, min J^h = {level.min_jacobian:.4f}"
            )
        return "\n".join(lines)
    lines.append(f"  {'h':>10} {'err_u':>11} {'ord':>5} {'err_G':>11} {'ord':>5} {'newton':>6}")
    for row in report.rows():
        lines.append(
            f"  {row['h']:10.4e} {row['err_u']:11.4e} {_format_order(row['order_u']):>5} "
            f"{row['err_G']:11.4e} {_format_order(row['order_G']):>5} {row['newton_iters']:6d}"
        )
    if with_expected:
        expected_u, expected_G = expected_orders(result.method)
        lines.append(f"  expected orders: displacement {expected_u}, gradient {expected_G}")
    return "\n".join(lines)


def format_verification(report: VerificationReport) -> str:
    lines = []
    for r in report.results:
        status = "ok" if r.passed else "FAILED"
        detail = f"  ({r.detail})" if r.detail else ""
        lines.append(f"  {r.name:<28} {r.value:11.3e}  tol {r.tolerance:8.1e}  {status}{detail}")
    lines.append("all properties hold" if report.passed else f"{len(report.failed)} propert(ies) failed")
    return "\n".join(lines)


def make_monitor(config: RunConfig, case_name: str) -> StepMonitor:
    """Создает монитор шагов нагружения по конфигурации.

    С `monitor_url` шаги пишутся в SQL базу (нужен SQLAlchemy), иначе в
    CSV-файл `{case}_{label}_k{k}_steps.csv` каталога результатов.

    Raises:
        ConfigError: Если SQL монитор недоступен
    """
    if config.monitor_url is None:
        return CsvStepMonitor(config.out_dir / f"{case_name}_{config.method.label}_k{config.method.k}_steps.csv")
    try:
        from hho_hyperelastic.adapters.sql import SQLStepMonitor
    except ImportError as e:
        raise ConfigError(str(e)) from e
    logger.info(f"recording load steps to {config.monitor_url}")
    return SQLStepMonitor(config.monitor_url)


def _run_study(args: argparse.Namespace, registry: CaseRegistry, with_expected: bool) -> int:
    config = resolve_config(args, registry)
    case = build_case(config, registry)
    setup_logging(config.log_level, config.log_file)
    monitor = make_monitor(config, case.name)
    study = ConvergenceStudy(
        case,
        config.method,
        config.newton,
        out_dir=config.out_dir,
        write_vtk=config.write_vtk,
        monitor=monitor,
    )
    result = study.run(config.levels, config.mesh)
    print(format_table(result, with_expected))
    for path in result.files:
        logger.info(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    """Точка входа; возвращает код завершения (1 при ошибке расчета)."""
    registry = CaseRegistry.default()
    args = build_parser(registry).parse_args(argv)
    setup_logging(logging.DEBUG if args.verbose else logging.INFO)
    try:
        if args.command == "verify":
            report = run_verification(k=args.order, cells=args.cells, level=args.level, seed=args.seed)
            print(format_verification(report))
            return 0 if report.passed else 1
        return _run_study(args, registry, with_expected=args.command == "convergence")
    except HHOError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
