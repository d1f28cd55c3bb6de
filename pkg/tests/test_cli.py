"""Тесты для интерфейса командной строки."""

from __future__ import annotations

import argparse
from pathlib import Path

import pytest

from hho_hyperelastic.basis import GradSpace
from hho_hyperelastic.cases import CaseRegistry
from hho_hyperelastic.adapters import CsvStepMonitor
from hho_hyperelastic.cli import build_parser, format_table, main, make_monitor, parse_levels, resolve_config
from hho_hyperelastic.config import Method, MethodConfig, NewtonConfig, RunConfig
from hho_hyperelastic.core import StudyResult
from hho_hyperelastic.exceptions import ConfigError
from hho_hyperelastic.postproc import ErrorReport


def resolve(*argv: str) -> RunConfig:
    registry = CaseRegistry.default()
    return resolve_config(build_parser(registry).parse_args(["run", *argv]), registry)


class TestParseLevels:
    """Тесты для разбора --levels."""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [("3", (2, 4, 8)), ("1", (2,)), ("2,4,8", (2, 4, 8)), ("1,3", (1, 3)), ("5,", (5,))],
    )
    def test_valid(self, value: str, expected: tuple[int, ...]) -> None:
        """Тест: число уровней и явный список."""
        assert parse_levels(value) == expected

    @pytest.mark.parametrize("value", ["abc", "2,x", "0", "0,2", ","])
    def test_invalid(self, value: str) -> None:
        """Тест: некорректные значения вызывают ArgumentTypeError."""
        with pytest.raises(argparse.ArgumentTypeError):
            parse_levels(value)


class TestResolveConfig:
    """Тесты для сборки конфигурации из файла и флагов."""

    def test_case_defaults(self) -> None:
        """Тест: без файла beta0 и число шагов берутся из случая."""
        config = resolve("--case", "annulus")
        assert config.case == "annulus"
        assert config.newton.load_steps == 30
        assert config.method.beta0 == 100.0
        assert config.levels == (2, 4, 8)

    def test_uhho_default_space(self) -> None:
        """Тест: uHHO по умолчанию использует PKP1."""
        config = resolve("--method", "uhho", "-k", "2")
        assert config.method.method is Method.UHHO
        assert config.method.grad_space is GradSpace.PKP1
        assert config.method.k == 2

    def test_flags(self, tmp_path: Path) -> None:
        """Тест: флаги задают параметры расчета."""
        config = resolve(
            "--case", "block", "--levels", "1,2", "--out", str(tmp_path), "--vtk",
            "--mu", "2", "--lambda", "10", "--law", "cavitation", "--load-steps", "4",
        )
        assert config.levels == (1, 2)
        assert config.out_dir == tmp_path
        assert config.write_vtk
        assert (config.mu, config.lam, config.law) == (2.0, 10.0, "cavitation")
        assert config.newton.load_steps == 4

    def test_file_then_flags(self, tmp_path: Path) -> None:
        """Тест: флаги переопределяют файл, файл переопределяет умолчания случая."""
        path = tmp_path / "run.ini"
        RunConfig(
            case="annulus",
            method=MethodConfig.shho(1, beta0=5.0),
            newton=NewtonConfig(load_steps=3),
            levels=(2, 4),
        ).to_file(path)

        config = resolve("--config", str(path))
        assert config.case == "annulus"
        assert config.newton.load_steps == 3
        assert config.method.beta0 == 5.0
        assert config.levels == (2, 4)

        config = resolve("--config", str(path), "--load-steps", "7", "--beta0", "20")
        assert config.newton.load_steps == 7
        assert config.method.beta0 == 20.0

    def test_monitor_and_log_flags(self, tmp_path: Path) -> None:
        """Тест: флаги журнала шагов и журнала расчета попадают в конфигурацию."""
        config = resolve("--monitor-url", "sqlite:///steps.db", "--log-file", str(tmp_path / "run.log"))
        assert config.monitor_url == "sqlite:///steps.db"
        assert config.log_file == tmp_path / "run.log"
        assert config.log_level == "info"
        assert resolve("--case", "block").monitor_url is None

    def test_verbose_overrides_log_level(self) -> None:
        """Тест: -v включает уровень debug."""
        registry = CaseRegistry.default()
        args = build_parser(registry).parse_args(["-v", "run"])
        assert resolve_config(args, registry).log_level == "debug"

    def test_invalid_combination(self) -> None:
        """Тест: недопустимая комбинация параметров вызывает ConfigError."""
        with pytest.raises(ConfigError):
            resolve("--method", "uhho", "--grad-space", "pk")

    def test_unknown_case_rejected_by_parser(self) -> None:
        """Тест: неизвестный случай отклоняется argparse."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--case", "torus"])


class TestMakeMonitor:
    """Тесты для выбора монитора шагов нагружения."""

    def test_csv_by_default(self, tmp_path: Path) -> None:
        """Тест: без строки подключения шаги пишутся в CSV каталога результатов."""
        monitor = make_monitor(RunConfig(out_dir=tmp_path), "block")
        assert isinstance(monitor, CsvStepMonitor)
        assert monitor.path == tmp_path / "block_shho_k1_steps.csv"

    def test_sql_url(self, tmp_path: Path) -> None:
        """Тест: строка подключения выбирает SQL монитор."""
        pytest.importorskip("sqlalchemy")
        from hho_hyperelastic.adapters.sql import SQLStepMonitor

        monitor = make_monitor(RunConfig(monitor_url=f"sqlite:///{tmp_path / 'steps.db'}"), "block")
        assert isinstance(monitor, SQLStepMonitor)


class TestFormatTable:
    """Тесты для таблицы сходимости."""

    def test_empty_report(self) -> None:
        """Тест: таблица без ошибок содержит только заголовок."""
        result = StudyResult(case="block", method=MethodConfig.shho(1), report=ErrorReport(reference="fine-mesh"))
        assert format_table(result) == "block shho k=1 (reference: fine-mesh)"


class TestMain:
    """Тесты для точки входа."""

    def test_run(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Тест: run решает случай, печатает таблицу и пишет CSV."""
        code = main(["run", "--case", "linear_manufactured", "--levels", "1,2", "--out", str(tmp_path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "linear_manufactured shho k=1 (reference: exact)" in out
        assert (tmp_path / "linear_manufactured_shho_k1_2.csv").exists()
        assert (tmp_path / "linear_manufactured_shho_k1_steps.csv").exists()

    def test_run_with_sql_monitor(self, tmp_path: Path) -> None:
        """Тест: с --monitor-url шаги нагружения записываются в SQL базу."""
        pytest.importorskip("sqlalchemy")
        from hho_hyperelastic.adapters.sql import SQLStepMonitor

        url = f"sqlite:///{tmp_path / 'steps.db'}"
        argv = ["run", "--case", "linear_manufactured", "--levels", "1", "--out", str(tmp_path), "--monitor-url", url]
        assert main([*argv, "--log-file", str(tmp_path / "run.log")]) == 0
        assert len(SQLStepMonitor(url).get_steps("linear_manufactured_shho_k1_1")) >= 1
        assert not (tmp_path / "linear_manufactured_shho_k1_steps.csv").exists()
        assert "linear_manufactured_shho_k1_1" in (tmp_path / "run.log").read_text(encoding="utf-8")

    def test_convergence_prints_expected_orders(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Тест: convergence печатает ожидаемые порядки."""
        code = main(
            ["convergence", "--case", "linear_manufactured", "--method", "uhho", "--levels", "1", "--out", str(tmp_path)]
        )
        assert code == 0
        assert "expected orders: displacement 2, gradient 1" in capsys.readouterr().out

    def test_error_exit_code(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Тест: ошибка конфигурации дает код 1 и сообщение в stderr."""
        code = main(["run", "--case", "block", "--mu", "-1", "--out", str(tmp_path)])
        assert code == 1
        assert "error: mu must be positive" in capsys.readouterr().err

    @pytest.mark.slow
    def test_verify(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Тест: verify печатает результаты проверок."""
        main(["verify", "--cells", "2", "--level", "1"])
        out = capsys.readouterr().out
        assert "commuting (RTN)" in out
        assert "static condensation" in out
