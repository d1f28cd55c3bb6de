"""CSV адаптер для монитора шагов нагружения."""

from __future__ import annotations

import csv
from datetime import datetime
from pathlib import Path

from hho_hyperelastic.exceptions import MonitorError
from hho_hyperelastic.interfaces import StepMonitor
from hho_hyperelastic.progress import LoadStepProgress, StepStatus

FIELDNAMES = [
    "run_name",
    "step",
    "load_factor",
    "status",
    "iterations",
    "final_residual",
    "residual_history",
    "started_at",
    "completed_at",
    "error_message",
]


def _format_time(value: datetime | None) -> str:
    return value.isoformat() if value else ""


def _parse_time(value: str) -> datetime | None:
    return datetime.fromisoformat(value) if value else None


class CsvStepMonitor(StepMonitor):
    """Монитор шагов нагружения, дописывающий строки в CSV-файл.

    Одна строка на каждую попытку шага; файл можно читать во время
    расчета. История невязок хранится через ";".

    Attributes:
        path: Путь к CSV-файлу журнала
    """

    def __init__(self, path: str | Path) -> None:
        """Инициализирует монитор.

        Args:
            path: Путь к файлу (создается при первой записи)
        """
        self.path = Path(path)

    def record_step(self, run_name: str, progress: LoadStepProgress) -> None:
        """Дописывает строку о шаге нагружения.

        Args:
            run_name: Имя расчета
            progress: Информация о шаге

        Raises:
            MonitorError: Если имя расчета пустое или файл недоступен
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        row = {
            "run_name": run_name,
            "step": progress.step,
            "load_factor": repr(progress.load_factor),
            "status": progress.status.value,
            "iterations": progress.iterations,
            "final_residual": "" if progress.final_residual is None else repr(progress.final_residual),
            "residual_history": ";".join(repr(r) for r in progress.residual_history),
            "started_at": _format_time(progress.started_at),
            "completed_at": _format_time(progress.completed_at),
            "error_message": progress.error_message or "",
        }
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            write_header = not self.path.exists() or self.path.stat().st_size == 0
            with self.path.open("a", newline="") as handle:
                writer = csv.DictWriter(handle, fieldnames=FIELDNAMES)
                if write_header:
                    writer.writeheader()
                writer.writerow(row)
        except OSError as e:
            raise MonitorError(f"Failed to record step: {e}") from e

    def _read_rows(self) -> list[dict[str, str]]:
        if not self.path.exists():
            return []
        try:
            with self.path.open(newline="") as handle:
                return list(csv.DictReader(handle))
        except OSError as e:
            raise MonitorError(f"Failed to read steps: {e}") from e

    def get_steps(self, run_name: str) -> list[LoadStepProgress]:
        """Читает шаги расчета из файла.

        Args:
            run_name: Имя расчета

        Returns:
            Список шагов в порядке записи

        Raises:
            MonitorError: Если имя расчета пустое или файл поврежден
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        steps = []
        try:
            for row in self._read_rows():
                if row["run_name"] != run_name:
                    continue
                history = row["residual_history"]
                steps.append(
                    LoadStepProgress(
                        step=int(row["step"]),
                        load_factor=float(row["load_factor"]),
                        status=StepStatus(row["status"]),
                        residual_history=[float(r) for r in history.split(";")] if history else [],
                        iterations=int(row["iterations"]),
                        started_at=_parse_time(row["started_at"]),
                        completed_at=_parse_time(row["completed_at"]),
                        error_message=row["error_message"] or None,
                    )
                )
        except (KeyError, ValueError) as e:
            raise MonitorError(f"Malformed step log '{self.path}': {e}") from e
        return steps

    def clear(self, run_name: str) -> None:
        """Удаляет строки расчета, сохраняя строки остальных расчетов.

        Args:
            run_name: Имя расчета

        Raises:
            MonitorError: Если имя расчета пустое или файл недоступен
        """
        if not run_name:
            raise MonitorError("Run name cannot be empty")
        rows = [row for row in self._read_rows() if row.get("run_name") != run_name]
        try:
            with self.path.open("w", newline="") as handle:
                writer = csv.DictWriter(handle, fieldnames=FIELDNAMES)
                writer.writeheader()
                writer.writerows(rows)
        except OSError as e:
            raise MonitorError(f"Failed to clear steps: {e}") from e
