"""Запуск через python -m hho_hyperelastic."""

from hho_hyperelastic.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
