"""
Консольная точка входа AGGAN Lab.

Подкоманды:
    train     - обучение генератора по seed
    bench     - стенд дисбаланса (методы x IR x seeds)
    theory    - симулятор цепи над конечным ландшафтом
    sweep     - сетка (t_init, alpha)
    scatter   - разметка файла точек колонкой mode
    validate  - проверка конфигурации и вывод со значениями по умолчанию

Коды выхода: 0 - успех, 2 - ошибка конфигурации, 3 - ошибка выполнения,
4 - часть seed завершилась ошибкой.
"""

import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

import pandas as pd
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from experiment import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_RUNTIME,
    KINDS,
    ConfigError,
    ErrorRecord,
    ExperimentConfig,
    RunDirectoryExistsError,
    RunReport,
    dump_config,
    parse_config,
    parse_seeds,
    run,
    scatter,
)
from experiment.manifest import write_errors


logger = logging.getLogger("aggan")
console = Console()


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aggan",
        description="Эволюционное обучение GAN с отжигом: тренер, стенд дисбаланса, симулятор цепи",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Подробный журнал (DEBUG)")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in KINDS:
        p = sub.add_parser(kind, help=f"Эксперимент вида {kind}")
        p.add_argument("--config", required=True, help="YAML-файл конфигурации")
        p.add_argument("--out", help="Директория запуска (вместо out из конфигурации)")
        p.add_argument("--seeds", help="Число повторов или список через запятую")
        p.add_argument("--overwrite", action="store_true", help="Очистить непустой run_dir перед запуском")
        p.add_argument("--jobs", type=int, default=1, help="Число рабочих процессов")

    p = sub.add_parser("scatter", help="Добавить колонку mode к файлу точек")
    p.add_argument("--config", required=True, help="Конфигурация с синтетическим набором")
    p.add_argument("--samples", required=True, help="CSV с колонками x0..x{d-1}")
    p.add_argument("--out", help="Выходной CSV (по умолчанию <samples>_modes.csv)")
    p.add_argument("--seeds", help="Seed набора данных (используется первый)")

    p = sub.add_parser("validate", help="Проверить конфигурацию")
    p.add_argument("--config", required=True, help="YAML-файл конфигурации")
    p.add_argument("--seeds", help="Число повторов или список через запятую")
    return parser


def load_config(args: argparse.Namespace, kind: Optional[str]) -> ExperimentConfig:
    """
    Загрузка конфигурации с применением флагов командной строки.

    Raises:
        ConfigError: Ошибка в файле или во флагах
    """
    config = parse_config(args.config, kind)
    overrides = {}
    if getattr(args, "seeds", None):
        try:
            overrides["seeds"] = parse_seeds(args.seeds)
        except ValueError as e:
            raise ConfigError(str(e), "--seeds")
    if kind in KINDS and getattr(args, "out", None):
        overrides["out"] = args.out
    if not overrides:
        return config
    try:
        return dataclasses.replace(config, **overrides)
    except ValueError as e:
        raise ConfigError(str(e), "--seeds")


def print_summary(report: RunReport) -> None:
    """Таблица средних (или строк, если средних нет)."""
    frame = report.means if report.means is not None else report.rows
    if frame is None or frame.empty:
        console.print(f"[yellow]Нет результатов; подробности в {report.errors_path}[/yellow]")
        return
    table = Table(title=f"Итоги: {report.run_dir}")
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for row in frame.itertuples(index=False):
        table.add_row(*(_cell(v) for v in row))
    console.print(table)
    if report.failed_seeds:
        console.print(f"[red]Seed с ошибками: {report.failed_seeds}; см. {report.errors_path}[/red]")


def _cell(value: object) -> str:
    if value is None or (isinstance(value, float) and pd.isna(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def run_command(args: argparse.Namespace) -> int:
    config = load_config(args, args.command)
    if args.jobs < 1:
        raise ConfigError("должно быть >= 1", "--jobs")
    run_dir = config.out
    try:
        report = run(config, run_dir, overwrite=args.overwrite, jobs=args.jobs,
                     base_dir=os.path.dirname(os.path.abspath(args.config)))
    except (ConfigError, RunDirectoryExistsError):
        raise
    except Exception as e:
        logger.exception("Запуск прерван: %s", e)
        if os.path.isdir(run_dir):
            write_errors(run_dir, [ErrorRecord.from_exception(None, "run", e)])
        return EXIT_RUNTIME
    print_summary(report)
    return report.exit_code


def scatter_command(args: argparse.Namespace) -> int:
    config = load_config(args, None)
    out_path = args.out or os.path.splitext(args.samples)[0] + "_modes.csv"
    if not os.path.exists(args.samples):
        raise ConfigError(f"файл точек не найден: {args.samples}", "--samples")
    frame = scatter(config, args.samples, out_path,
                    base_dir=os.path.dirname(os.path.abspath(args.config)))
    console.print(f"Записано {len(frame)} точек в {out_path}")
    return EXIT_OK


def validate_command(args: argparse.Namespace) -> int:
    config = load_config(args, None)
    print(dump_config(config), end="")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """Разбор аргументов, выполнение подкоманды и код выхода."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)

    try:
        if args.command == "validate":
            return validate_command(args)
        if args.command == "scatter":
            return scatter_command(args)
        return run_command(args)
    except ConfigError as e:
        console.print(f"[red]Ошибка конфигурации:[/red] {escape(str(e))}")
        return EXIT_CONFIG
    except RunDirectoryExistsError as e:
        console.print(f"[red]Ошибка:[/red] {escape(str(e))}")
        return EXIT_CONFIG
    except Exception as e:
        logger.exception("Критическая ошибка: %s", e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
