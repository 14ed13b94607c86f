"""
Оркестрация экспериментов.

Компоненты:
    - config: YAML-конфигурация, проверка и сериализация
    - manifest: manifest.json и errors.json
    - runner: задания по seed, пул процессов, агрегаты
"""

from .config import (
    KINDS,
    DatasetSection,
    BenchSection,
    SweepSection,
    TheorySection,
    ExperimentConfig,
    derive_seed,
    parse_seeds,
    parse_config,
    parse_config_text,
    check_references,
    serialize,
    dump_config,
    ExperimentError,
    ConfigError,
    RunDirectoryExistsError,
)
from .manifest import ErrorRecord, RunManifest, load_manifest, version_string
from .runner import (
    EXIT_OK,
    EXIT_CONFIG,
    EXIT_RUNTIME,
    EXIT_PARTIAL,
    Job,
    RunReport,
    build_task,
    build_landscape,
    training_data,
    plan_jobs,
    run,
    sweep,
    scatter,
)

__all__ = [
    "KINDS", "DatasetSection", "BenchSection", "SweepSection", "TheorySection",
    "ExperimentConfig", "derive_seed", "parse_seeds", "parse_config", "parse_config_text",
    "check_references", "serialize", "dump_config",
    "ErrorRecord", "RunManifest", "load_manifest", "version_string",
    "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME", "EXIT_PARTIAL",
    "Job", "RunReport", "build_task", "build_landscape", "training_data", "plan_jobs",
    "run", "sweep", "scatter",
    "ExperimentError", "ConfigError", "RunDirectoryExistsError",
]
