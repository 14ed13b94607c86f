"""
Манифест запуска (manifest.json) и журнал ошибок (errors.json).

Манифест пишется атомарно (временный файл + os.replace) в начале
запуска и финализируется в конце.
"""

import json
import logging
import os
import shutil
import subprocess
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional

from .config import ExperimentConfig, RunDirectoryExistsError, serialize


logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ERRORS_NAME = "errors.json"
LAB_VERSION = "0.1.0"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def version_string() -> str:
    """Версия в стиле git describe; без git - версия пакета."""
    repo_dir = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    try:
        result = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=repo_dir, capture_output=True, text=True, timeout=5,
        )
        if result.returncode == 0 and result.stdout.strip():
            return result.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"v{LAB_VERSION}"


def write_json_atomic(path: str, payload: Any) -> None:
    tmp_path = path + ".tmp"
    with open(tmp_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, ensure_ascii=False, indent=2)
        f.write("\n")
    os.replace(tmp_path, path)


@dataclass
class ErrorRecord:
    """Машиночитаемая запись об ошибке одного seed (или всего запуска, seed=None)."""
    seed: Optional[int]
    stage: str
    error_type: str
    message: str
    iteration: Optional[int] = None

    @classmethod
    def from_exception(cls, seed: Optional[int], stage: str, error: BaseException) -> "ErrorRecord":
        return cls(seed, stage, type(error).__name__, str(error), getattr(error, "iteration", None))


@dataclass
class RunManifest:
    """
    Состояние запуска.

    status: running -> completed | partial | failed.
    outputs: seed -> {имя выхода: путь относительно run_dir}.
    """
    run_dir: str
    config: Dict[str, Any]
    version: str
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    outputs: Dict[str, Dict[str, str]] = field(default_factory=dict)
    aggregates: Dict[str, str] = field(default_factory=dict)
    failed_seeds: List[int] = field(default_factory=list)

    @property
    def path(self) -> str:
        return os.path.join(self.run_dir, MANIFEST_NAME)

    @classmethod
    def start(cls, run_dir: str, config: ExperimentConfig, overwrite: bool = False) -> "RunManifest":
        """
        Подготовка директории и запись начального манифеста.

        Raises:
            RunDirectoryExistsError: Если run_dir не пуст и overwrite=False
        """
        if os.path.isdir(run_dir) and os.listdir(run_dir):
            if not overwrite:
                raise RunDirectoryExistsError(
                    f"{run_dir} уже содержит результаты запуска; используйте --overwrite"
                )
            logger.info("Перезапись предыдущего запуска в %s", run_dir)
            shutil.rmtree(run_dir)
        os.makedirs(run_dir, exist_ok=True)

        manifest = cls(run_dir=run_dir, config=serialize(config), version=version_string(),
                       started_at=_now())
        manifest.save()
        return manifest

    def record_outputs(self, seed: int, outputs: Dict[str, str]) -> None:
        self.outputs[str(seed)] = {name: os.path.relpath(p, self.run_dir) for name, p in outputs.items()}

    def finalize(self, status: str, failed_seeds: List[int], aggregates: Dict[str, str]) -> None:
        self.status = status
        self.failed_seeds = sorted(failed_seeds)
        self.aggregates = {name: os.path.relpath(p, self.run_dir) for name, p in aggregates.items()}
        self.finished_at = _now()
        self.save()

    def save(self) -> None:
        payload = asdict(self)
        payload.pop("run_dir")
        write_json_atomic(self.path, payload)


def write_errors(run_dir: str, records: List[ErrorRecord]) -> Optional[str]:
    """errors.json со списком записей; None, если ошибок нет."""
    if not records:
        return None
    path = os.path.join(run_dir, ERRORS_NAME)
    os.makedirs(run_dir, exist_ok=True)
    write_json_atomic(path, {"errors": [asdict(r) for r in records]})
    return path


def load_manifest(run_dir: str) -> Dict[str, Any]:
    with open(os.path.join(run_dir, MANIFEST_NAME), "r", encoding="utf-8") as f:
        return json.load(f)
