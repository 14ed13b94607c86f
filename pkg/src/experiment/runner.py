"""
Запуск экспериментов: train, bench, theory, sweep.

Каждый вид разворачивается в список независимых заданий (seed, ячейка).
Задания выполняются последовательно или в пуле процессов; результаты
сливаются в порядке заданий. Ошибка одного задания записывается в
errors.json и не останавливает остальные.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from bench import (
    METRIC_COLUMNS,
    BenchTask,
    DatasetError,
    MixtureSpec,
    aggregate_means,
    assign_modes,
    gaussian_grid,
    gaussian_ring,
    interleaved_rings,
    load_dataset_csv,
    load_digits_csv,
    mode_coverage,
    run_cell,
    write_frame_csv,
)
from bench.coverage import HQ_SIGMAS
from theorysim import (
    Landscape,
    check_monotone,
    compare_greedy,
    hit_curve,
    line,
    load_landscape,
    ring,
    rugged,
    save_landscape,
    star,
    trap,
    run_chain,
    write_chain_csv,
    write_hitprob_csv,
)
from trainer import TrainResult, convergence_iteration, train, write_points_csv
from .config import ConfigError, ExperimentConfig, derive_seed, resolve_path
from .manifest import ErrorRecord, RunManifest, write_errors


logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_PARTIAL = 4

TRAIN_COLUMNS = ["seed", "iterations", "f_elite", "convergence_epoch", "accept_rate",
                 "modes", "hq_ratio", "sym_kl"]
SWEEP_COLUMNS = ["t_init", "alpha", "seed", "accuracy", "rec_min", "f1_min", "modes",
                 "hq_ratio", "f_elite", "convergence_epoch"]
THEORY_COLUMNS = ["seed", "landscape", "states", "monotone", "first_violation",
                  "hit_fraction", "ci_low", "ci_high", "greedy_fraction", "sign_p"]


@dataclass(frozen=True)
class Job:
    """Одно задание: seed и параметры ячейки (метод/IR или T/alpha)."""
    kind: str
    seed: int
    cell: Tuple[Any, ...] = ()


@dataclass
class JobOutcome:
    job: Job
    rows: List[Dict[str, Any]] = field(default_factory=list)
    outputs: Dict[str, str] = field(default_factory=dict)
    error: Optional[ErrorRecord] = None


@dataclass
class RunReport:
    """Итог запуска: код выхода, директория, таблицы строк и средних."""
    exit_code: int
    run_dir: str
    rows: Optional[pd.DataFrame] = None
    means: Optional[pd.DataFrame] = None
    failed_seeds: List[int] = field(default_factory=list)
    errors_path: Optional[str] = None


# --- Данные ---

def build_task(config: ExperimentConfig, seed: int, base_dir: str = ".") -> BenchTask:
    """
    Размеченная задача стенда для seed.

    Raises:
        ConfigError: Если источник данных не размечен (ring/grid)
    """
    ds = config.dataset
    data_seed = derive_seed(config.seed, seed, "dataset")
    if ds.kind == "rings":
        dataset, mixtures = interleaved_rings(ds.n_classes, ds.k, ds.radius, ds.sigma, ds.n, data_seed)
        name = "rings"
    elif ds.kind in ("csv", "digits"):
        path = resolve_path(ds.path, base_dir)
        dataset = load_digits_csv(path) if ds.kind == "digits" else load_dataset_csv(path)
        name, mixtures = ds.kind, {}
    else:
        raise ConfigError(f"dataset.kind={ds.kind} не содержит классов; стенду нужен rings, csv или digits",
                          "dataset.kind")
    classes = dataset.classes if config.bench.classes == "all" else ()
    return BenchTask(name, dataset, ds.majority, ds.minority, mixtures, classes)


def training_data(config: ExperimentConfig, seed: int,
                  base_dir: str = ".") -> Tuple[np.ndarray, Optional[MixtureSpec]]:
    """Строки для обучения генератора и истинная смесь (если известна)."""
    ds = config.dataset
    data_seed = derive_seed(config.seed, seed, "dataset")
    if ds.kind == "ring":
        dataset, spec = gaussian_ring(ds.k, ds.radius, ds.sigma, ds.n, data_seed)
        return dataset.features, spec
    if ds.kind == "grid":
        dataset, spec = gaussian_grid(ds.side, ds.spacing, ds.sigma, ds.n, data_seed)
        return dataset.features, spec
    task = build_task(config, seed, base_dir)
    return task.dataset.of_class(task.minority), task.mixtures.get(task.minority)


def build_landscape(config: ExperimentConfig, seed: int, base_dir: str = ".") -> Landscape:
    th = config.theory
    land_seed = th.landscape_seed if th.landscape_seed is not None else derive_seed(config.seed, seed, "landscape")
    rng = np.random.default_rng(land_seed)
    if th.landscape == "file":
        return load_landscape(resolve_path(th.path, base_dir))
    if th.landscape == "line":
        return line(th.n_states, rng=rng)
    if th.landscape == "ring":
        return ring(th.n_states, rng=rng)
    if th.landscape == "star":
        return star(list(rng.random(th.n_states - 1)))
    if th.landscape == "trap":
        return trap(th.n_states, noise=0.05, rng=rng)
    return rugged(th.n_states, th.n_chords, rng)


# --- Задания ---

def _generator_summary(result: TrainResult, mixture: Optional[MixtureSpec], config: ExperimentConfig,
                       seed: int, seed_dir: Optional[str]) -> Dict[str, Any]:
    history = result.history
    row: Dict[str, Any] = {
        "iterations": len(history),
        "f_elite": result.state.elite_fitness.combined if history else None,
        "convergence_epoch": convergence_iteration(history) if history else None,
        "accept_rate": float(np.mean([r.accepted for r in history])) if history else None,
        "modes": None,
        "hq_ratio": None,
        "sym_kl": None,
    }
    if mixture is not None and config.bench.coverage_samples > 0:
        rng = np.random.default_rng(derive_seed(config.seed, seed, "coverage"))
        samples = result.elite_model().sample(config.bench.coverage_samples, rng)
        report = mode_coverage(samples, mixture, config.bench.min_per_mode)
        row.update(modes=report.covered, hq_ratio=report.hq_ratio, sym_kl=report.sym_kl)
        if seed_dir:
            write_points_csv(os.path.join(seed_dir, "samples_elite.csv"), samples)
    return row


def _run_train(config: ExperimentConfig, job: Job, run_dir: str, base_dir: str) -> JobOutcome:
    seed_dir = os.path.join(run_dir, f"seed_{job.seed}")
    data, mixture = training_data(config, job.seed, base_dir)
    cfg = replace(config.trainer, seed=derive_seed(config.seed, job.seed, "trainer"))
    result = train(cfg, data, seed_dir)
    row = {"seed": job.seed, **_generator_summary(result, mixture, config, job.seed, seed_dir)}
    outputs = {name: os.path.join(seed_dir, name)
               for name in ("history.csv", "decisions.csv", "generator_final.params",
                            "generator_elite.params", "discriminator.params")}
    return JobOutcome(job, [row], outputs)


def _run_bench(config: ExperimentConfig, job: Job, run_dir: str, base_dir: str) -> JobOutcome:
    method, ir = job.cell
    task = build_task(config, job.seed, base_dir)
    cell_dir = os.path.join(run_dir, f"seed_{job.seed}", f"{method}_ir{ir:g}")
    result = run_cell(task, method, ir, derive_seed(config.seed, job.seed, "bench"),
                      config.trainer, config.classifier,
                      coverage_samples=config.bench.coverage_samples,
                      min_per_mode=config.bench.min_per_mode,
                      test_fraction=config.bench.test_fraction,
                      run_dir=cell_dir)
    row = result.row(task.minority, task.majority)
    row["seed"] = job.seed
    outputs = {f"{method}_ir{ir:g}": cell_dir} if os.path.isdir(cell_dir) else {}
    return JobOutcome(job, [row], outputs)


def _run_sweep(config: ExperimentConfig, job: Job, run_dir: str, base_dir: str) -> JobOutcome:
    t_init, alpha = job.cell
    cell_dir = os.path.join(run_dir, f"seed_{job.seed}", f"T{t_init:g}_a{alpha:g}")
    trainer_cfg = replace(config.trainer, t_init=t_init, alpha=alpha)
    row: Dict[str, Any] = {"t_init": t_init, "alpha": alpha, "seed": job.seed}

    if config.sweep.ir is not None:
        task = build_task(config, job.seed, base_dir)
        result = run_cell(task, "aggan", config.sweep.ir, derive_seed(config.seed, job.seed, "bench"),
                          trainer_cfg, config.classifier,
                          coverage_samples=config.bench.coverage_samples,
                          min_per_mode=config.bench.min_per_mode,
                          test_fraction=config.bench.test_fraction,
                          run_dir=cell_dir)
        m = result.metrics
        row.update(accuracy=m.accuracy, rec_min=m.recall[task.minority], f1_min=m.f1[task.minority],
                   modes=m.covered_modes, hq_ratio=m.hq_ratio, f_elite=result.f_elite,
                   convergence_epoch=result.convergence_iteration)
    else:
        data, mixture = training_data(config, job.seed, base_dir)
        cfg = replace(trainer_cfg, seed=derive_seed(config.seed, job.seed, "trainer"))
        result = train(cfg, data, cell_dir)
        summary = _generator_summary(result, mixture, config, job.seed, None)
        row.update(accuracy=None, rec_min=None, f1_min=None, modes=summary["modes"],
                   hq_ratio=summary["hq_ratio"], f_elite=summary["f_elite"],
                   convergence_epoch=summary["convergence_epoch"])
    return JobOutcome(job, [row], {f"T{t_init:g}_a{alpha:g}": cell_dir})


def _run_theory(config: ExperimentConfig, job: Job, run_dir: str, base_dir: str) -> JobOutcome:
    th = config.theory
    seed_dir = os.path.join(run_dir, f"seed_{job.seed}")
    land = build_landscape(config, job.seed, base_dir)
    chain_cfg = replace(th.chain, seed=derive_seed(config.seed, job.seed, "chain"))

    trajectory = run_chain(land, chain_cfg)
    monotone = check_monotone(trajectory)
    outputs = {
        "landscape.csv": os.path.join(seed_dir, "landscape.csv"),
        "chains.csv": os.path.join(seed_dir, "chains.csv"),
        "hitprob.csv": os.path.join(seed_dir, "hitprob.csv"),
    }
    save_landscape(outputs["landscape.csv"], land)
    write_chain_csv(outputs["chains.csv"], trajectory, land)

    budgets = th.budgets or (chain_cfg.budget,)
    annealed = hit_curve(land, replace(chain_cfg, greedy=False), th.runs, budgets)
    greedy = hit_curve(land, replace(chain_cfg, greedy=True), th.runs, budgets)
    hit_rows = ([(land.name, "annealed", b, est) for b, est in annealed]
                + [(land.name, "greedy", b, est) for b, est in greedy])
    write_hitprob_csv(outputs["hitprob.csv"], hit_rows)

    final = annealed[-1][1]
    row = {
        "seed": job.seed, "landscape": land.name, "states": land.n_states,
        "monotone": int(monotone.ok), "first_violation": monotone.first_violation,
        "hit_fraction": final.fraction, "ci_low": final.ci_low, "ci_high": final.ci_high,
        "greedy_fraction": greedy[-1][1].fraction, "sign_p": None,
    }

    if th.greedy_landscapes > 0:
        traps = [trap(th.n_states, noise=0.05,
                      rng=np.random.default_rng(derive_seed(config.seed, job.seed, f"trap{i}")))
                 for i in range(th.greedy_landscapes)]
        comparison = compare_greedy(traps, chain_cfg, th.runs)
        row["sign_p"] = comparison.p_value
        frame = pd.DataFrame({"landscape": range(len(traps)), "annealed": comparison.annealed,
                              "greedy": comparison.greedy})
        outputs["comparison.csv"] = os.path.join(seed_dir, "comparison.csv")
        write_frame_csv(outputs["comparison.csv"], frame)
    return JobOutcome(job, [row], outputs)


_HANDLERS = {"train": _run_train, "bench": _run_bench, "sweep": _run_sweep, "theory": _run_theory}


def _execute(config: ExperimentConfig, job: Job, run_dir: str, base_dir: str) -> JobOutcome:
    """Выполнение задания с перехватом ошибок (точка входа рабочего процесса)."""
    try:
        return _HANDLERS[job.kind](config, job, run_dir, base_dir)
    except Exception as e:
        logger.error("Задание %s seed=%d %s завершилось ошибкой: %s", job.kind, job.seed, job.cell, e)
        stage = job.kind if not job.cell else f"{job.kind}:{':'.join(str(c) for c in job.cell)}"
        return JobOutcome(job, error=ErrorRecord.from_exception(job.seed, stage, e))


def plan_jobs(config: ExperimentConfig) -> List[Job]:
    """Задания в детерминированном порядке: seed, затем ячейки."""
    jobs: List[Job] = []
    for seed in config.seeds:
        if config.kind == "bench":
            jobs.extend(Job("bench", seed, (m, float(ir)))
                        for m in config.bench.methods for ir in config.bench.irs)
        elif config.kind == "sweep":
            jobs.extend(Job("sweep", seed, cell) for cell in config.sweep.cells())
        else:
            jobs.append(Job(config.kind, seed))
    return jobs


def _columns(kind: str) -> Tuple[List[str], List[str]]:
    if kind == "bench":
        return METRIC_COLUMNS, ["method", "ir"]
    if kind == "sweep":
        return SWEEP_COLUMNS, ["t_init", "alpha"]
    if kind == "theory":
        return THEORY_COLUMNS, []
    return TRAIN_COLUMNS, []


def run(config: ExperimentConfig, out_dir: Optional[str] = None, overwrite: bool = False,
        jobs: int = 1, base_dir: str = ".") -> RunReport:
    """
    Выполнение эксперимента и запись всех выходов в run_dir.

    Args:
        config: Проверенная конфигурация
        out_dir: Директория запуска (по умолчанию config.out)
        overwrite: Разрешить перезапись существующего запуска
        jobs: Размер пула процессов (1 - последовательно)
        base_dir: База для относительных путей файлов данных

    Returns:
        RunReport; exit_code 0 - успех, 3 - все задания упали, 4 - часть seed упала

    Raises:
        RunDirectoryExistsError: Если запуск уже существует и overwrite=False
        ConfigError: Если данные не подходят виду эксперимента
    """
    run_dir = out_dir or config.out
    if config.kind == "bench" or (config.kind == "sweep" and config.sweep.ir is not None):
        if config.dataset.kind in ("ring", "grid"):
            raise ConfigError("стенду нужен размеченный набор (rings, csv, digits)", "dataset.kind")

    manifest = RunManifest.start(run_dir, config, overwrite)
    planned = plan_jobs(config)
    logger.info("Запуск %s: %d заданий, seeds: %s, пул: %d", config.kind, len(planned),
                list(config.seeds), jobs)

    if jobs > 1 and len(planned) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_execute, [config] * len(planned), planned,
                                     [run_dir] * len(planned), [base_dir] * len(planned)))
    else:
        outcomes = [_execute(config, job, run_dir, base_dir) for job in planned]

    errors = [o.error for o in outcomes if o.error is not None]
    failed = sorted({o.job.seed for o in outcomes if o.error is not None})
    for seed in config.seeds:
        merged: Dict[str, str] = {}
        for o in outcomes:
            if o.job.seed == seed and o.error is None:
                merged.update(o.outputs)
        manifest.record_outputs(seed, merged)

    columns, keys = _columns(config.kind)
    # seed с хотя бы одной упавшей ячейкой не входит в агрегаты целиком
    rows_list = [row for o in outcomes if o.job.seed not in failed for row in o.rows]
    aggregates: Dict[str, str] = {}
    rows_frame, means = None, None
    if rows_list:
        rows_frame = pd.DataFrame(rows_list, columns=columns)
        aggregates["metrics.csv"] = os.path.join(run_dir, "metrics.csv")
        write_frame_csv(aggregates["metrics.csv"], rows_frame)
        if keys:
            means = aggregate_means(rows_frame, keys)
            aggregates["means.csv"] = os.path.join(run_dir, "means.csv")
            write_frame_csv(aggregates["means.csv"], means)

    errors_path = write_errors(run_dir, errors)
    if not failed:
        exit_code, status = EXIT_OK, "completed"
    elif len(failed) == len(config.seeds):
        exit_code, status = EXIT_RUNTIME, "failed"
    else:
        exit_code, status = EXIT_PARTIAL, "partial"
    manifest.finalize(status, failed, aggregates)
    logger.info("Запуск завершён: %s (%d ошибок)", status, len(errors))
    return RunReport(exit_code, run_dir, rows_frame, means, failed, errors_path)


def sweep(config: ExperimentConfig, out_dir: Optional[str] = None, overwrite: bool = False,
          jobs: int = 1, base_dir: str = ".") -> RunReport:
    """Сетка (t_init x alpha) x seeds: строка на ячейку и средние по (t_init, alpha)."""
    if config.kind != "sweep":
        config = replace(config, kind="sweep")
    return run(config, out_dir, overwrite, jobs, base_dir)


def scatter(config: ExperimentConfig, samples_path: str, out_path: str,
            seed: Optional[int] = None, base_dir: str = ".") -> pd.DataFrame:
    """
    Переразметка файла точек колонкой mode для внешних графиков.

    mode - индекс ближайшего среднего смеси, если точка в пределах
    HQ_SIGMAS * sigma от него, иначе -1.

    Raises:
        ConfigError: Если для данных конфигурации смесь неизвестна
        DatasetError: Если файл точек некорректен
    """
    seed = config.seeds[0] if seed is None else seed
    _, mixture = training_data(config, seed, base_dir)
    if mixture is None:
        raise ConfigError("для разметки мод нужна синтетическая смесь (ring, grid, rings)", "dataset.kind")

    frame = pd.read_csv(samples_path)
    columns = [c for c in frame.columns if c.startswith("x") and c[1:].isdigit()]
    if len(columns) != mixture.dim:
        raise DatasetError(f"{samples_path}: ожидалось {mixture.dim} колонок x*, найдено {len(columns)}")
    points = frame[columns].to_numpy(dtype=np.float64)
    nearest, distance = assign_modes(points, mixture)
    modes = np.where(distance <= HQ_SIGMAS * mixture.sigma, nearest, -1)
    write_points_csv(out_path, points, {"mode": [int(m) for m in modes]})
    logger.info("Размечено %d точек: %d вне мод", len(points), int(np.sum(modes < 0)))
    return pd.DataFrame({**{c: points[:, j] for j, c in enumerate(columns)}, "mode": modes})
