"""
Эмпирические проверки свойств цепи.

    - check_monotone: f(g_b) не возрастает вдоль траектории
    - check_homogeneity: ядра перехода в двух окнах итераций совпадают
    - estimate_hit_probability / hit_curve: доля прогонов, нашедших оптимум
    - compare_greedy: отжиг против жадной цепи на парных seed (знаковый тест)
"""

import csv
import logging
import math
import os
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import binomtest

from .chain import ChainConfig, Trajectory, f_gen, f_upd, first_hit_iteration, initial_state, run_seeds
from .landscape import ChainConfigError, Landscape
from annealing import AnnealState, cool


logger = logging.getLogger(__name__)

PairState = Tuple[int, int]


@dataclass(frozen=True)
class MonotoneReport:
    ok: bool
    first_violation: Optional[int] = None


@dataclass(frozen=True)
class HomogeneityReport:
    """
    max_tv - максимум TV-расстояния по состояниям с достаточной выборкой;
    excluded - состояния (g, g_b), где хотя бы в одном окне меньше min_count переходов.
    """
    max_tv: float
    per_state: Dict[PairState, float]
    excluded: Tuple[PairState, ...]
    counts_a: int
    counts_b: int


@dataclass(frozen=True)
class HitEstimate:
    """Оценка доли успешных прогонов с биномиальной ошибкой и 95% CI Уилсона."""
    hits: int
    n_runs: int
    fraction: float
    stderr: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, hits: int, n_runs: int) -> "HitEstimate":
        if n_runs < 1:
            raise ChainConfigError("n_runs должно быть >= 1")
        fraction = hits / n_runs
        ci = binomtest(hits, n_runs).proportion_ci(confidence_level=0.95, method="wilson")
        stderr = math.sqrt(fraction * (1.0 - fraction) / n_runs)
        return cls(hits, n_runs, fraction, stderr, float(ci.low), float(ci.high))


@dataclass(frozen=True)
class GreedyComparison:
    """Парное сравнение по ландшафтам; p_value - односторонний знаковый тест."""
    annealed: Tuple[float, ...]
    greedy: Tuple[float, ...]
    wins: int
    losses: int
    ties: int
    p_value: float


def check_monotone(trajectory: Trajectory) -> MonotoneReport:
    """
    Проверка невозрастания f(g_b).

    Returns:
        MonotoneReport; first_violation - индекс состояния, где f(g_b) выросла

    Raises:
        ChainConfigError: Для пустой траектории
    """
    values = trajectory.elite_values
    if not values:
        raise ChainConfigError("Пустая траектория")
    for idx in range(1, len(values)):
        if values[idx] > values[idx - 1]:
            return MonotoneReport(False, idx)
    return MonotoneReport(True, None)


def _transition_counts(land: Landscape, cfg: ChainConfig, window: Tuple[int, int],
                       seeds: Sequence[int], horizon: int,
                       other: Tuple[int, int]) -> Tuple[Dict[PairState, Counter], Dict[PairState, Counter]]:
    """Счётчики переходов (g, g_b) -> (g', g_b') для двух окон за один проход."""
    counts = (defaultdict(Counter), defaultdict(Counter))
    windows = (window, other)
    for seed in seeds:
        run_cfg = replace(cfg, seed=seed)
        rng = np.random.default_rng(seed)
        chain = initial_state(land, run_cfg, rng)
        anneal = AnnealState.start(cfg.t_init, cfg.alpha, cfg.t_min)
        for step in range(1, horizon + 1):
            before = (chain.g, chain.g_b)
            g_cbest = f_gen(chain, land, run_cfg, rng)
            chain, _ = f_upd(chain, g_cbest, land, anneal.t_current, rng, cfg.greedy)
            anneal = cool(anneal)
            for slot, (lo, hi) in enumerate(windows):
                if lo <= step < hi:
                    counts[slot][before][(chain.g, chain.g_b)] += 1
    return counts


def _total_variation(a: Counter, b: Counter) -> float:
    total_a, total_b = sum(a.values()), sum(b.values())
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a[k] / total_a - b[k] / total_b) for k in keys)


def check_homogeneity(land: Landscape, cfg: ChainConfig, window_a: Tuple[int, int],
                      window_b: Tuple[int, int], samples: int,
                      min_count: int = 10_000) -> HomogeneityReport:
    """
    Сравнение эмпирических ядер перехода в двух непересекающихся окнах.

    Прогоняется samples независимых цепей до конца более позднего окна;
    переход с номером n (из состояния n-1 в n) относится к окну [lo, hi),
    если lo <= n < hi. Однородность ожидается только при alpha = 1.

    Args:
        land: Ландшафт
        cfg: Конфигурация цепи (seed задаёт семейство прогонов)
        window_a, window_b: Окна итераций [lo, hi)
        samples: Число прогонов
        min_count: Минимум переходов из состояния в каждом окне

    Returns:
        HomogeneityReport
    """
    for lo, hi in (window_a, window_b):
        if not 1 <= lo < hi:
            raise ChainConfigError(f"Некорректное окно [{lo}, {hi})")
    if max(window_a[0], window_b[0]) < min(window_a[1], window_b[1]):
        raise ChainConfigError("Окна итераций пересекаются")
    if samples < 1:
        raise ChainConfigError("samples должно быть >= 1")
    if cfg.alpha < 1.0:
        logger.info("Температура охлаждается (alpha=%s): однородность не ожидается", cfg.alpha)

    horizon = max(window_a[1], window_b[1]) - 1
    counts_a, counts_b = _transition_counts(land, cfg, window_a, run_seeds(cfg.seed, samples),
                                            horizon, window_b)

    per_state: Dict[PairState, float] = {}
    excluded: List[PairState] = []
    for state in sorted(set(counts_a) | set(counts_b)):
        a, b = counts_a.get(state, Counter()), counts_b.get(state, Counter())
        if sum(a.values()) < min_count or sum(b.values()) < min_count:
            excluded.append(state)
            continue
        per_state[state] = _total_variation(a, b)

    if excluded:
        logger.debug("Исключено %d состояний с недостаточной выборкой", len(excluded))
    return HomogeneityReport(
        max_tv=max(per_state.values(), default=0.0),
        per_state=per_state,
        excluded=tuple(excluded),
        counts_a=sum(sum(c.values()) for c in counts_a.values()),
        counts_b=sum(sum(c.values()) for c in counts_b.values()),
    )


def hit_iterations(land: Landscape, cfg: ChainConfig, n_runs: int) -> List[Optional[int]]:
    """Итерации первого попадания g_b в глобальный минимум для n_runs прогонов."""
    return [first_hit_iteration(land, replace(cfg, seed=seed)) for seed in run_seeds(cfg.seed, n_runs)]


def estimate_hit_probability(land: Landscape, cfg: ChainConfig, n_runs: int) -> HitEstimate:
    """
    Доля прогонов, чья элита достигла глобального минимума за cfg.budget итераций.

    Оптимум определяется полным перебором f.
    """
    hits = sum(1 for it in hit_iterations(land, cfg, n_runs) if it is not None)
    estimate = HitEstimate.from_counts(hits, n_runs)
    logger.debug("%s: попаданий %d/%d", land.name, hits, n_runs)
    return estimate


def hit_curve(land: Landscape, cfg: ChainConfig, n_runs: int,
              budgets: Sequence[int]) -> List[Tuple[int, HitEstimate]]:
    """
    Доля попаданий для вложенных бюджетов на одних и тех же seed.

    Прогоны выполняются один раз до максимального бюджета, поэтому
    кривая не убывает по построению.
    """
    if not budgets:
        return []
    longest = replace(cfg, budget=max(budgets))
    hits = hit_iterations(land, longest, n_runs)
    curve = []
    for budget in sorted(budgets):
        count = sum(1 for it in hits if it is not None and it <= budget)
        curve.append((budget, HitEstimate.from_counts(count, n_runs)))
    return curve


def compare_greedy(landscapes: Sequence[Landscape], cfg: ChainConfig,
                   n_runs: int) -> GreedyComparison:
    """
    Отжиг против жадной цепи на одних и тех же seed.

    Победа - доля попаданий отжига строго больше жадной на ландшафте.
    p_value - односторонний знаковый тест по ландшафтам без ничьих.
    """
    annealed: List[float] = []
    greedy: List[float] = []
    for land in landscapes:
        annealed.append(estimate_hit_probability(land, replace(cfg, greedy=False), n_runs).fraction)
        greedy.append(estimate_hit_probability(land, replace(cfg, greedy=True), n_runs).fraction)

    wins = sum(1 for a, g in zip(annealed, greedy) if a > g)
    losses = sum(1 for a, g in zip(annealed, greedy) if a < g)
    ties = len(annealed) - wins - losses
    decisive = wins + losses
    p_value = binomtest(wins, decisive, 0.5, alternative="greater").pvalue if decisive else 1.0
    logger.info("Отжиг против жадной цепи: %d побед, %d поражений, %d ничьих, p=%.3g",
                wins, losses, ties, p_value)
    return GreedyComparison(tuple(annealed), tuple(greedy), wins, losses, ties, float(p_value))


def write_chain_csv(path: str, trajectory: Trajectory, land: Landscape) -> None:
    """chains.csv: одна строка на итерацию траектории."""
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "g", "g_b", "f_g", "f_gb", "g_cbest",
                         "temperature", "probability", "draw", "accepted"])
        for idx, state in enumerate(trajectory.states):
            if idx == 0:
                tail = ["", "", "", "", ""]
            else:
                d = trajectory.decisions[idx - 1]
                tail = [trajectory.offspring[idx - 1], repr(trajectory.temperatures[idx - 1]),
                        repr(float(d.probability)), repr(float(d.draw)), int(d.accepted)]
            writer.writerow([state.iteration, state.g, state.g_b,
                             repr(land.values[state.g]), repr(land.values[state.g_b])] + tail)


def write_hitprob_csv(path: str, rows: Sequence[Tuple[str, str, int, HitEstimate]]) -> None:
    """hitprob.csv: ландшафт, вариант цепи, бюджет, доля и CI."""
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["landscape", "variant", "budget", "hits", "runs",
                         "fraction", "stderr", "ci_low", "ci_high"])
        for name, variant, budget, est in rows:
            writer.writerow([name, variant, budget, est.hits, est.n_runs, repr(est.fraction),
                             repr(est.stderr), repr(est.ci_low), repr(est.ci_high)])
