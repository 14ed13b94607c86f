"""
Цепь {G_n} над конечным ландшафтом: порождение, обновление, прогон.

Симулятор минимизирует f; для критерия Метрополиса из модуля annealing
используется приспособленность F = -f.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np

from annealing import (
    T_MIN,
    AnnealState,
    MetropolisDecision,
    ParentChoice,
    accept,
    cool,
    metropolis_probability,
)
from .landscape import ChainConfigError, Landscape


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ChainConfig:
    """
    Конфигурация цепи.

    greedy=True принимает только неухудшающие переходы (базовая линия).
    start=None - начальное состояние выбирается равномерно по seed.
    """
    n_offspring: int = 1
    t_init: float = 1.0
    alpha: float = 0.999
    t_min: float = T_MIN
    parent_choice: ParentChoice = ParentChoice.CURRENT
    budget: int = 1000
    seed: int = 0
    greedy: bool = False
    start: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "parent_choice", ParentChoice(self.parent_choice))
        if self.n_offspring < 1:
            raise ChainConfigError("n_offspring должно быть >= 1")
        if self.budget < 0:
            raise ChainConfigError("budget не может быть отрицательным")
        if not self.t_init > 0:
            raise ChainConfigError("t_init должна быть > 0")
        if not 0 < self.alpha <= 1:
            raise ChainConfigError(f"alpha must lie in (0,1], получено {self.alpha}")
        if not 0 < self.t_min <= self.t_init:
            raise ChainConfigError(f"t_min должна лежать в (0, t_init], получено {self.t_min}")


@dataclass(frozen=True)
class ChainState:
    """Пара [g, g_b] и номер итерации."""
    g: int
    g_b: int
    iteration: int = 0


@dataclass(frozen=True)
class Trajectory:
    """
    Прогон цепи.

    states[0] - начальное состояние; decisions[k] и temperatures[k]
    относятся к переходу states[k] -> states[k + 1]; elite_values[k] = f(g_b).
    """
    states: Tuple[ChainState, ...]
    offspring: Tuple[int, ...]
    decisions: Tuple[MetropolisDecision, ...]
    temperatures: Tuple[float, ...]
    elite_values: Tuple[float, ...]

    def __len__(self) -> int:
        return len(self.states)


def initial_state(land: Landscape, cfg: ChainConfig, rng: np.random.Generator) -> ChainState:
    """Начальное состояние: cfg.start или равномерный выбор."""
    if cfg.start is not None:
        if not 0 <= cfg.start < land.n_states:
            raise ChainConfigError(f"start={cfg.start} вне [0, {land.n_states})")
        g = cfg.start
    else:
        g = int(rng.integers(0, land.n_states))
    return ChainState(g, g, 0)


def f_gen(chain: ChainState, land: Landscape, cfg: ChainConfig,
          rng: np.random.Generator) -> int:
    """
    Порождение лучшего потомка.

    Родитель - g или g_b по cfg.parent_choice; n_offspring потомков
    выбираются равномерно из соседей родителя с возвращением.
    Возвращается потомок с минимальным f, при равенстве - с меньшим номером.
    """
    parent = chain.g_b if cfg.parent_choice is ParentChoice.ELITE else chain.g
    nb = land.neighbors[parent]
    picks = rng.integers(0, len(nb), size=cfg.n_offspring)
    return min((nb[int(i)] for i in picks), key=lambda s: (land.values[s], s))


def f_upd(chain: ChainState, g_cbest: int, land: Landscape, temperature: float,
          rng: np.random.Generator, greedy: bool = False) -> Tuple[ChainState, MetropolisDecision]:
    """
    Обновление пары [g, g_b].

    Неухудшающий потомок принимается всегда, ухудшающий - с вероятностью
    exp(-(f(g_cbest) - f(g)) / T); в жадном режиме - никогда.
    Элита заменяется только при строгом улучшении. Розыгрыш γ выполняется
    на каждом шаге, поэтому жадная и отжигаемая цепи с одним seed
    используют одни и те же потомки.
    """
    f_current, f_child = land.values[chain.g], land.values[g_cbest]
    if greedy:
        probability = 1.0 if f_child <= f_current else 0.0
    else:
        probability = metropolis_probability(-f_current, -f_child, temperature)
    decision = replace(accept(probability, rng), delta=max(0.0, f_child - f_current))

    g = g_cbest if decision.accepted else chain.g
    g_b = g_cbest if f_child < land.values[chain.g_b] else chain.g_b
    return ChainState(g, g_b, chain.iteration + 1), decision


def run_chain(land: Landscape, cfg: ChainConfig) -> Trajectory:
    """
    Прогон cfg.budget итераций с геометрическим охлаждением.

    Returns:
        Trajectory длины budget + 1
    """
    rng = np.random.default_rng(cfg.seed)
    chain = initial_state(land, cfg, rng)
    anneal = AnnealState.start(cfg.t_init, cfg.alpha, cfg.t_min)

    states: List[ChainState] = [chain]
    offspring: List[int] = []
    decisions: List[MetropolisDecision] = []
    temperatures: List[float] = []
    for _ in range(cfg.budget):
        g_cbest = f_gen(chain, land, cfg, rng)
        chain, decision = f_upd(chain, g_cbest, land, anneal.t_current, rng, cfg.greedy)
        offspring.append(g_cbest)
        decisions.append(decision)
        temperatures.append(anneal.t_current)
        states.append(chain)
        anneal = cool(anneal)

    return Trajectory(
        states=tuple(states),
        offspring=tuple(offspring),
        decisions=tuple(decisions),
        temperatures=tuple(temperatures),
        elite_values=tuple(land.values[s.g_b] for s in states),
    )


def first_hit_iteration(land: Landscape, cfg: ChainConfig) -> Optional[int]:
    """
    Первая итерация, на которой g_b - глобальный минимум, или None.

    Совпадает с прогоном run_chain при том же cfg, но не хранит траекторию.
    """
    target = land.min_value
    rng = np.random.default_rng(cfg.seed)
    chain = initial_state(land, cfg, rng)
    if land.values[chain.g_b] == target:
        return 0
    anneal = AnnealState.start(cfg.t_init, cfg.alpha, cfg.t_min)
    for _ in range(cfg.budget):
        g_cbest = f_gen(chain, land, cfg, rng)
        chain, _ = f_upd(chain, g_cbest, land, anneal.t_current, rng, cfg.greedy)
        if land.values[chain.g_b] == target:
            return chain.iteration
        anneal = cool(anneal)
    return None


def run_seeds(seed: int, n_runs: int) -> List[int]:
    """Независимые seed для n_runs прогонов, производные от seed."""
    children = np.random.SeedSequence(seed).spawn(n_runs)
    return [int(child.generate_state(1)[0]) for child in children]
