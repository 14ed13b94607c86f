"""
Симулятор цепи {G_n} над конечными ландшафтами.

Компоненты:
    - landscape: ландшафты, генераторы, CSV
    - chain: порождение, обновление, прогон
    - analysis: монотонность, однородность, вероятность попадания
"""

from .landscape import (
    Landscape,
    line,
    ring,
    star,
    rugged,
    trap,
    save_landscape,
    load_landscape,
    disconnected_states,
    TheorySimError,
    LandscapeError,
    ChainConfigError,
)
from .chain import (
    ChainConfig,
    ChainState,
    Trajectory,
    f_gen,
    f_upd,
    run_chain,
    first_hit_iteration,
    run_seeds,
)
from .analysis import (
    MonotoneReport,
    HomogeneityReport,
    HitEstimate,
    GreedyComparison,
    check_monotone,
    check_homogeneity,
    estimate_hit_probability,
    hit_curve,
    compare_greedy,
    write_chain_csv,
    write_hitprob_csv,
)

__all__ = [
    "Landscape", "line", "ring", "star", "rugged", "trap",
    "save_landscape", "load_landscape", "disconnected_states",
    "ChainConfig", "ChainState", "Trajectory",
    "f_gen", "f_upd", "run_chain", "first_hit_iteration", "run_seeds",
    "MonotoneReport", "HomogeneityReport", "HitEstimate", "GreedyComparison",
    "check_monotone", "check_homogeneity", "estimate_hit_probability",
    "hit_curve", "compare_greedy", "write_chain_csv", "write_hitprob_csv",
    "TheorySimError", "LandscapeError", "ChainConfigError",
]
