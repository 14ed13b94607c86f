"""
Численное ядро: небольшие полносвязные сети на numpy.

Компоненты:
    - mlp: архитектура, веса, прямой и обратный проход
    - optim: SGD/Adam и норма градиента
    - checkpoint: текстовый формат весов
"""

from .mlp import (
    MLPSpec,
    ParamSet,
    GradSet,
    Tape,
    PROB_EPS,
    init_params,
    forward,
    backward,
    generator_spec,
    discriminator_spec,
    classifier_spec,
    NDCoreError,
    DimensionError,
    TapeError,
    NumericError,
)
from .optim import OptState, init_opt_state, opt_step, grad_norm
from .checkpoint import save_params, load_params, CheckpointError

__all__ = [
    "MLPSpec", "ParamSet", "GradSet", "Tape", "PROB_EPS",
    "init_params", "forward", "backward",
    "generator_spec", "discriminator_spec", "classifier_spec",
    "OptState", "init_opt_state", "opt_step", "grad_norm",
    "save_params", "load_params",
    "NDCoreError", "DimensionError", "TapeError", "NumericError", "CheckpointError",
]
