"""
Эволюционное обучение GAN с отжигом.

Каждая итерация:
    1. Оценить приспособленность родителя F_G
    2. Породить по потомку на каждую мутацию, оценить, выбрать лучшего
    3. Принять лучшего потомка по критерию Метрополиса
    4. Обновить элиту g_b ("лучший g на данный момент")
    5. Охладить температуру
    6. Обновить дискриминатор на выходах принятого генератора
    7. Записать строку истории

Режимы:
    - aggan: все мутации + критерий Метрополиса
    - egan: все мутации, лучший потомок принимается всегда
    - fixed: одна мутация, принимается всегда (обычный GAN)
    - none: обучение не выполняется (базовая линия CN)
"""

import csv
import logging
import os
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ndcore import (
    MLPSpec,
    ParamSet,
    GradSet,
    OptState,
    NDCoreError,
    NumericError,
    init_params,
    init_opt_state,
    forward,
    backward,
    opt_step,
    grad_norm,
    generator_spec,
    discriminator_spec,
    save_params,
)
from ganlosses import (
    ALL_OBJECTIVES,
    DEFAULT_GAMMA_F,
    FitnessScore,
    LossError,
    MutationObjective,
    DiscLoss,
    disc_loss,
    gen_loss,
    fitness,
)
from annealing import (
    AnnealState,
    AnnealingError,
    DecisionLog,
    MetropolisDecision,
    ParentChoice,
    accept,
    cool,
    metropolis_probability,
)


logger = logging.getLogger(__name__)


class TrainMode(str, Enum):
    """Режим обучения генератора."""
    AGGAN = "aggan"
    EGAN = "egan"
    FIXED = "fixed"
    NONE = "none"


@dataclass(frozen=True)
class OptimizerConfig:
    """Настройки оптимизатора одной сети."""
    kind: str = "adam"
    lr: float = 1e-3
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    def init(self, params: ParamSet) -> OptState:
        return init_opt_state(params, self.kind, self.lr, self.beta1, self.beta2, self.eps)


@dataclass(frozen=True)
class TrainerConfig:
    """
    Конфигурация эволюционного обучения.

    mutations - n_m, число мутаций (первые n_m из minimax, nonsaturating,
    leastsquares); в режиме fixed используется только fixed_objective.
    """
    mode: TrainMode = TrainMode.AGGAN
    fixed_objective: Optional[MutationObjective] = None
    mutations: int = 3
    offspring_steps: int = 1
    batch_size: int = 64
    eval_batch_size: int = 256
    latent_dim: int = 2
    hidden_width: int = 64
    hidden_layers: int = 2
    t_init: float = 1000.0
    alpha: float = 0.99
    gamma_f: float = DEFAULT_GAMMA_F
    g_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    d_optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    d_steps: int = 1
    iterations: int = 1000
    seed: int = 0
    parent_choice: ParentChoice = ParentChoice.CURRENT
    patience: int = 0
    sample_every: int = 0
    sample_count: int = 1000

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", TrainMode(self.mode))
        object.__setattr__(self, "parent_choice", ParentChoice(self.parent_choice))
        if self.fixed_objective is not None:
            object.__setattr__(self, "fixed_objective", MutationObjective(self.fixed_objective))

        if self.mode is TrainMode.FIXED and self.fixed_objective is None:
            raise TrainerConfigError("Режим fixed требует ровно одну мутацию (fixed_objective)")
        if not 1 <= self.mutations <= len(ALL_OBJECTIVES):
            raise TrainerConfigError(
                f"mutations должно лежать в [1, {len(ALL_OBJECTIVES)}], получено {self.mutations}"
            )
        for name in ("offspring_steps", "batch_size", "eval_batch_size", "latent_dim",
                     "hidden_width", "hidden_layers", "d_steps", "sample_count"):
            if getattr(self, name) < 1:
                raise TrainerConfigError(f"{name} должно быть >= 1")
        for name in ("iterations", "patience", "sample_every"):
            if getattr(self, name) < 0:
                raise TrainerConfigError(f"{name} не может быть отрицательным")
        if not self.t_init > 0:
            raise TrainerConfigError("t_init должна быть > 0")
        if not 0 < self.alpha <= 1:
            raise TrainerConfigError(f"alpha must lie in (0,1], получено {self.alpha}")
        if self.gamma_f < 0:
            raise TrainerConfigError("gamma_f не может быть отрицательным")

    def objectives(self) -> Tuple[MutationObjective, ...]:
        """Мутации, порождающие потомков на каждой итерации (в порядке индексов)."""
        if self.mode is TrainMode.FIXED:
            return (self.fixed_objective,)
        return ALL_OBJECTIVES[:self.mutations]


@dataclass
class RandomStreams:
    """
    Независимые потоки случайности одного запуска.

    init - веса, train - батчи потомков и дискриминатора,
    eval - батчи оценки приспособленности, accept - розыгрыши Метрополиса.
    """
    init: np.random.Generator
    train: np.random.Generator
    eval: np.random.Generator
    accept: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStreams":
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(np.random.default_rng(child) for child in children))


@dataclass(frozen=True)
class GeneratorModel:
    """Обученный генератор, готовый выдавать выборки."""
    spec: MLPSpec
    params: ParamSet

    @property
    def latent_dim(self) -> int:
        return self.spec.input_dim

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n точек G(z), z ~ N(0, I)."""
        if n == 0:
            return np.zeros((0, self.spec.output_dim))
        z = rng.standard_normal((n, self.latent_dim))
        return forward(self.spec, self.params, z)[0]


@dataclass(frozen=True)
class Offspring:
    """Потомок: веса после шагов по одной мутации и его оптимизатор."""
    objective: MutationObjective
    params: ParamSet
    opt: OptState


@dataclass(frozen=True)
class IterationRecord:
    """Строка истории одной итерации."""
    iteration: int
    f_parent: float
    offspring_fitness: Dict[str, float]
    chosen: str
    delta: float
    probability: float
    draw: float
    accepted: bool
    temperature: float
    d_loss: float
    f_elite: float


@dataclass(frozen=True)
class EvoState:
    """
    Состояние эволюции между итерациями.

    elite_fitness - максимум приспособленности по всем оценённым генераторам,
    не убывает от итерации к итерации.
    """
    g_spec: MLPSpec
    d_spec: MLPSpec
    generator: ParamSet
    g_opt: OptState
    elite: ParamSet
    elite_opt: OptState
    elite_fitness: FitnessScore
    discriminator: ParamSet
    d_opt: OptState
    anneal: AnnealState
    history: Tuple[IterationRecord, ...] = ()
    stale: int = 0

    @property
    def iteration(self) -> int:
        return len(self.history)


@dataclass(frozen=True)
class TrainResult:
    """Итог обучения: финальный генератор, элита и полное состояние."""
    final: ParamSet
    elite: ParamSet
    state: EvoState

    @property
    def history(self) -> Tuple[IterationRecord, ...]:
        return self.state.history

    def final_model(self) -> GeneratorModel:
        return GeneratorModel(self.state.g_spec, self.final)

    def elite_model(self) -> GeneratorModel:
        return GeneratorModel(self.state.g_spec, self.elite)


_NO_FITNESS = FitnessScore(-np.inf, -np.inf, -np.inf, 0.0)


def init_state(cfg: TrainerConfig, data_dim: int, streams: RandomStreams) -> EvoState:
    """
    Начальное состояние: случайные G и D, элита совпадает с G.

    Элитная приспособленность равна -inf до первой оценки.
    """
    g_spec = generator_spec(cfg.latent_dim, data_dim, cfg.hidden_width, cfg.hidden_layers)
    d_spec = discriminator_spec(data_dim, cfg.hidden_width, cfg.hidden_layers)
    generator = init_params(g_spec, streams.init)
    discriminator = init_params(d_spec, streams.init)
    g_opt = cfg.g_optimizer.init(generator)
    return EvoState(
        g_spec=g_spec,
        d_spec=d_spec,
        generator=generator,
        g_opt=g_opt,
        elite=generator,
        elite_opt=g_opt,
        elite_fitness=replace(_NO_FITNESS, gamma=cfg.gamma_f),
        discriminator=discriminator,
        d_opt=cfg.d_optimizer.init(discriminator),
        anneal=AnnealState.start(cfg.t_init, cfg.alpha),
    )


def _disc_objective(d_spec: MLPSpec, discriminator: ParamSet, x_real: np.ndarray,
                    x_fake: np.ndarray) -> Tuple[DiscLoss, GradSet, np.ndarray]:
    """Потеря D, её градиент по параметрам D и оценки D на фейках."""
    d_real, tape_real = forward(d_spec, discriminator, x_real)
    d_fake, tape_fake = forward(d_spec, discriminator, x_fake)
    loss = disc_loss(d_real, d_fake)
    grads_real, _ = backward(d_spec, discriminator, tape_real, loss.grad_real.reshape(-1, 1))
    grads_fake, _ = backward(d_spec, discriminator, tape_fake, loss.grad_fake.reshape(-1, 1))
    return loss, grads_real + grads_fake, d_fake


def spawn_offspring(g_spec: MLPSpec, d_spec: MLPSpec, parent: ParamSet,
                    parent_opt: OptState, discriminator: ParamSet,
                    objective: MutationObjective,
                    latents: Sequence[np.ndarray]) -> Offspring:
    """
    Порождение потомка: копия родителя после len(latents) шагов по мутации.

    Дискриминатор заморожен; родитель и его оптимизатор не изменяются.

    Args:
        g_spec, d_spec: Архитектуры G и D
        parent: Веса родителя
        parent_opt: Состояние оптимизатора родителя (наследуется потомком)
        discriminator: Замороженный снимок D
        objective: Мутация
        latents: По одному латентному батчу на шаг

    Returns:
        Offspring

    Raises:
        OffspringNumericError: Если потеря или градиент не конечны
    """
    if not latents:
        raise TrainerConfigError("Потомку нужен хотя бы один шаг обучения")
    params, opt = parent.copy(), parent_opt
    for z in latents:
        fake, tape_g = forward(g_spec, params, z)
        d_fake, tape_d = forward(d_spec, discriminator, fake)
        loss = gen_loss(objective, d_fake)
        if not np.isfinite(loss.loss):
            raise OffspringNumericError(objective.value, "потеря не конечна")
        _, grad_fake = backward(d_spec, discriminator, tape_d, loss.grad.reshape(-1, 1))
        grads, _ = backward(g_spec, params, tape_g, grad_fake)
        try:
            params, opt = opt_step(params, grads, opt)
        except NumericError as e:
            raise OffspringNumericError(objective.value, str(e))
    return Offspring(objective, params, opt)


def evaluate_offspring(g_spec: MLPSpec, d_spec: MLPSpec,
                       candidates: Sequence[ParamSet], discriminator: ParamSet,
                       z_eval: np.ndarray, x_eval: np.ndarray,
                       gamma: float) -> List[FitnessScore]:
    """
    Приспособленность кандидатов на общих батчах и общем снимке D.

    quality - средняя оценка D на G(z_eval); diversity - минус логарифм
    нормы градиента потерь D по его параметрам на (x_eval, G(z_eval)).
    """
    scores: List[FitnessScore] = []
    for params in candidates:
        fake = forward(g_spec, params, z_eval)[0]
        _, d_grads, d_fake = _disc_objective(d_spec, discriminator, x_eval, fake)
        scores.append(fitness(d_fake, grad_norm(d_grads), gamma))
    return scores


def select_best(scores: Sequence[FitnessScore]) -> int:
    """
    Индекс максимальной combined-приспособленности.

    При равенстве выигрывает меньший индекс.

    Raises:
        TrainerArgumentError: Для пустого списка
    """
    if not scores:
        raise TrainerArgumentError("Нельзя выбрать лучшего из пустого списка")
    best = 0
    for idx in range(1, len(scores)):
        if scores[idx].combined > scores[best].combined:
            best = idx
    return best


def evolve_step(state: EvoState, cfg: TrainerConfig, data: np.ndarray,
                streams: RandomStreams) -> EvoState:
    """
    Одна эволюционная итерация (см. описание модуля).

    Порядок обращений к потокам фиксирован: eval - батчи оценки;
    train - латентные батчи потомков (по мутациям, затем по шагам),
    затем батчи дискриминатора; accept - один розыгрыш на итерацию.
    """
    objectives = cfg.objectives()
    n_data = data.shape[0]

    z_eval = streams.eval.standard_normal((cfg.eval_batch_size, cfg.latent_dim))
    x_eval = data[streams.eval.integers(0, n_data, size=cfg.eval_batch_size)]
    latents = [
        [streams.train.standard_normal((cfg.batch_size, cfg.latent_dim))
         for _ in range(cfg.offspring_steps)]
        for _ in objectives
    ]

    if cfg.parent_choice is ParentChoice.ELITE:
        parent, parent_opt = state.elite, state.elite_opt
    else:
        parent, parent_opt = state.generator, state.g_opt

    f_parent = evaluate_offspring(state.g_spec, state.d_spec, [parent], state.discriminator,
                                  z_eval, x_eval, cfg.gamma_f)[0]
    brood = [
        spawn_offspring(state.g_spec, state.d_spec, parent, parent_opt,
                        state.discriminator, objective, batches)
        for objective, batches in zip(objectives, latents)
    ]
    scores = evaluate_offspring(state.g_spec, state.d_spec, [c.params for c in brood],
                                state.discriminator, z_eval, x_eval, cfg.gamma_f)
    best = select_best(scores)
    champion, f_best = brood[best], scores[best]

    temperature = state.anneal.t_current
    if cfg.mode is TrainMode.AGGAN:
        probability = metropolis_probability(f_parent.combined, f_best.combined, temperature)
    else:
        probability = 1.0
    decision = accept(probability, streams.accept)
    decision = replace(decision, delta=max(0.0, f_parent.combined - f_best.combined))

    if decision.accepted:
        generator, g_opt = champion.params, champion.opt
    else:
        generator, g_opt = state.generator, state.g_opt

    elite, elite_opt, elite_fitness = state.elite, state.elite_opt, state.elite_fitness
    improved = False
    if f_parent.combined > elite_fitness.combined:
        elite, elite_opt, elite_fitness = parent, parent_opt, f_parent
        improved = True
    if f_best.combined > elite_fitness.combined:
        elite, elite_opt, elite_fitness = champion.params, champion.opt, f_best
        improved = True

    discriminator, d_opt = state.discriminator, state.d_opt
    d_losses: List[float] = []
    for _ in range(cfg.d_steps):
        x_real = data[streams.train.integers(0, n_data, size=cfg.batch_size)]
        z = streams.train.standard_normal((cfg.batch_size, cfg.latent_dim))
        fake = forward(state.g_spec, generator, z)[0]
        loss, d_grads, _ = _disc_objective(state.d_spec, discriminator, x_real, fake)
        discriminator, d_opt = opt_step(discriminator, d_grads, d_opt)
        d_losses.append(loss.loss)

    record = IterationRecord(
        iteration=state.iteration + 1,
        f_parent=f_parent.combined,
        offspring_fitness={obj.value: s.combined for obj, s in zip(objectives, scores)},
        chosen=champion.objective.value,
        delta=decision.delta,
        probability=decision.probability,
        draw=decision.draw,
        accepted=decision.accepted,
        temperature=temperature,
        d_loss=float(np.mean(d_losses)),
        f_elite=elite_fitness.combined,
    )
    return replace(
        state,
        generator=generator,
        g_opt=g_opt,
        elite=elite,
        elite_opt=elite_opt,
        elite_fitness=elite_fitness,
        discriminator=discriminator,
        d_opt=d_opt,
        anneal=cool(state.anneal),
        history=state.history + (record,),
        stale=0 if improved else state.stale + 1,
    )


def convergence_iteration(history: Sequence[IterationRecord], fraction: float = 0.99) -> int:
    """
    Первая итерация, на которой прирост элиты достиг fraction от итогового.

    Прирост считается от первой записанной элитной приспособленности, поэтому
    определение корректно и для отрицательных значений. Для пустой истории - 0.
    """
    if not history:
        return 0
    start, final = history[0].f_elite, history[-1].f_elite
    target = start + fraction * (final - start)
    for record in history:
        if record.f_elite >= target:
            return record.iteration
    return history[-1].iteration


class _RunWriter:
    """Выходные файлы запуска: history.csv, decisions.csv, чекпоинты, выборки."""

    HISTORY_COLUMNS = (["iteration", "f_parent"]
                       + [f"f_{obj.value}" for obj in ALL_OBJECTIVES]
                       + ["chosen", "delta", "probability", "draw", "accepted",
                          "temperature", "d_loss", "f_elite"])

    def __init__(self, run_dir: str) -> None:
        self._run_dir = run_dir
        os.makedirs(run_dir, exist_ok=True)
        self._history_path = os.path.join(run_dir, "history.csv")
        with open(self._history_path, "w", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow(self.HISTORY_COLUMNS)
        self._decisions = DecisionLog(os.path.join(run_dir, "decisions.csv"))

    def append(self, record: IterationRecord) -> None:
        offspring = [record.offspring_fitness.get(obj.value) for obj in ALL_OBJECTIVES]
        row = ([record.iteration, repr(float(record.f_parent))]
               + ["" if v is None else repr(float(v)) for v in offspring]
               + [record.chosen, repr(float(record.delta)), repr(float(record.probability)),
                  repr(float(record.draw)), int(record.accepted),
                  repr(float(record.temperature)), repr(float(record.d_loss)),
                  repr(float(record.f_elite))])
        with open(self._history_path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow(row)
        best_child = record.offspring_fitness[record.chosen]
        self._decisions.append(
            record.iteration, record.temperature, record.f_parent, best_child,
            MetropolisDecision(record.probability, record.draw, record.accepted, record.delta),
        )

    def write_samples(self, model: GeneratorModel, iteration: int, count: int,
                      seed: int) -> str:
        rng = np.random.default_rng(np.random.SeedSequence([seed, iteration]))
        samples = model.sample(count, rng)
        path = os.path.join(self._run_dir, f"samples_{iteration}.csv")
        write_points_csv(path, samples)
        return path

    def write_checkpoints(self, state: EvoState) -> None:
        save_params(os.path.join(self._run_dir, "generator_final.params"),
                    state.g_spec, state.generator)
        save_params(os.path.join(self._run_dir, "generator_elite.params"),
                    state.g_spec, state.elite)
        save_params(os.path.join(self._run_dir, "discriminator.params"),
                    state.d_spec, state.discriminator)


def write_points_csv(path: str, points: np.ndarray,
                     extra: Optional[Dict[str, Sequence]] = None) -> None:
    """
    Запись точек в CSV с колонками x0..x{d-1} (и дополнительными колонками).

    Args:
        path: Путь к файлу
        points: Матрица (n, d)
        extra: Дополнительные колонки {имя: значения}
    """
    extra = extra or {}
    dir_path = os.path.dirname(path)
    if dir_path:
        os.makedirs(dir_path, exist_ok=True)
    header = [f"x{j}" for j in range(points.shape[1])] + list(extra)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for i, row in enumerate(points):
            writer.writerow([repr(float(v)) for v in row] + [extra[k][i] for k in extra])


def train(cfg: TrainerConfig, data: np.ndarray, run_dir: Optional[str] = None) -> TrainResult:
    """
    Полный цикл обучения.

    Args:
        cfg: Конфигурация
        data: Настоящие данные (n, d), обычно миноритарный класс
        run_dir: Директория для выходных файлов (None - ничего не писать)

    Returns:
        TrainResult с финальным генератором и элитой

    Raises:
        TrainerArgumentError: Для пустых или некорректных данных
        TrainingError: При ошибке итерации (с номером итерации и частичной историей)
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] == 0:
        raise TrainerArgumentError(f"Нужны непустые данные формы (n, d), получено {data.shape}")
    if not np.all(np.isfinite(data)):
        raise TrainerArgumentError("Данные содержат NaN или Inf")

    streams = RandomStreams.from_seed(cfg.seed)
    state = init_state(cfg, data.shape[1], streams)
    writer = _RunWriter(run_dir) if run_dir else None

    iterations = 0 if cfg.mode is TrainMode.NONE else cfg.iterations
    logger.info("Обучение %s: %d итераций, мутации: %s", cfg.mode.value, iterations,
                ", ".join(obj.value for obj in cfg.objectives()))

    for step in range(iterations):
        try:
            state = evolve_step(state, cfg, data, streams)
        except (NDCoreError, LossError, AnnealingError, TrainerError) as e:
            if writer:
                writer.write_checkpoints(state)
            raise TrainingError(state.iteration + 1, state.history, e) from e

        record = state.history[-1]
        if writer:
            writer.append(record)
            if cfg.sample_every and record.iteration % cfg.sample_every == 0:
                writer.write_samples(GeneratorModel(state.g_spec, state.generator),
                                     record.iteration, cfg.sample_count, cfg.seed)
        if record.iteration % 100 == 0:
            logger.debug("Итерация %d: T=%.4g, F_elite=%.5f, D_loss=%.4f",
                         record.iteration, record.temperature, record.f_elite, record.d_loss)
        if cfg.patience and state.stale >= cfg.patience:
            logger.info("Элита не улучшалась %d итераций, остановка на итерации %d",
                        state.stale, record.iteration)
            break

    if writer:
        writer.write_checkpoints(state)
    return TrainResult(state.generator, state.elite, state)


class TrainerError(Exception):
    """Базовый класс ошибок тренера."""
    pass


class TrainerConfigError(TrainerError, ValueError):
    """Некорректная конфигурация обучения."""
    pass


class TrainerArgumentError(TrainerError, ValueError):
    """Некорректные аргументы операций тренера."""
    pass


class OffspringNumericError(TrainerError, ArithmeticError):
    """Нечисловые значения при обучении потомка; objective - имя мутации."""

    def __init__(self, objective: str, message: str) -> None:
        super().__init__(f"Мутация {objective}: {message}")
        self.objective = objective


class TrainingError(TrainerError):
    """Ошибка на итерации iteration; history - история до сбоя."""

    def __init__(self, iteration: int, history: Tuple[IterationRecord, ...],
                 cause: Exception) -> None:
        super().__init__(f"Итерация {iteration}: {cause}")
        self.iteration = iteration
        self.history = history
        self.cause = cause
