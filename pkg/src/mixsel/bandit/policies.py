"""Online selection loops.

Every policy shares one loop: warm-start all arms, then each round pick a
mixture alpha_t, sample I_t ~ alpha_t from the "index" stream, draw from the
chosen arm and fold the sample into the empirical objective. Policies differ
only in how alpha_t is produced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Mapping

import numpy as np
from numpy.typing import NDArray

from mixsel.assurance.logging import RunLogger
from mixsel.bandit.arms import ArmSpec, build_arm, draw_for_round
from mixsel.bandit.population import BanditEnvironment, PopulationModel
from mixsel.bandit.trace import REGRET_TOL, BanditTrace, RoundRecord
from mixsel.core.failures import INVALID_CONFIDENCE, UNSUPPORTED_OBJECTIVE, MixselError
from mixsel.core.rng import RngStreams
from mixsel.numerics.kernels import RFFMap
from mixsel.numerics.linalg import sym_eigvals
from mixsel.objectives.empirical import EmpiricalObjective, QuadraticObjective, build_objective
from mixsel.objectives.quadratic import QuadEstimate, QuadraticForm
from mixsel.objectives.spec import ObjectiveKind, ObjectiveSpec
from mixsel.solver import EGConfig, WarmStart, solve_simplex, uniform_weights


class Algorithm(str, Enum):
    MIXTURE_GREEDY = "mixture_greedy"
    MIXTURE_UCB = "mixture_ucb"
    ONE_ARM_GREEDY = "one_arm_greedy"
    EPSILON_GREEDY = "epsilon_greedy"
    MIXTURE_ORACLE = "mixture_oracle"
    ONE_ARM_ORACLE = "one_arm_oracle"


@dataclass(frozen=True)
class AlgorithmSpec:
    name: Algorithm = Algorithm.MIXTURE_GREEDY
    delta_l: float = 0.05
    c: float = 1.0
    epsilon: float = 0.1

    @property
    def label(self) -> str:
        name = Algorithm(self.name)
        if name == Algorithm.MIXTURE_UCB:
            return f"mixture_ucb_dl{self.delta_l:g}"
        if name == Algorithm.EPSILON_GREEDY:
            return f"epsilon_greedy_eps{self.epsilon:g}"
        return name.value

    def validate(self) -> "AlgorithmSpec":
        try:
            name = Algorithm(str(self.name).strip().lower())
        except ValueError as exc:
            allowed = ", ".join(a.value for a in Algorithm)
            raise ValueError(f"Invalid algorithm: {self.name}. Allowed: {allowed}") from exc
        for field_name in ("delta_l", "c", "epsilon"):
            value = getattr(self, field_name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"algorithm.{field_name} must be a finite number")
        if not 0 <= self.delta_l < 1:
            raise MixselError(INVALID_CONFIDENCE, f"delta_l must lie in [0, 1), got {self.delta_l}")
        if self.c < 0:
            raise ValueError("algorithm.c must be >= 0")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("algorithm.epsilon must lie in [0, 1]")
        return AlgorithmSpec(name=name, delta_l=float(self.delta_l), c=float(self.c), epsilon=float(self.epsilon))

    def to_dict(self) -> dict[str, Any]:
        return {"name": Algorithm(self.name).value, "delta_l": self.delta_l, "c": self.c, "epsilon": self.epsilon}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any] | str) -> "AlgorithmSpec":
        if isinstance(raw, str):
            return cls(name=raw).validate()
        if not isinstance(raw, Mapping):
            raise ValueError("algorithm must be a name or a mapping")
        defaults = cls()
        return cls(
            name=raw.get("name", defaults.name.value),
            delta_l=raw.get("delta_l", defaults.delta_l),
            c=raw.get("c", defaults.c),
            epsilon=raw.get("epsilon", defaults.epsilon),
        ).validate()


@dataclass(frozen=True)
class BanditConfig:
    arms: tuple[ArmSpec, ...]
    objective: ObjectiveSpec
    horizon: int = 500
    warm_start: int = 5
    algorithm: AlgorithmSpec = field(default_factory=AlgorithmSpec)
    eg: EGConfig = field(default_factory=EGConfig)
    seed: int = 0
    track_population: bool = True

    def validate(self) -> "BanditConfig":
        if not self.arms:
            raise ValueError("at least one arm is required")
        if isinstance(self.horizon, bool) or not isinstance(self.horizon, int) or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")
        if isinstance(self.warm_start, bool) or not isinstance(self.warm_start, int) or self.warm_start < 1:
            raise ValueError("warm_start must be an integer >= 1")
        if ObjectiveKind(self.objective.kind) == ObjectiveKind.QUADRATIC and self.warm_start < 2:
            raise ValueError("quadratic objectives need warm_start >= 2 (within-arm pairs)")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        return self


def sample_index(alpha: NDArray[np.float64], rng: np.random.Generator) -> int:
    """Inverse-CDF draw of one arm index from a single uniform."""
    u = rng.random()
    cdf = np.cumsum(alpha)
    return int(min(np.searchsorted(cdf, u, side="right"), alpha.shape[0] - 1))


def feature_map_for(cfg: BanditConfig, dim: int, streams: RngStreams) -> RFFMap | None:
    if cfg.objective.rff_pairs is None:
        return None
    return RFFMap.sample(dim, cfg.objective.rff_pairs, cfg.objective.kernel.bandwidth, streams.stream("rff"), seed=cfg.seed)


def ucb_surrogate(est: QuadEstimate, w: float, delta_l: float, c: float) -> QuadraticForm:
    """Optimistic quadratic form with Hoeffding-style per-entry bonuses (symmetrized, not projected)."""
    radius = c * math.sqrt(2.0 * math.log(1.0 / delta_l))
    bonus_matrix = radius / np.sqrt(est.pair_counts)
    bonus_arm = radius / np.sqrt(est.counts)
    matrix = est.khat - 0.5 * (bonus_matrix + bonus_matrix.T)
    # the kd cross term against the reference is taken as estimated
    linear = est.linear + w * (est.theta - bonus_arm)
    return QuadraticForm(matrix=0.5 * (matrix + matrix.T), linear=linear, offset=est.offset)


Chooser = Callable[[int, EmpiricalObjective, NDArray[np.float64]], NDArray[np.float64]]


def _start_point(cfg: BanditConfig, previous: NDArray[np.float64]) -> NDArray[np.float64]:
    if cfg.eg.warm_start == WarmStart.UNIFORM:
        return uniform_weights(previous.shape[0])
    return previous


def _run(
    cfg: BanditConfig,
    env: BanditEnvironment,
    choose: Chooser,
    *,
    logger: RunLogger,
    population: PopulationModel | None,
    feature_map: RFFMap | None,
    streams: RngStreams,
) -> BanditTrace:
    m = len(cfg.arms)
    arms = [build_arm(spec, i, streams, pool=env.pools.get(i)) for i, spec in enumerate(cfg.arms)]
    objective = build_objective(cfg.objective, m, env.dim, reference=env.reference, feature_map=feature_map)
    for i, arm in enumerate(arms):
        objective.observe_many(draw_for_round(arm, cfg.warm_start, 0, i), i)

    optimum = population.oracle.value if population is not None else math.nan
    index_rng = streams.stream("index")
    alpha = uniform_weights(m)
    cumulative = 0.0
    records: list[RoundRecord] = []
    for t in range(1, cfg.horizon + 1):
        alpha = choose(t, objective, alpha)
        emp_loss = float(objective.loss(alpha))
        arm_index = sample_index(alpha, index_rng)
        objective.observe_many(draw_for_round(arms[arm_index], 1, t, arm_index), arm_index)
        pop_loss = math.nan
        if population is not None:
            pop_loss = float(population.loss(alpha))
            gap = pop_loss - optimum
            if gap < -REGRET_TOL:
                logger.debug("regret", "below_oracle", round=t, gap=gap)
            cumulative += gap
        records.append(
            RoundRecord(
                t=t,
                arm=arm_index,
                alpha=tuple(float(v) for v in alpha),
                emp_loss=emp_loss,
                pop_loss=pop_loss,
                cum_regret=cumulative if population is not None else math.nan,
            )
        )
        logger.debug("round", "ok", round=t, arm=arm_index, emp_loss=emp_loss)

    return BanditTrace(
        algorithm=cfg.algorithm.label,
        seed=cfg.seed,
        num_arms=m,
        warm_start=cfg.warm_start,
        records=tuple(records),
        counts=tuple(int(n) for n in objective.counts),
        final_score=float(objective.realized_score()),
        oracle_value=optimum,
    )


def _greedy_chooser(cfg: BanditConfig, logger: RunLogger) -> Chooser:
    def choose(t: int, objective: EmpiricalObjective, previous: NDArray[np.float64]) -> NDArray[np.float64]:
        return solve_simplex(objective, _start_point(cfg, previous), cfg.eg, logger=logger)

    return choose


def _ucb_chooser(cfg: BanditConfig, logger: RunLogger) -> Chooser:
    spec = cfg.algorithm
    if spec.c == 0 or spec.delta_l == 0:
        return _greedy_chooser(cfg, logger)
    w = cfg.objective.fidelity_weight

    def choose(t: int, objective: EmpiricalObjective, previous: NDArray[np.float64]) -> NDArray[np.float64]:
        if not isinstance(objective, QuadraticObjective):
            raise MixselError(UNSUPPORTED_OBJECTIVE, "mixture_ucb needs a quadratic objective")
        form = ucb_surrogate(objective.estimate, w, spec.delta_l, spec.c)
        lowest = float(sym_eigvals(form.matrix)[-1])
        if lowest < 0:
            logger.debug("ucb_surrogate", "nonconvex", round=t, min_eigenvalue=lowest)
        return solve_simplex(form, _start_point(cfg, previous), cfg.eg, logger=logger)

    return choose


def _one_arm_chooser(epsilon: float) -> Chooser:
    def choose(t: int, objective: EmpiricalObjective, previous: NDArray[np.float64]) -> NDArray[np.float64]:
        m = objective.num_arms
        best = int(np.argmin(objective.arm_scores()))
        alpha = np.full(m, epsilon / m)
        alpha[best] += 1.0 - epsilon
        return alpha

    return choose


def _fixed_chooser(alpha: NDArray[np.float64]) -> Chooser:
    fixed = np.asarray(alpha, dtype=np.float64)

    def choose(t: int, objective: EmpiricalObjective, previous: NDArray[np.float64]) -> NDArray[np.float64]:
        return fixed

    return choose


def _prepare(cfg: BanditConfig, env: BanditEnvironment, *, need_population: bool):
    cfg.validate()
    streams = RngStreams(cfg.seed)
    feature_map = feature_map_for(cfg, env.dim, streams)
    population = None
    if need_population or cfg.track_population:
        population = env.population(feature_map)
    return streams, feature_map, population


def run_mixture_greedy(cfg: BanditConfig, env: BanditEnvironment, *, logger: RunLogger | None = None) -> BanditTrace:
    logger = logger or RunLogger.disabled()
    streams, feature_map, population = _prepare(cfg, env, need_population=False)
    return _run(cfg, env, _greedy_chooser(cfg, logger), logger=logger, population=population, feature_map=feature_map, streams=streams)


def run_mixture_ucb(cfg: BanditConfig, env: BanditEnvironment, *, logger: RunLogger | None = None) -> BanditTrace:
    logger = logger or RunLogger.disabled()
    if ObjectiveKind(cfg.objective.kind) != ObjectiveKind.QUADRATIC:
        raise MixselError(UNSUPPORTED_OBJECTIVE, f"mixture_ucb needs a quadratic objective, got {cfg.objective.label}")
    streams, feature_map, population = _prepare(cfg, env, need_population=False)
    return _run(cfg, env, _ucb_chooser(cfg, logger), logger=logger, population=population, feature_map=feature_map, streams=streams)


def run_one_arm(
    cfg: BanditConfig,
    env: BanditEnvironment,
    variant: str = "greedy",
    *,
    logger: RunLogger | None = None,
) -> BanditTrace:
    logger = logger or RunLogger.disabled()
    if variant == "oracle":
        streams, feature_map, population = _prepare(cfg, env, need_population=True)
        alpha = np.eye(len(cfg.arms))[population.oracle.best_arm]
        chooser = _fixed_chooser(alpha)
    elif variant in ("greedy", "epsilon"):
        streams, feature_map, population = _prepare(cfg, env, need_population=False)
        chooser = _one_arm_chooser(cfg.algorithm.epsilon if variant == "epsilon" else 0.0)
    else:
        raise ValueError(f"Unknown one-arm variant: {variant}")
    return _run(cfg, env, chooser, logger=logger, population=population, feature_map=feature_map, streams=streams)


def run_mixture_oracle(cfg: BanditConfig, env: BanditEnvironment, *, logger: RunLogger | None = None) -> BanditTrace:
    """Resamples every round from the population-optimal mixture."""
    logger = logger or RunLogger.disabled()
    streams, feature_map, population = _prepare(cfg, env, need_population=True)
    chooser = _fixed_chooser(np.asarray(population.oracle.alpha))
    return _run(cfg, env, chooser, logger=logger, population=population, feature_map=feature_map, streams=streams)


def run_bandit(cfg: BanditConfig, env: BanditEnvironment, *, logger: RunLogger | None = None) -> BanditTrace:
    logger = (logger or RunLogger.disabled()).bind(algorithm=cfg.algorithm.label, seed=cfg.seed)
    name = Algorithm(cfg.algorithm.name)
    logger.info("bandit_run", "start", horizon=cfg.horizon, arms=len(cfg.arms))
    if name == Algorithm.MIXTURE_GREEDY:
        trace = run_mixture_greedy(cfg, env, logger=logger)
    elif name == Algorithm.MIXTURE_UCB:
        trace = run_mixture_ucb(cfg, env, logger=logger)
    elif name == Algorithm.ONE_ARM_GREEDY:
        trace = run_one_arm(cfg, env, "greedy", logger=logger)
    elif name == Algorithm.EPSILON_GREEDY:
        trace = run_one_arm(cfg, env, "epsilon", logger=logger)
    elif name == Algorithm.ONE_ARM_ORACLE:
        trace = run_one_arm(cfg, env, "oracle", logger=logger)
    else:
        trace = run_mixture_oracle(cfg, env, logger=logger)
    logger.info("bandit_run", "ok", final_score=trace.final_score, counts=list(trace.counts))
    return trace


__all__ = [
    "Algorithm",
    "AlgorithmSpec",
    "BanditConfig",
    "run_bandit",
    "run_mixture_greedy",
    "run_mixture_oracle",
    "run_mixture_ucb",
    "run_one_arm",
    "sample_index",
    "ucb_surrogate",
]
