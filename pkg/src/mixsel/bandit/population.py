"""Population-level objectives and the oracles computed from them.

For synthetic arms the population objective is the plug-in objective of a
large frozen sample (or the exact Gaussian moments for the Frechet family);
for file-backed arms it is the plug-in objective of the whole pool.

Two families switch estimator once the frozen sample is large: quadratic
objectives average shifted pairings instead of every pair, and the kernel
log-Vendi objective goes through the kernel's feature map (random Fourier
features for the gaussian kernel) instead of the pooled Gram.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.assurance.logging import RunLogger
from mixsel.bandit.arms import ArmSpec, is_exact_gaussian, population_sample
from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MixselError
from mixsel.core.rng import RngStreams
from mixsel.numerics.kernels import KernelKind, RFFMap
from mixsel.objectives.empirical import (
    EmpiricalObjective,
    QuadraticObjective,
    ReferenceSet,
    VendiKernelFeatureObjective,
    build_objective,
)
from mixsel.objectives.quadratic import DEFAULT_PAIR_SHIFTS
from mixsel.objectives.spec import ObjectiveKind, ObjectiveSpec
from mixsel.objectives.stats import ArmMomentStats
from mixsel.solver import MAX_BRUTE_FORCE_ARMS, EGConfig, WarmStart, brute_force_simplex, solve_simplex, uniform_weights

DEFAULT_POPULATION_SIZE = 100_000
DEFAULT_POPULATION_RFF_PAIRS = 256
# per arm; quadratic blocks use every pair up to this size
EXACT_PAIR_LIMIT = 2_000
# pooled rows; the kernel log-Vendi objective uses the exact Gram up to this size
POPULATION_GRAM_LIMIT = 3_000
CHUNK_SIZE = 10_000
ORACLE_MIN_STEPS = 500
DEFAULT_ORACLE_RESOLUTION = 50


class PopulationMethod(str, Enum):
    EXACT_MOMENTS = "exact_moments"
    PLUG_IN = "plug_in"
    SHIFTED_PAIRS = "shifted_pairs"
    KERNEL_FEATURES = "kernel_features"


@dataclass(frozen=True)
class OracleResult:
    alpha: tuple[float, ...]
    value: float
    arm_scores: tuple[float, ...]
    eg_alpha: tuple[float, ...]
    eg_value: float
    grid_alpha: tuple[float, ...] | None = None
    grid_value: float | None = None

    @property
    def best_arm(self) -> int:
        return int(np.argmin(self.arm_scores))

    @property
    def best_arm_value(self) -> float:
        return float(min(self.arm_scores))

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": list(self.alpha),
            "value": self.value,
            "arm_scores": list(self.arm_scores),
            "best_arm": self.best_arm,
            "eg_alpha": list(self.eg_alpha),
            "eg_value": self.eg_value,
            "grid_alpha": list(self.grid_alpha) if self.grid_alpha is not None else None,
            "grid_value": self.grid_value,
        }


def mixture_oracle(
    objective: EmpiricalObjective,
    eg: EGConfig | None = None,
    *,
    resolution: int = DEFAULT_ORACLE_RESOLUTION,
    logger: RunLogger | None = None,
) -> OracleResult:
    """Best fixed mixture of a population objective.

    The EG solution is cross-checked on the simplex grid when there are few
    enough arms; the lower of the two is reported as alpha*.
    """
    eg = eg or EGConfig()
    m = objective.num_arms
    cfg = EGConfig(stepsize=eg.stepsize, steps=max(eg.steps, ORACLE_MIN_STEPS), warm_start=WarmStart.UNIFORM, decay=eg.decay)
    eg_alpha = solve_simplex(objective, uniform_weights(m), cfg, logger=logger)
    eg_value = objective.loss(eg_alpha)
    scores = tuple(float(s) for s in objective.arm_scores())
    alpha, value = eg_alpha, eg_value
    grid_alpha = grid_value = None
    if resolution > 0 and m <= MAX_BRUTE_FORCE_ARMS:
        grid_point, grid_value = brute_force_simplex(objective, m, resolution)
        grid_alpha = tuple(float(v) for v in grid_point)
        if grid_value < value:
            alpha, value = grid_point, grid_value
    return OracleResult(
        alpha=tuple(float(v) for v in alpha),
        value=float(value),
        arm_scores=scores,
        eg_alpha=tuple(float(v) for v in eg_alpha),
        eg_value=float(eg_value),
        grid_alpha=grid_alpha,
        grid_value=grid_value,
    )


def one_arm_oracle(objective: EmpiricalObjective) -> tuple[int, NDArray[np.float64]]:
    scores = objective.arm_scores()
    return int(np.argmin(scores)), scores


@dataclass(frozen=True)
class PopulationModel:
    objective: EmpiricalObjective
    oracle: OracleResult

    def loss(self, alpha: ArrayLike) -> float:
        return self.objective.loss(alpha)


class BanditEnvironment:
    """Inputs shared by every replicate run of one instance.

    Population samples are drawn once from a fixed population seed; population
    models are cached per random-feature map so replicate threads share them.
    """

    def __init__(
        self,
        arms: Sequence[ArmSpec],
        objective: ObjectiveSpec,
        *,
        reference: ReferenceSet | None = None,
        pools: Mapping[int, ArrayLike] | None = None,
        population_size: int | None = None,
        population_seed: int = 0,
        population_rff_pairs: int = DEFAULT_POPULATION_RFF_PAIRS,
        eg: EGConfig | None = None,
        oracle_resolution: int = DEFAULT_ORACLE_RESOLUTION,
        logger: RunLogger | None = None,
    ) -> None:
        if not arms:
            raise MixselError(EMPTY_INPUT, "at least one arm is required")
        self.arms = tuple(arms)
        self.objective = objective
        self.reference = reference
        self.pools = {int(k): np.asarray(v, dtype=np.float64) for k, v in (pools or {}).items()}
        if population_rff_pairs < 1:
            raise ValueError("population_rff_pairs must be >= 1")
        self.population_size = population_size or DEFAULT_POPULATION_SIZE
        self.population_seed = population_seed
        self.population_rff_pairs = population_rff_pairs
        self.eg = eg or EGConfig()
        self.oracle_resolution = oracle_resolution
        self.logger = logger or RunLogger.disabled()
        self.dim = self._resolve_dim()
        self._samples: list[NDArray[np.float64]] | None = None
        self._models: dict[Any, PopulationModel] = {}
        self._lock = threading.Lock()

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    def _resolve_dim(self) -> int:
        dims = set()
        for i, spec in enumerate(self.arms):
            if spec.dim is not None:
                dims.add(spec.dim)
            elif i in self.pools:
                dims.add(int(self.pools[i].shape[1]))
            else:
                raise MixselError(EMPTY_INPUT, f"arm {i} is file-backed but no pool was loaded")
        if self.reference is not None:
            dims.add(self.reference.dim)
        if len(dims) != 1:
            raise MixselError(DIM_MISMATCH, f"arms and reference disagree on dimension: {sorted(dims)}")
        return dims.pop()

    def _exact_moments(self) -> list[ArmMomentStats] | None:
        if ObjectiveKind(self.objective.kind) != ObjectiveKind.FD or self.objective.fidelity_weight > 0:
            return None
        if not all(is_exact_gaussian(spec) for spec in self.arms):
            return None
        return [ArmMomentStats.from_gaussian(spec.mean, spec.cov) for spec in self.arms]

    def arm_population_sizes(self) -> tuple[int, ...]:
        sizes = []
        for i in range(self.num_arms):
            pool = self.pools.get(i)
            sizes.append(self.population_size if pool is None else min(self.population_size, int(pool.shape[0])))
        return tuple(sizes)

    def population_method(self) -> PopulationMethod:
        if self._exact_moments() is not None:
            return PopulationMethod.EXACT_MOMENTS
        kind = ObjectiveKind(self.objective.kind)
        sizes = self.arm_population_sizes()
        if kind == ObjectiveKind.QUADRATIC and max(sizes) > EXACT_PAIR_LIMIT:
            return PopulationMethod.SHIFTED_PAIRS
        if kind == ObjectiveKind.NLV_KERNEL and sum(sizes) > POPULATION_GRAM_LIMIT:
            return PopulationMethod.KERNEL_FEATURES
        return PopulationMethod.PLUG_IN

    def describe(self) -> dict[str, Any]:
        """How the population objective is formed; recorded in run manifests."""
        method = self.population_method()
        uses_rff = method == PopulationMethod.KERNEL_FEATURES and self.objective.kernel.kind == KernelKind.GAUSSIAN
        return {
            "method": method.value,
            "seed": self.population_seed,
            "size_per_arm": None if method == PopulationMethod.EXACT_MOMENTS else list(self.arm_population_sizes()),
            "pair_shifts": DEFAULT_PAIR_SHIFTS if method == PopulationMethod.SHIFTED_PAIRS else None,
            "rff_pairs": self.population_rff_pairs if uses_rff else None,
        }

    def population_samples(self) -> list[NDArray[np.float64]]:
        if self._samples is None:
            streams = RngStreams(self.population_seed)
            self._samples = [
                population_sample(spec, i, streams, self.population_size, pool=self.pools.get(i))
                for i, spec in enumerate(self.arms)
            ]
        return self._samples

    def _kernel_feature_map(self) -> RFFMap | None:
        kernel = self.objective.kernel
        if kernel.kind != KernelKind.GAUSSIAN:
            return None
        rng = RngStreams(self.population_seed).stream("population:rff")
        return RFFMap.sample(self.dim, self.population_rff_pairs, float(kernel.bandwidth), rng, seed=self.population_seed)

    def _observe(self, objective: EmpiricalObjective) -> None:
        for i, sample in enumerate(self.population_samples()):
            for start in range(0, sample.shape[0], CHUNK_SIZE):
                objective.observe_many(sample[start : start + CHUNK_SIZE], i)

    def _build(self, feature_map: RFFMap | None) -> PopulationModel:
        method = self.population_method()
        if method == PopulationMethod.EXACT_MOMENTS:
            objective = build_objective(
                self.objective, self.num_arms, self.dim, reference=self.reference, fixed_stats=self._exact_moments()
            )
        elif method == PopulationMethod.KERNEL_FEATURES:
            objective = VendiKernelFeatureObjective(
                self.objective, self.num_arms, self.dim, reference=self.reference, feature_map=self._kernel_feature_map()
            )
            self._observe(objective)
        else:
            objective = build_objective(self.objective, self.num_arms, self.dim, reference=self.reference, feature_map=feature_map)
            if method == PopulationMethod.SHIFTED_PAIRS and isinstance(objective, QuadraticObjective):
                objective.observe_population(self.population_samples())
            else:
                self._observe(objective)
        oracle = mixture_oracle(
            objective, self.eg, resolution=self.oracle_resolution, logger=self.logger.bind(population=method.value)
        )
        return PopulationModel(objective=objective, oracle=oracle)

    def population(self, feature_map: RFFMap | None = None) -> PopulationModel:
        key = None if feature_map is None else (feature_map.seed, feature_map.num_pairs, feature_map.bandwidth)
        with self._lock:
            model = self._models.get(key)
            if model is None:
                model = self._build(feature_map)
                self._models[key] = model
            return model


def population_value(model: PopulationModel | None, alpha: ArrayLike) -> float:
    return math.nan if model is None else float(model.loss(alpha))


__all__ = [
    "BanditEnvironment",
    "DEFAULT_POPULATION_RFF_PAIRS",
    "DEFAULT_POPULATION_SIZE",
    "OracleResult",
    "PopulationMethod",
    "PopulationModel",
    "mixture_oracle",
    "one_arm_oracle",
    "population_value",
]
