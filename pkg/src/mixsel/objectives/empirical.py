"""Stateful plug-in objectives driven by the bandit loop.

Each objective is a single writer over its arm statistics: ``observe`` folds
new samples in, ``loss``/``gradient`` evaluate the current plug-in estimate.
A population objective is the same class fed a large frozen sample (or exact
moments for the Frechet family).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import (
    DIM_MISMATCH,
    INCONSISTENT_STATE,
    MISSING_WARM_START,
    NOT_NORMALIZED,
    UNSUPPORTED_OBJECTIVE,
    MixselError,
)
from mixsel.numerics.kernels import KernelKind, RFFMap, rff_embed, unit_rows
from mixsel.numerics.metrics import GaussianMoments, moments_of
from mixsel.objectives.fidelity import ReferenceMiss
from mixsel.objectives.frechet import FrechetReference, fd_gradient, fd_loss
from mixsel.objectives.quadratic import (
    DEFAULT_PAIR_SHIFTS,
    QuadEstimate,
    QuadMode,
    quad_estimate_from_samples,
    quad_estimate_update,
    quad_gradient,
    quad_loss,
)
from mixsel.objectives.quadratic import rke_feature_gradient, rke_feature_loss
from mixsel.objectives.spec import ObjectiveKind, ObjectiveSpec
from mixsel.objectives.stats import ArmMomentStats, FidelityStats, MomentAccumulator
from mixsel.objectives.vendi import (
    PooledKernelBuilder,
    PooledKernelState,
    nlv_gradient_features,
    nlv_gradient_kernel,
    nlv_gradient_moments,
    nlv_loss_features,
    nlv_loss_kernel,
    nlv_loss_moments,
)

UNIT_NORM_TOL = 1e-6
FIDELITY_CHUNK = 10_000


@dataclass(frozen=True)
class ReferenceSet:
    """Frozen real-data embeddings and their moments."""

    samples: NDArray[np.float64]
    moments: GaussianMoments

    @classmethod
    def from_samples(cls, samples: ArrayLike) -> "ReferenceSet":
        arr = np.asarray(samples, dtype=np.float64)
        arr.setflags(write=False)
        return cls(samples=arr, moments=moments_of(arr))

    @property
    def dim(self) -> int:
        return int(self.samples.shape[1])


class EmpiricalObjective(ABC):
    kind: ObjectiveKind

    def __init__(
        self,
        spec: ObjectiveSpec,
        num_arms: int,
        dim: int,
        *,
        reference: ReferenceSet | None = None,
        feature_map: RFFMap | None = None,
    ) -> None:
        if num_arms < 1:
            raise ValueError("at least one arm is required")
        if reference is not None and reference.dim != dim:
            raise MixselError(DIM_MISMATCH, f"reference has dimension {reference.dim}, arms have {dim}")
        if spec.needs_reference and reference is None:
            raise ValueError(f"objective {spec.label} requires a real reference set")
        self.spec = spec
        self.num_arms = num_arms
        self.dim = dim
        self.reference = reference
        self.feature_map = feature_map
        self._counts = np.zeros(num_arms, dtype=np.int64)
        self._fidelity = FidelityStats.empty(num_arms)
        self._psi: Callable[[ArrayLike], NDArray[np.float64]] | None = None
        if spec.fidelity_weight > 0:
            self._psi = ReferenceMiss(reference.samples, spec.fidelity_tau)

    @property
    def counts(self) -> NDArray[np.int64]:
        return self._counts.copy()

    @property
    def theta(self) -> NDArray[np.float64]:
        return self._fidelity.theta

    @property
    def feature_dim(self) -> int:
        return self.feature_map.dim_out if self.feature_map is not None else self.dim

    def observe(self, x: ArrayLike, arm: int) -> None:
        self.observe_many(np.asarray(x, dtype=np.float64).reshape(1, -1), arm)

    def observe_many(self, samples: ArrayLike, arm: int) -> None:
        batch = np.asarray(samples, dtype=np.float64)
        if batch.ndim == 1:
            batch = batch[np.newaxis, :]
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise MixselError(DIM_MISMATCH, f"expected samples of dimension {self.dim}, got shape {batch.shape}")
        if not 0 <= arm < self.num_arms:
            raise MixselError(INCONSISTENT_STATE, f"arm {arm} out of range for {self.num_arms} arms")
        if batch.shape[0] == 0:
            return
        features = self._embed(batch)
        self._check_features(features)
        fidelity = self._psi(batch) if self._psi is not None else None
        if fidelity is not None:
            self._fidelity = self._fidelity.update(arm, fidelity)
        self._counts[arm] += batch.shape[0]
        self._ingest(features, arm, fidelity)

    def _embed(self, batch: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.feature_map is None:
            return batch
        return rff_embed(self.feature_map, batch)

    def _check_features(self, features: NDArray[np.float64]) -> None:
        return None

    def _require_warm(self) -> None:
        empty = np.flatnonzero(self._counts == 0)
        if empty.size:
            raise MixselError(MISSING_WARM_START, f"arm {int(empty[0])} has no samples")

    def _fidelity_term(self) -> NDArray[np.float64] | None:
        if self.spec.fidelity_weight <= 0:
            return None
        return self.spec.fidelity_weight * self._fidelity.theta

    def loss(self, alpha: ArrayLike) -> float:
        self._require_warm()
        a = np.asarray(alpha, dtype=np.float64).ravel()
        value = self._base_loss(a)
        extra = self._fidelity_term()
        return value if extra is None else value + float(extra @ a)

    def gradient(self, alpha: ArrayLike) -> NDArray[np.float64]:
        self._require_warm()
        a = np.asarray(alpha, dtype=np.float64).ravel()
        grad = self._base_gradient(a)
        extra = self._fidelity_term()
        return grad if extra is None else grad + extra

    def arm_scores(self) -> NDArray[np.float64]:
        """Standalone objective value of each single arm."""
        return np.array([self.loss(np.eye(self.num_arms)[i]) for i in range(self.num_arms)])

    def realized_weights(self) -> NDArray[np.float64]:
        total = int(self._counts.sum())
        if total == 0:
            raise MixselError(MISSING_WARM_START, "no samples observed")
        return self._counts / total

    def realized_score(self) -> float:
        """Objective of the accumulated sample set (alpha = empirical pull frequencies)."""
        weights = self.realized_weights()
        value = self._base_loss(weights)
        extra = self._fidelity_term()
        return value if extra is None else value + float(extra @ weights)

    @abstractmethod
    def _ingest(self, features: NDArray[np.float64], arm: int, fidelity: NDArray[np.float64] | None) -> None: ...

    @abstractmethod
    def _base_loss(self, alpha: NDArray[np.float64]) -> float: ...

    @abstractmethod
    def _base_gradient(self, alpha: NDArray[np.float64]) -> NDArray[np.float64]: ...


class _MomentObjective(EmpiricalObjective):
    """Shared storage for the families that only need per-arm moments."""

    unit_norm_features = False

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None, fixed_stats=None) -> None:
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map)
        self._acc = [MomentAccumulator(self.feature_dim) for _ in range(num_arms)]
        self._snapshot: tuple[ArmMomentStats, ...] | None = None
        self._fixed = tuple(fixed_stats) if fixed_stats is not None else None
        if self._fixed is not None:
            if len(self._fixed) != num_arms:
                raise MixselError(DIM_MISMATCH, "one fixed moment set per arm is required")
            self._counts[:] = 1

    def _check_features(self, features) -> None:
        if self._fixed is not None:
            raise MixselError(INCONSISTENT_STATE, "objective with exact moments does not accept samples")
        if self.unit_norm_features:
            norms = np.linalg.norm(features, axis=1)
            if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOL):
                raise MixselError(NOT_NORMALIZED, f"{self.spec.label} needs unit-norm embeddings (or rff_pairs)")

    def _ingest(self, features, arm, fidelity) -> None:
        self._acc[arm].add_many(features)
        self._snapshot = None

    def stats(self) -> tuple[ArmMomentStats, ...]:
        if self._fixed is not None:
            return self._fixed
        if self._snapshot is None:
            self._snapshot = tuple(acc.snapshot() for acc in self._acc)
        return self._snapshot

    def second_moments(self) -> NDArray[np.float64]:
        return np.stack([arm.second_moment for arm in self.stats()])


class FrechetObjective(_MomentObjective):
    kind = ObjectiveKind.FD

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None, fixed_stats=None) -> None:
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map, fixed_stats=fixed_stats)
        self._ref = FrechetReference.from_moments(reference.moments, floor=spec.reference_floor)

    def _base_loss(self, alpha):
        return fd_loss(alpha, self.stats(), self._ref)

    def _base_gradient(self, alpha):
        return fd_gradient(alpha, self.stats(), self._ref, clamp=self.spec.eig_clamp)


class VendiFeatureObjective(_MomentObjective):
    """Negative log-Vendi over unit-norm features.

    While the pool is no larger than the feature dimension the loss is taken
    on the pooled Gram side; afterwards only per-arm second moments are kept.
    """

    kind = ObjectiveKind.NLV_FEATURES
    unit_norm_features = True

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None, fixed_stats=None) -> None:
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map, fixed_stats=fixed_stats)
        self._pool: PooledKernelBuilder | None = PooledKernelBuilder(num_arms, self.feature_dim)

    def _ingest(self, features, arm, fidelity) -> None:
        super()._ingest(features, arm, fidelity)
        if self._pool is not None:
            if self._pool.size + features.shape[0] <= self.feature_dim:
                self._pool.add_many(features, arm)
            else:
                self._pool = None

    def pooled(self) -> PooledKernelState | None:
        return self._pool.snapshot() if self._pool is not None and self._pool.size else None

    def _base_loss(self, alpha):
        pooled = self.pooled()
        if pooled is not None:
            return nlv_loss_features(alpha, pooled)
        return nlv_loss_moments(alpha, self.second_moments())

    def _base_gradient(self, alpha):
        pooled = self.pooled()
        if pooled is not None:
            return nlv_gradient_features(alpha, pooled, clamp=self.spec.eig_clamp, q_min=self.spec.q_min)
        return nlv_gradient_moments(alpha, self.second_moments(), clamp=self.spec.eig_clamp)


class RKEFeatureObjective(_MomentObjective):
    kind = ObjectiveKind.RKE_FEATURES
    unit_norm_features = True

    def _base_loss(self, alpha):
        return rke_feature_loss(alpha, self.stats())

    def _base_gradient(self, alpha):
        return rke_feature_gradient(alpha, self.stats())


class VendiKernelObjective(EmpiricalObjective):
    kind = ObjectiveKind.NLV_KERNEL

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None) -> None:
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map)
        self._pool = PooledKernelBuilder(num_arms, dim, kernel=spec.kernel)
        self._snapshot: PooledKernelState | None = None

    def _ingest(self, features, arm, fidelity) -> None:
        self._pool.add_many(features, arm)
        self._snapshot = None

    def pooled(self) -> PooledKernelState:
        if self._snapshot is None:
            self._snapshot = self._pool.snapshot()
        return self._snapshot

    def _base_loss(self, alpha):
        return nlv_loss_kernel(alpha, self.pooled())

    def _base_gradient(self, alpha):
        return nlv_gradient_kernel(alpha, self.pooled(), clamp=self.spec.eig_clamp, q_min=self.spec.q_min)


class VendiKernelFeatureObjective(VendiFeatureObjective):
    """Kernel log-Vendi taken through an explicit feature map of the kernel.

    The gaussian kernel goes through random Fourier features and the cosine
    kernel through unit-normalized rows, so a large sample only costs per-arm
    second moments instead of a pooled Gram.
    """

    kind = ObjectiveKind.NLV_KERNEL

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None) -> None:
        if feature_map is None and spec.kernel.kind == KernelKind.GAUSSIAN:
            raise MixselError(UNSUPPORTED_OBJECTIVE, "the gaussian kernel needs a random feature map")
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map)

    def _embed(self, batch):
        if self.feature_map is None:
            return unit_rows(batch)
        return super()._embed(batch)


class QuadraticObjective(EmpiricalObjective):
    kind = ObjectiveKind.QUADRATIC

    def __init__(self, spec, num_arms, dim, *, reference=None, feature_map=None) -> None:
        super().__init__(spec, num_arms, dim, reference=reference, feature_map=feature_map)
        real = reference.samples if spec.quad_mode == QuadMode.KD else None
        self._est = QuadEstimate.empty(spec.quad_mode, spec.kernel, num_arms, dim, real=real)

    @property
    def estimate(self) -> QuadEstimate:
        return self._est

    def _ingest(self, features, arm, fidelity) -> None:
        self._est = quad_estimate_update(self._est, features, arm, fidelity=fidelity)

    def observe_population(self, samples: Sequence[ArrayLike], *, shifts: int = DEFAULT_PAIR_SHIFTS) -> None:
        """Loads one large frozen sample per arm through shifted pairings instead of all pairs."""
        if self._counts.any():
            raise MixselError(INCONSISTENT_STATE, "population samples must be loaded into an empty objective")
        batches = [np.asarray(s, dtype=np.float64) for s in samples]
        if len(batches) != self.num_arms:
            raise MixselError(DIM_MISMATCH, f"expected {self.num_arms} arm samples, got {len(batches)}")
        fidelity: list[NDArray[np.float64] | None] = [None] * self.num_arms
        if self._psi is not None:
            fidelity = [
                np.concatenate([self._psi(b[start : start + FIDELITY_CHUNK]) for start in range(0, b.shape[0], FIDELITY_CHUNK)])
                for b in batches
            ]
        real = self.reference.samples if self.spec.quad_mode == QuadMode.KD else None
        self._est = quad_estimate_from_samples(
            self.spec.quad_mode, self.spec.kernel, batches, real=real, fidelity=fidelity, shifts=shifts
        )
        for arm, values in enumerate(fidelity):
            if values is not None:
                self._fidelity = self._fidelity.update(arm, values)
        self._counts[:] = [b.shape[0] for b in batches]

    def _fidelity_term(self):
        # the estimate already folds w * theta into its linear term
        return None

    def _base_loss(self, alpha):
        return quad_loss(alpha, self._est, self.spec.fidelity_weight)

    def _base_gradient(self, alpha):
        return quad_gradient(alpha, self._est, self.spec.fidelity_weight)


_OBJECTIVES: dict[ObjectiveKind, type[EmpiricalObjective]] = {
    ObjectiveKind.FD: FrechetObjective,
    ObjectiveKind.NLV_KERNEL: VendiKernelObjective,
    ObjectiveKind.NLV_FEATURES: VendiFeatureObjective,
    ObjectiveKind.QUADRATIC: QuadraticObjective,
    ObjectiveKind.RKE_FEATURES: RKEFeatureObjective,
}


def build_objective(
    spec: ObjectiveSpec,
    num_arms: int,
    dim: int,
    *,
    reference: ReferenceSet | None = None,
    feature_map: RFFMap | None = None,
    fixed_stats: Sequence[ArmMomentStats] | None = None,
) -> EmpiricalObjective:
    try:
        cls = _OBJECTIVES[ObjectiveKind(spec.kind)]
    except (KeyError, ValueError) as exc:
        raise MixselError(UNSUPPORTED_OBJECTIVE, f"unknown objective kind {spec.kind!r}") from exc
    if feature_map is not None and cls not in (VendiFeatureObjective, RKEFeatureObjective):
        raise MixselError(UNSUPPORTED_OBJECTIVE, f"objective {spec.label} does not take a feature map")
    if fixed_stats is not None:
        if not issubclass(cls, _MomentObjective):
            raise MixselError(UNSUPPORTED_OBJECTIVE, f"objective {spec.label} cannot use exact moments")
        return cls(spec, num_arms, dim, reference=reference, feature_map=feature_map, fixed_stats=fixed_stats)
    return cls(spec, num_arms, dim, reference=reference, feature_map=feature_map)


__all__ = [
    "EmpiricalObjective",
    "FrechetObjective",
    "QuadraticObjective",
    "RKEFeatureObjective",
    "ReferenceSet",
    "VendiFeatureObjective",
    "VendiKernelFeatureObjective",
    "VendiKernelObjective",
    "build_objective",
]
