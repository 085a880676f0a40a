from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MISSING_WARM_START, MixselError
from mixsel.numerics.metrics import GaussianMoments


@dataclass(frozen=True)
class ArmMomentStats:
    """Count, mean and uncentered second moment of one arm's samples."""

    count: int
    mean: NDArray[np.float64]
    second_moment: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def covariance(self) -> NDArray[np.float64]:
        cov = self.second_moment - np.outer(self.mean, self.mean)
        return 0.5 * (cov + cov.T)

    @classmethod
    def empty(cls, dim: int) -> "ArmMomentStats":
        return cls(count=0, mean=np.zeros(dim), second_moment=np.zeros((dim, dim)))

    @classmethod
    def from_samples(cls, samples: ArrayLike) -> "ArmMomentStats":
        arr = np.asarray(samples, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] == 0:
            raise MixselError(EMPTY_INPUT, "arm statistics need at least one sample")
        n = arr.shape[0]
        second = arr.T @ arr / n
        return cls(count=n, mean=arr.mean(axis=0), second_moment=0.5 * (second + second.T))

    @classmethod
    def from_gaussian(cls, mean: ArrayLike, cov: ArrayLike) -> "ArmMomentStats":
        """Exact population moments of N(mean, cov); count is nominal."""
        mu = np.asarray(mean, dtype=np.float64)
        sigma = np.asarray(cov, dtype=np.float64)
        second = sigma + np.outer(mu, mu)
        return cls(count=1, mean=mu, second_moment=0.5 * (second + second.T))

    def update(self, x: ArrayLike) -> "ArmMomentStats":
        xv = np.asarray(x, dtype=np.float64).ravel()
        if xv.shape[0] != self.dim:
            raise MixselError(DIM_MISMATCH, f"sample has dimension {xv.shape[0]}, expected {self.dim}")
        n = self.count + 1
        mean = self.mean + (xv - self.mean) / n
        second = self.second_moment + (np.outer(xv, xv) - self.second_moment) / n
        return ArmMomentStats(count=n, mean=mean, second_moment=second)


class MomentAccumulator:
    """Single-writer running sums behind ArmMomentStats snapshots."""

    def __init__(self, dim: int) -> None:
        self.dim = dim
        self.count = 0
        self._sum = np.zeros(dim)
        self._outer = np.zeros((dim, dim))

    def add_many(self, samples: NDArray[np.float64]) -> None:
        if samples.ndim != 2 or samples.shape[1] != self.dim:
            raise MixselError(DIM_MISMATCH, f"expected samples of dimension {self.dim}, got shape {samples.shape}")
        self.count += samples.shape[0]
        self._sum += samples.sum(axis=0)
        self._outer += samples.T @ samples

    def snapshot(self) -> ArmMomentStats:
        if self.count == 0:
            return ArmMomentStats.empty(self.dim)
        second = self._outer / self.count
        return ArmMomentStats(
            count=self.count,
            mean=self._sum / self.count,
            second_moment=0.5 * (second + second.T),
        )


def check_simplex(alpha: ArrayLike, num_arms: int, *, tol: float = 1e-9) -> NDArray[np.float64]:
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    if weights.shape[0] != num_arms:
        raise MixselError(DIM_MISMATCH, f"mixture has {weights.shape[0]} weights for {num_arms} arms")
    if np.any(weights < -tol) or abs(float(weights.sum()) - 1.0) > tol:
        raise ValueError("mixture weights must lie on the simplex")
    return weights


def _require_warm(stats: Sequence[ArmMomentStats]) -> None:
    if not stats:
        raise MixselError(EMPTY_INPUT, "no arm statistics")
    for i, arm in enumerate(stats):
        if arm.count < 1:
            raise MixselError(MISSING_WARM_START, f"arm {i} has no samples")


def mixture_moments(alpha: ArrayLike, stats: Sequence[ArmMomentStats]) -> GaussianMoments:
    _require_warm(stats)
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    if weights.shape[0] != len(stats):
        raise MixselError(DIM_MISMATCH, f"mixture has {weights.shape[0]} weights for {len(stats)} arms")
    means = np.stack([arm.mean for arm in stats])
    seconds = np.stack([arm.second_moment for arm in stats])
    mu = weights @ means
    second = np.tensordot(weights, seconds, axes=1)
    cov = second - np.outer(mu, mu)
    return GaussianMoments(mean=mu, cov=0.5 * (cov + cov.T))


@dataclass(frozen=True)
class FidelityStats:
    """Per-arm running means of a bounded fidelity functional."""

    counts: NDArray[np.int64]
    sums: NDArray[np.float64]

    @classmethod
    def empty(cls, num_arms: int) -> "FidelityStats":
        return cls(counts=np.zeros(num_arms, dtype=np.int64), sums=np.zeros(num_arms))

    @property
    def theta(self) -> NDArray[np.float64]:
        return np.divide(self.sums, self.counts, out=np.zeros_like(self.sums), where=self.counts > 0)

    def update(self, arm: int, values: ArrayLike) -> "FidelityStats":
        vals = np.atleast_1d(np.asarray(values, dtype=np.float64))
        counts = self.counts.copy()
        sums = self.sums.copy()
        counts[arm] += vals.shape[0]
        sums[arm] += float(vals.sum())
        return FidelityStats(counts=counts, sums=sums)


__all__ = [
    "ArmMomentStats",
    "FidelityStats",
    "MomentAccumulator",
    "check_simplex",
    "mixture_moments",
]
