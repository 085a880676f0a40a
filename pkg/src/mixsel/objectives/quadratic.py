from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import DIM_MISMATCH, MISSING_WARM_START, MixselError
from mixsel.numerics.kernels import KernelSpec, cross_gram, paired_kernel
from mixsel.numerics.linalg import as_symmetric, psd_project
from mixsel.objectives.stats import ArmMomentStats

DEFAULT_PAIR_SHIFTS = 32


class QuadMode(str, Enum):
    KD = "kd"
    INV_RKE = "inv_rke"


@dataclass(frozen=True)
class QuadraticForm:
    """alpha^T A alpha + c^T alpha + offset."""

    matrix: NDArray[np.float64]
    linear: NDArray[np.float64]
    offset: float = 0.0

    def loss(self, alpha: ArrayLike) -> float:
        a = np.asarray(alpha, dtype=np.float64).ravel()
        return float(a @ self.matrix @ a + self.linear @ a + self.offset)

    def gradient(self, alpha: ArrayLike) -> NDArray[np.float64]:
        a = np.asarray(alpha, dtype=np.float64).ravel()
        return 2.0 * self.matrix @ a + self.linear


@dataclass(frozen=True)
class QuadEstimate:
    """Running pair averages behind the quadratic mixture objective.

    Off-diagonal blocks average over all cross-arm pairs, diagonal blocks over
    unordered distinct pairs. ``linear_sums`` carries the kd cross term against
    the real set and ``fidelity_sums`` the per-arm fidelity values.
    """

    mode: QuadMode
    kernel: KernelSpec
    samples: tuple[NDArray[np.float64], ...]
    pair_sums: NDArray[np.float64]
    pair_counts: NDArray[np.int64]
    linear_sums: NDArray[np.float64]
    fidelity_sums: NDArray[np.float64]
    offset: float = 0.0
    real: NDArray[np.float64] | None = None

    @property
    def num_arms(self) -> int:
        return len(self.samples)

    @property
    def counts(self) -> NDArray[np.int64]:
        return np.array([s.shape[0] for s in self.samples], dtype=np.int64)

    @classmethod
    def empty(
        cls,
        mode: QuadMode | str,
        kernel: KernelSpec,
        num_arms: int,
        dim: int,
        *,
        real: ArrayLike | None = None,
    ) -> "QuadEstimate":
        mode = QuadMode(mode)
        real_arr = None
        offset = 0.0
        if mode == QuadMode.KD:
            if real is None:
                raise ValueError("kd mode requires a real reference set")
            real_arr = np.asarray(real, dtype=np.float64)
            if real_arr.ndim != 2 or real_arr.shape[1] != dim:
                raise MixselError(DIM_MISMATCH, f"real set must be n x {dim}")
            offset = _distinct_pair_mean(cross_gram(kernel, real_arr, real_arr))
        return cls(
            mode=mode,
            kernel=kernel,
            samples=tuple(np.zeros((0, dim)) for _ in range(num_arms)),
            pair_sums=np.zeros((num_arms, num_arms)),
            pair_counts=np.zeros((num_arms, num_arms), dtype=np.int64),
            linear_sums=np.zeros(num_arms),
            fidelity_sums=np.zeros(num_arms),
            offset=offset,
            real=real_arr,
        )

    @property
    def khat(self) -> NDArray[np.float64]:
        if np.any(self.pair_counts < 1):
            raise MixselError(MISSING_WARM_START, "quadratic estimate has arm pairs without samples")
        k = self.pair_sums / self.pair_counts
        return 0.5 * (k + k.T)

    @property
    def linear(self) -> NDArray[np.float64]:
        counts = self.counts
        return np.divide(self.linear_sums, counts, out=np.zeros(self.num_arms), where=counts > 0)

    @property
    def theta(self) -> NDArray[np.float64]:
        counts = self.counts
        return np.divide(self.fidelity_sums, counts, out=np.zeros(self.num_arms), where=counts > 0)

    def form(self, w: float = 0.0) -> QuadraticForm:
        return QuadraticForm(
            matrix=psd_project(self.khat),
            linear=self.linear + w * self.theta,
            offset=self.offset,
        )


def _distinct_pair_mean(matrix: NDArray[np.float64]) -> float:
    n = matrix.shape[0]
    if n < 2:
        return float(np.mean(np.diag(matrix)))
    return float((matrix.sum() - np.trace(matrix)) / (n * (n - 1)))


def quad_estimate_update(
    est: QuadEstimate,
    samples: ArrayLike,
    arm: int,
    *,
    fidelity: ArrayLike | None = None,
) -> QuadEstimate:
    """Fold one sample (or a batch from one arm) into the pair averages."""
    batch = np.asarray(samples, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[np.newaxis, :]
    dim = est.samples[arm].shape[1]
    if batch.ndim != 2 or batch.shape[1] != dim:
        raise MixselError(DIM_MISMATCH, f"expected samples of dimension {dim}, got shape {batch.shape}")
    power = 2 if est.mode == QuadMode.INV_RKE else 1

    pair_sums = est.pair_sums.copy()
    pair_counts = est.pair_counts.copy()
    k = batch.shape[0]
    for other, existing in enumerate(est.samples):
        if existing.shape[0] == 0:
            continue
        block = cross_gram(est.kernel, batch, existing) ** power
        total = float(block.sum())
        if other == arm:
            pair_sums[arm, arm] += total
            pair_counts[arm, arm] += k * existing.shape[0]
        else:
            pair_sums[arm, other] += total
            pair_sums[other, arm] += total
            pair_counts[arm, other] += k * existing.shape[0]
            pair_counts[other, arm] += k * existing.shape[0]
    if k > 1:
        within = cross_gram(est.kernel, batch, batch) ** power
        pair_sums[arm, arm] += float((within.sum() - np.trace(within)) / 2.0)
        pair_counts[arm, arm] += k * (k - 1) // 2

    linear_sums = est.linear_sums.copy()
    if est.mode == QuadMode.KD:
        linear_sums[arm] += -2.0 * float(cross_gram(est.kernel, batch, est.real).mean(axis=1).sum())

    fidelity_sums = est.fidelity_sums.copy()
    if fidelity is not None:
        values = np.atleast_1d(np.asarray(fidelity, dtype=np.float64))
        if values.shape[0] != k:
            raise MixselError(DIM_MISMATCH, "one fidelity value per sample is required")
        fidelity_sums[arm] += float(values.sum())

    samples_out = list(est.samples)
    samples_out[arm] = np.vstack([est.samples[arm], batch])
    return QuadEstimate(
        mode=est.mode,
        kernel=est.kernel,
        samples=tuple(samples_out),
        pair_sums=pair_sums,
        pair_counts=pair_counts,
        linear_sums=linear_sums,
        fidelity_sums=fidelity_sums,
        offset=est.offset,
        real=est.real,
    )


def _shifted_pair_sum(
    kernel: KernelSpec,
    xs: NDArray[np.float64],
    ys: NDArray[np.float64],
    power: int,
    shifts: int,
    *,
    same: bool,
) -> tuple[float, int]:
    n = min(xs.shape[0], ys.shape[0])
    offsets = range(1, min(shifts, n - 1) + 1) if same else range(min(shifts, n))
    total = 0.0
    count = 0
    for shift in offsets:
        paired = np.roll(ys[:n], -shift, axis=0)
        total += float(np.sum(paired_kernel(kernel, xs[:n], paired) ** power))
        count += n
    return total, count


def quad_estimate_from_samples(
    mode: QuadMode | str,
    kernel: KernelSpec,
    samples: Sequence[ArrayLike],
    *,
    real: ArrayLike | None = None,
    fidelity: Sequence[ArrayLike | None] | None = None,
    shifts: int = DEFAULT_PAIR_SHIFTS,
    chunk: int = 10_000,
) -> QuadEstimate:
    """Pair averages over large per-arm samples from cyclically shifted pairings.

    Block (i, j) averages k(x_a, y_{a+s}) over ``shifts`` offsets s (distinct
    offsets only on the diagonal), an incomplete U-statistic whose cost is
    linear in the sample size.
    """
    if shifts < 1:
        raise ValueError("shifts must be >= 1")
    arrays = [np.asarray(s, dtype=np.float64) for s in samples]
    if not arrays or any(a.ndim != 2 for a in arrays):
        raise MixselError(DIM_MISMATCH, "one n x d sample per arm is required")
    dims = {a.shape[1] for a in arrays}
    if len(dims) != 1:
        raise MixselError(DIM_MISMATCH, f"arm samples disagree on dimension: {sorted(dims)}")
    est = QuadEstimate.empty(mode, kernel, len(arrays), dims.pop(), real=real)
    power = 2 if est.mode == QuadMode.INV_RKE else 1
    m = len(arrays)

    pair_sums = np.zeros((m, m))
    pair_counts = np.zeros((m, m), dtype=np.int64)
    for i in range(m):
        for j in range(i, m):
            total, count = _shifted_pair_sum(kernel, arrays[i], arrays[j], power, shifts, same=i == j)
            pair_sums[i, j] = pair_sums[j, i] = total
            pair_counts[i, j] = pair_counts[j, i] = count

    linear_sums = np.zeros(m)
    if est.mode == QuadMode.KD:
        for i, arr in enumerate(arrays):
            for start in range(0, arr.shape[0], chunk):
                block = cross_gram(kernel, arr[start : start + chunk], est.real)
                linear_sums[i] += -2.0 * float(block.mean(axis=1).sum())

    fidelity_sums = np.zeros(m)
    if fidelity is not None:
        if len(fidelity) != m:
            raise MixselError(DIM_MISMATCH, "one fidelity vector per arm is required")
        for i, values in enumerate(fidelity):
            if values is None:
                continue
            flat = np.atleast_1d(np.asarray(values, dtype=np.float64))
            if flat.shape[0] != arrays[i].shape[0]:
                raise MixselError(DIM_MISMATCH, "one fidelity value per sample is required")
            fidelity_sums[i] = float(flat.sum())

    return QuadEstimate(
        mode=est.mode,
        kernel=kernel,
        samples=tuple(arrays),
        pair_sums=pair_sums,
        pair_counts=pair_counts,
        linear_sums=linear_sums,
        fidelity_sums=fidelity_sums,
        offset=est.offset,
        real=est.real,
    )


def quad_loss(alpha: ArrayLike, est: QuadEstimate, w: float = 0.0) -> float:
    return est.form(w).loss(alpha)


def quad_gradient(alpha: ArrayLike, est: QuadEstimate, w: float = 0.0) -> NDArray[np.float64]:
    return est.form(w).gradient(alpha)


def rke_feature_khat(stats: Sequence[ArmMomentStats]) -> NDArray[np.float64]:
    """K_ij = <S_i, S_j>, so that alpha^T K alpha = Tr(S_alpha^2)."""
    seconds = np.stack([arm.second_moment for arm in stats])
    flat = seconds.reshape(seconds.shape[0], -1)
    return as_symmetric(flat @ flat.T)


def rke_feature_loss(alpha: ArrayLike, stats: Sequence[ArmMomentStats]) -> float:
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    mix = np.tensordot(weights, np.stack([arm.second_moment for arm in stats]), axes=1)
    return float(np.sum(mix * mix))


def rke_feature_gradient(alpha: ArrayLike, stats: Sequence[ArmMomentStats]) -> NDArray[np.float64]:
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    seconds = np.stack([arm.second_moment for arm in stats])
    mix = np.tensordot(weights, seconds, axes=1)
    return 2.0 * np.tensordot(seconds, mix, axes=([1, 2], [0, 1]))


__all__ = [
    "QuadEstimate",
    "QuadMode",
    "QuadraticForm",
    "quad_estimate_from_samples",
    "quad_estimate_update",
    "quad_gradient",
    "quad_loss",
    "rke_feature_gradient",
    "rke_feature_khat",
    "rke_feature_loss",
]
