from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import DEGENERATE_REFERENCE, DIM_MISMATCH, MixselError
from mixsel.numerics.linalg import DEFAULT_CLAMP, psd_fn, sym_eigvals
from mixsel.numerics.metrics import GaussianMoments
from mixsel.objectives.stats import ArmMomentStats, mixture_moments

DEFAULT_REFERENCE_FLOOR = 1e-10


@dataclass(frozen=True)
class FrechetReference:
    """Frozen real-data moments with the square root of the covariance cached."""

    moments: GaussianMoments
    cov_sqrt: NDArray[np.float64]

    @classmethod
    def from_moments(cls, data: GaussianMoments, *, floor: float = DEFAULT_REFERENCE_FLOOR) -> "FrechetReference":
        lowest = float(sym_eigvals(data.cov)[-1])
        if not lowest >= floor:
            raise MixselError(
                DEGENERATE_REFERENCE,
                f"reference covariance must be positive definite (min eigenvalue {lowest:.3e} < {floor:.1e})",
            )
        return cls(moments=data, cov_sqrt=psd_fn(data.cov, "sqrt"))


def _as_reference(data: GaussianMoments | FrechetReference, floor: float) -> FrechetReference:
    if isinstance(data, FrechetReference):
        return data
    return FrechetReference.from_moments(data, floor=floor)


def _check_dims(stats: Sequence[ArmMomentStats], ref: FrechetReference) -> None:
    dim = ref.moments.dim
    for i, arm in enumerate(stats):
        if arm.dim != dim:
            raise MixselError(DIM_MISMATCH, f"arm {i} has dimension {arm.dim}, reference has {dim}")


def fd_loss(
    alpha: ArrayLike,
    stats: Sequence[ArmMomentStats],
    data: GaussianMoments | FrechetReference,
    *,
    floor: float = DEFAULT_REFERENCE_FLOOR,
) -> float:
    ref = _as_reference(data, floor)
    _check_dims(stats, ref)
    mix = mixture_moments(alpha, stats)
    diff = mix.mean - ref.moments.mean
    inner = ref.cov_sqrt @ mix.cov @ ref.cov_sqrt
    values = np.maximum(sym_eigvals(0.5 * (inner + inner.T)), 0.0)
    value = float(diff @ diff) + float(np.trace(mix.cov)) + float(np.trace(ref.moments.cov)) - 2.0 * float(np.sum(np.sqrt(values)))
    return max(value, 0.0)


def fd_gradient(
    alpha: ArrayLike,
    stats: Sequence[ArmMomentStats],
    data: GaussianMoments | FrechetReference,
    *,
    clamp: float = DEFAULT_CLAMP,
    floor: float = DEFAULT_REFERENCE_FLOOR,
) -> NDArray[np.float64]:
    ref = _as_reference(data, floor)
    _check_dims(stats, ref)
    mix = mixture_moments(alpha, stats)
    root = ref.cov_sqrt
    inner = root @ mix.cov @ root
    g_sigma = np.eye(ref.moments.dim) - root @ psd_fn(0.5 * (inner + inner.T), "inv_sqrt", clamp) @ root
    g_sigma = 0.5 * (g_sigma + g_sigma.T)

    means = np.stack([arm.mean for arm in stats])
    seconds = np.stack([arm.second_moment for arm in stats])
    mean_term = 2.0 * means @ (mix.mean - ref.moments.mean)
    # <G, S_i - m_i mu^T - mu m_i^T> = <G, S_i> - 2 m_i^T G mu
    second_term = np.tensordot(seconds, g_sigma, axes=([1, 2], [0, 1]))
    cross_term = 2.0 * means @ (g_sigma @ mix.mean)
    return mean_term + second_term - cross_term


__all__ = ["DEFAULT_REFERENCE_FLOOR", "FrechetReference", "fd_gradient", "fd_loss"]
