"""Negative log-Vendi losses over the pooled generated samples.

The kernel form works on the N x N weighted Gram rho(alpha); the feature form
works on the feature covariance C(alpha). Both share the nonzero spectrum, so
the feature path switches to the Gram side whenever the pool is smaller than
the feature dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, INCONSISTENT_STATE, MixselError
from mixsel.numerics.kernels import KernelSpec, cross_gram, gram
from mixsel.numerics.linalg import DEFAULT_CLAMP, entropy_trace, psd_fn

DEFAULT_Q_MIN = 1e-12


@dataclass(frozen=True)
class PooledKernelState:
    """Immutable snapshot of the pooled samples and their arm provenance.

    ``points`` holds raw samples in kernel mode (``gram`` set) and unit-norm
    embeddings in feature mode (``gram`` is None).
    """

    points: NDArray[np.float64]
    arm_of: NDArray[np.int64]
    counts: NDArray[np.int64]
    gram: NDArray[np.float64] | None = None

    @property
    def size(self) -> int:
        return int(self.arm_of.shape[0])

    @property
    def num_arms(self) -> int:
        return int(self.counts.shape[0])

    @classmethod
    def from_samples(
        cls,
        points: ArrayLike,
        arm_of: ArrayLike,
        num_arms: int,
        *,
        kernel: KernelSpec | None = None,
    ) -> "PooledKernelState":
        pts = np.asarray(points, dtype=np.float64)
        arms = np.asarray(arm_of, dtype=np.int64).ravel()
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise MixselError(EMPTY_INPUT, "pooled state needs at least one sample")
        if arms.shape[0] != pts.shape[0]:
            raise MixselError(DIM_MISMATCH, "arm_of must have one entry per sample")
        if np.any(arms < 0) or np.any(arms >= num_arms):
            raise MixselError(INCONSISTENT_STATE, "arm index out of range")
        counts = np.bincount(arms, minlength=num_arms).astype(np.int64)
        matrix = gram(kernel, pts) if kernel is not None else None
        return cls(points=pts, arm_of=arms, counts=counts, gram=matrix)


class PooledKernelBuilder:
    """Single-writer pool that grows one sample at a time.

    Buffers grow geometrically; snapshots are read-only views of the filled
    prefix, so later additions never alter a snapshot already handed out.
    """

    def __init__(self, num_arms: int, dim: int, *, kernel: KernelSpec | None = None, capacity: int = 64) -> None:
        self.num_arms = num_arms
        self.dim = dim
        self.kernel = kernel
        self._size = 0
        self._points = np.zeros((capacity, dim))
        self._arm_of = np.zeros(capacity, dtype=np.int64)
        self._counts = np.zeros(num_arms, dtype=np.int64)
        self._gram = np.zeros((capacity, capacity)) if kernel is not None else None

    @property
    def size(self) -> int:
        return self._size

    def _grow(self, needed: int) -> None:
        capacity = self._points.shape[0]
        if needed <= capacity:
            return
        new_cap = max(needed, 2 * capacity)
        points = np.zeros((new_cap, self.dim))
        points[: self._size] = self._points[: self._size]
        arm_of = np.zeros(new_cap, dtype=np.int64)
        arm_of[: self._size] = self._arm_of[: self._size]
        self._points, self._arm_of = points, arm_of
        if self._gram is not None:
            grown = np.zeros((new_cap, new_cap))
            grown[: self._size, : self._size] = self._gram[: self._size, : self._size]
            self._gram = grown

    def add_many(self, samples: ArrayLike, arm: int) -> None:
        batch = np.asarray(samples, dtype=np.float64)
        if batch.ndim == 1:
            batch = batch[np.newaxis, :]
        if batch.ndim != 2 or batch.shape[1] != self.dim:
            raise MixselError(DIM_MISMATCH, f"expected samples of dimension {self.dim}, got shape {batch.shape}")
        if not 0 <= arm < self.num_arms:
            raise MixselError(INCONSISTENT_STATE, f"arm {arm} out of range")
        start, k = self._size, batch.shape[0]
        stop = start + k
        self._grow(stop)
        self._points[start:stop] = batch
        self._arm_of[start:stop] = arm
        self._counts[arm] += k
        if self._gram is not None:
            block = gram(self.kernel, batch)
            self._gram[start:stop, start:stop] = block
            if start > 0:
                cross = cross_gram(self.kernel, self._points[:start], batch)
                self._gram[:start, start:stop] = cross
                self._gram[start:stop, :start] = cross.T
        self._size = stop

    def snapshot(self) -> PooledKernelState:
        n = self._size
        if n == 0:
            raise MixselError(EMPTY_INPUT, "pool is empty")
        points = self._points[:n].copy()
        arm_of = self._arm_of[:n].copy()
        counts = self._counts.copy()
        matrix = self._gram[:n, :n].copy() if self._gram is not None else None
        for arr in (points, arm_of, counts, matrix):
            if arr is not None:
                arr.setflags(write=False)
        return PooledKernelState(points=points, arm_of=arm_of, counts=counts, gram=matrix)


def nlv_weights(alpha: ArrayLike, pooled: PooledKernelState) -> NDArray[np.float64]:
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    if weights.shape[0] != pooled.num_arms:
        raise MixselError(DIM_MISMATCH, f"mixture has {weights.shape[0]} weights for {pooled.num_arms} arms")
    observed = np.bincount(pooled.arm_of, minlength=pooled.num_arms)
    if observed.shape[0] != pooled.num_arms or np.any(observed != pooled.counts):
        raise MixselError(INCONSISTENT_STATE, "recorded arm counts disagree with pooled sample provenance")
    per_sample_count = pooled.counts[pooled.arm_of]
    if np.any(per_sample_count == 0):
        raise MixselError(INCONSISTENT_STATE, "pooled sample belongs to an arm with zero recorded count")
    return weights[pooled.arm_of] / per_sample_count


def _weighted_gram(q: NDArray[np.float64], kernel_matrix: NDArray[np.float64]) -> NDArray[np.float64]:
    root = np.sqrt(np.maximum(q, 0.0))
    rho = root[:, np.newaxis] * kernel_matrix * root[np.newaxis, :]
    return 0.5 * (rho + rho.T)


def _require_gram(pooled: PooledKernelState) -> NDArray[np.float64]:
    if pooled.gram is None:
        raise MixselError(INCONSISTENT_STATE, "pooled state has no Gram matrix (feature mode)")
    return pooled.gram


def _kernel_loss(q: NDArray[np.float64], kernel_matrix: NDArray[np.float64]) -> float:
    return entropy_trace(_weighted_gram(q, kernel_matrix))


def _kernel_sample_gradient(
    q: NDArray[np.float64],
    kernel_matrix: NDArray[np.float64],
    clamp: float,
    q_min: float,
) -> NDArray[np.float64]:
    # d/dq_j Tr(rho log rho) = ((log rho + I) D K)_jj / sqrt(q_j)
    rho = _weighted_gram(q, kernel_matrix)
    log_term = psd_fn(rho, "log", clamp) + np.eye(rho.shape[0])
    root = np.sqrt(np.maximum(q, 0.0))
    diag = np.sum((log_term * root[np.newaxis, :]) * kernel_matrix, axis=1)
    return diag / np.sqrt(np.maximum(q, q_min))


def _per_arm(values: NDArray[np.float64], pooled: PooledKernelState) -> NDArray[np.float64]:
    totals = np.bincount(pooled.arm_of, weights=values, minlength=pooled.num_arms)
    return np.divide(totals, pooled.counts, out=np.zeros(pooled.num_arms), where=pooled.counts > 0)


def nlv_loss_kernel(alpha: ArrayLike, pooled: PooledKernelState) -> float:
    return _kernel_loss(nlv_weights(alpha, pooled), _require_gram(pooled))


def nlv_gradient_kernel(
    alpha: ArrayLike,
    pooled: PooledKernelState,
    *,
    clamp: float = DEFAULT_CLAMP,
    q_min: float = DEFAULT_Q_MIN,
) -> NDArray[np.float64]:
    q = nlv_weights(alpha, pooled)
    return _per_arm(_kernel_sample_gradient(q, _require_gram(pooled), clamp, q_min), pooled)


def _feature_covariance(q: NDArray[np.float64], embeddings: NDArray[np.float64]) -> NDArray[np.float64]:
    cov = embeddings.T @ (q[:, np.newaxis] * embeddings)
    return 0.5 * (cov + cov.T)


def _use_gram_side(pooled: PooledKernelState) -> bool:
    return pooled.size <= pooled.points.shape[1]


def nlv_loss_features(alpha: ArrayLike, pooled: PooledKernelState) -> float:
    q = nlv_weights(alpha, pooled)
    phi = pooled.points
    if _use_gram_side(pooled):
        return _kernel_loss(q, phi @ phi.T)
    return entropy_trace(_feature_covariance(q, phi))


def nlv_gradient_features(
    alpha: ArrayLike,
    pooled: PooledKernelState,
    *,
    clamp: float = DEFAULT_CLAMP,
    q_min: float = DEFAULT_Q_MIN,
) -> NDArray[np.float64]:
    q = nlv_weights(alpha, pooled)
    phi = pooled.points
    if _use_gram_side(pooled):
        return _per_arm(_kernel_sample_gradient(q, phi @ phi.T, clamp, q_min), pooled)
    log_term = psd_fn(_feature_covariance(q, phi), "log", clamp) + np.eye(phi.shape[1])
    quad = np.einsum("jd,de,je->j", phi, log_term, phi)
    return _per_arm(quad, pooled)


def nlv_loss_moments(alpha: ArrayLike, second_moments: NDArray[np.float64]) -> float:
    """Tr(C log C) with C = sum_i alpha_i S_i from per-arm feature second moments."""
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    cov = np.tensordot(weights, second_moments, axes=1)
    return entropy_trace(0.5 * (cov + cov.T))


def nlv_gradient_moments(
    alpha: ArrayLike,
    second_moments: NDArray[np.float64],
    *,
    clamp: float = DEFAULT_CLAMP,
) -> NDArray[np.float64]:
    """Component i = <log C + I, S_i>, the per-arm average of phi^T (log C + I) phi."""
    weights = np.asarray(alpha, dtype=np.float64).ravel()
    cov = np.tensordot(weights, second_moments, axes=1)
    log_term = psd_fn(0.5 * (cov + cov.T), "log", clamp) + np.eye(cov.shape[0])
    return np.tensordot(second_moments, log_term, axes=([1, 2], [0, 1]))


__all__ = [
    "DEFAULT_Q_MIN",
    "PooledKernelBuilder",
    "PooledKernelState",
    "nlv_gradient_features",
    "nlv_gradient_kernel",
    "nlv_gradient_moments",
    "nlv_loss_features",
    "nlv_loss_kernel",
    "nlv_loss_moments",
    "nlv_weights",
]
