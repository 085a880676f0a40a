"""Scores of finished sample sets, used for reporting and as reference values."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import entropy

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, NOT_NORMALIZED, MixselError
from mixsel.numerics.kernels import KernelSpec, cross_gram
from mixsel.numerics.linalg import as_symmetric, psd_fn, sym_eigvals

UNIT_DIAGONAL_TOL = 1e-8


@dataclass(frozen=True)
class GaussianMoments:
    mean: NDArray[np.float64]
    cov: NDArray[np.float64]

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    def to_dict(self) -> dict[str, list]:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


def moments_of(samples: ArrayLike) -> GaussianMoments:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, np.newaxis]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise MixselError(EMPTY_INPUT, "moments_of needs at least one sample")
    mean = arr.mean(axis=0)
    centered = arr - mean
    cov = centered.T @ centered / arr.shape[0]
    return GaussianMoments(mean=mean, cov=0.5 * (cov + cov.T))


def _trace_sqrt_product(sqrt_a: NDArray[np.float64], cov_b: NDArray[np.float64]) -> float:
    inner = sqrt_a @ cov_b @ sqrt_a
    values = sym_eigvals(0.5 * (inner + inner.T))
    return float(np.sum(np.sqrt(np.maximum(values, 0.0))))


def frechet_distance(a: GaussianMoments, b: GaussianMoments) -> float:
    if a.mean.shape != b.mean.shape or a.cov.shape != b.cov.shape:
        raise MixselError(DIM_MISMATCH, f"moment dimensions differ: {a.mean.shape[0]} vs {b.mean.shape[0]}")
    diff = a.mean - b.mean
    sqrt_a = psd_fn(a.cov, "sqrt")
    value = float(diff @ diff) + float(np.trace(a.cov)) + float(np.trace(b.cov)) - 2.0 * _trace_sqrt_product(sqrt_a, b.cov)
    return max(value, 0.0)


def kernel_distance(spec: KernelSpec, xs: ArrayLike, ys: ArrayLike) -> float:
    """V-statistic squared MMD; self pairs included."""
    kxx = cross_gram(spec, xs, xs).mean()
    kyy = cross_gram(spec, ys, ys).mean()
    kxy = cross_gram(spec, xs, ys).mean()
    return max(float(kxx + kyy - 2.0 * kxy), 0.0)


def _checked_gram(K: ArrayLike, n: int) -> NDArray[np.float64]:
    gram_matrix = as_symmetric(K)
    if gram_matrix.shape[0] != n:
        raise MixselError(DIM_MISMATCH, f"Gram is {gram_matrix.shape[0]}x{gram_matrix.shape[0]}, expected n={n}")
    if float(np.max(np.abs(np.diag(gram_matrix) - 1.0))) > UNIT_DIAGONAL_TOL:
        raise MixselError(NOT_NORMALIZED, "Gram matrix must have a unit diagonal")
    return gram_matrix


def vendi_score(K: ArrayLike, n: int) -> float:
    gram_matrix = _checked_gram(K, n)
    spectrum = np.maximum(sym_eigvals(gram_matrix / n), 0.0)
    return float(np.exp(entropy(spectrum)))


def inv_rke(K: ArrayLike, n: int) -> float:
    gram_matrix = _checked_gram(K, n)
    return float(np.sum(gram_matrix * gram_matrix)) / float(n * n)


def rke(K: ArrayLike, n: int) -> float:
    return 1.0 / inv_rke(K, n)


__all__ = [
    "GaussianMoments",
    "frechet_distance",
    "inv_rke",
    "kernel_distance",
    "moments_of",
    "rke",
    "vendi_score",
]
