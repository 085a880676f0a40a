from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import linalg as sla
from scipy.special import xlogy

from mixsel.core.failures import INVALID_MATRIX, SINGULAR_MATRIX, MixselError

SYMMETRY_TOL = 1e-10
NEGATIVE_DUST = 1e-8
DEFAULT_CLAMP = 1e-12


class MatrixFunction(str, Enum):
    SQRT = "sqrt"
    INV_SQRT = "inv_sqrt"
    LOG = "log"


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]

    def reconstruct(self) -> NDArray[np.float64]:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.T


def as_symmetric(matrix: ArrayLike, *, tol: float = SYMMETRY_TOL) -> NDArray[np.float64]:
    """Validate a dense real symmetric matrix and return its exact symmetrization."""
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise MixselError(INVALID_MATRIX, f"expected a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise MixselError(INVALID_MATRIX, "matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(arr))))
    if float(np.max(np.abs(arr - arr.T))) > tol * scale:
        raise MixselError(INVALID_MATRIX, "matrix is not symmetric")
    return 0.5 * (arr + arr.T)


def sym_eig(matrix: ArrayLike) -> EigenDecomposition:
    sym = as_symmetric(matrix)
    values, vectors = sla.eigh(sym)
    order = np.arange(values.shape[0])[::-1]
    return EigenDecomposition(eigenvalues=values[order], eigenvectors=vectors[:, order])


def sym_eigvals(matrix: ArrayLike) -> NDArray[np.float64]:
    """Eigenvalues only, descending."""
    return sla.eigvalsh(as_symmetric(matrix))[::-1]


def _clamp_dust(values: NDArray[np.float64]) -> NDArray[np.float64]:
    scale = max(1.0, float(np.max(np.abs(values))))
    if float(np.min(values)) < -NEGATIVE_DUST * scale:
        raise MixselError(INVALID_MATRIX, f"matrix is not PSD (min eigenvalue {float(np.min(values)):.3e})")
    return np.maximum(values, 0.0)


def psd_fn(
    matrix: ArrayLike,
    f: MatrixFunction | str,
    clamp: float | None = None,
) -> NDArray[np.float64]:
    """Apply a scalar function to a PSD matrix through its eigendecomposition.

    For log and inv_sqrt, eigenvalues below ``clamp`` are raised to ``clamp``
    first; with clamp=0 a zero eigenvalue is singular.
    """
    func = MatrixFunction(f)
    if clamp is None:
        clamp = 0.0 if func == MatrixFunction.SQRT else DEFAULT_CLAMP
    if clamp < 0 or not np.isfinite(clamp):
        raise ValueError("clamp must be a finite non-negative number")

    decomp = sym_eig(matrix)
    values = np.maximum(_clamp_dust(decomp.eigenvalues), clamp)

    if func == MatrixFunction.SQRT:
        mapped = np.sqrt(values)
    else:
        if np.any(values <= 0.0):
            raise MixselError(SINGULAR_MATRIX, f"{func.value} of a matrix with a zero eigenvalue")
        mapped = np.log(values) if func == MatrixFunction.LOG else 1.0 / np.sqrt(values)

    out = (decomp.eigenvectors * mapped) @ decomp.eigenvectors.T
    return 0.5 * (out + out.T)


def psd_project(matrix: ArrayLike) -> NDArray[np.float64]:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues set to 0)."""
    decomp = sym_eig(matrix)
    if float(np.min(decomp.eigenvalues)) >= 0.0:
        return as_symmetric(matrix)
    values = np.maximum(decomp.eigenvalues, 0.0)
    out = (decomp.eigenvectors * values) @ decomp.eigenvectors.T
    return 0.5 * (out + out.T)


def trace_norm(matrix: ArrayLike) -> float:
    return float(np.sum(np.abs(sym_eigvals(matrix))))


def entropy_trace(matrix: ArrayLike) -> float:
    """Tr(M log M) over the spectrum of a PSD matrix, with 0 log 0 = 0."""
    values = _clamp_dust(sym_eigvals(matrix))
    return float(np.sum(xlogy(values, values)))


__all__ = [
    "DEFAULT_CLAMP",
    "EigenDecomposition",
    "MatrixFunction",
    "as_symmetric",
    "entropy_trace",
    "psd_fn",
    "psd_project",
    "sym_eig",
    "sym_eigvals",
    "trace_norm",
]
