from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial.distance import cdist

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, ZERO_VECTOR, MixselError


class KernelKind(str, Enum):
    GAUSSIAN = "gaussian"
    COSINE = "cosine"


@dataclass(frozen=True)
class KernelSpec:
    kind: KernelKind = KernelKind.GAUSSIAN
    bandwidth: float | None = 1.0
    normalize: bool = True

    def validate(self) -> "KernelSpec":
        kind = KernelKind(self.kind)
        bandwidth = self.bandwidth
        if kind == KernelKind.GAUSSIAN:
            if isinstance(bandwidth, bool) or not isinstance(bandwidth, (int, float)):
                raise ValueError("gaussian kernel requires a numeric bandwidth")
            if not np.isfinite(bandwidth) or bandwidth <= 0:
                raise ValueError("bandwidth must be finite and > 0")
            bandwidth = float(bandwidth)
        else:
            bandwidth = None
        return KernelSpec(kind=kind, bandwidth=bandwidth, normalize=bool(self.normalize))

    def with_bandwidth(self, bandwidth: float) -> "KernelSpec":
        return KernelSpec(kind=self.kind, bandwidth=bandwidth, normalize=self.normalize).validate()

    def to_dict(self) -> dict[str, Any]:
        return {"kind": KernelKind(self.kind).value, "bandwidth": self.bandwidth, "normalize": self.normalize}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "KernelSpec":
        if not isinstance(raw, Mapping):
            raise ValueError("kernel must be a mapping")
        try:
            kind = KernelKind(str(raw.get("kind", KernelKind.GAUSSIAN.value)).strip().lower())
        except ValueError as exc:
            allowed = ", ".join(k.value for k in KernelKind)
            raise ValueError(f"Invalid kernel.kind: {raw.get('kind')}. Allowed: {allowed}") from exc
        normalize = raw.get("normalize", True)
        if not isinstance(normalize, bool):
            raise ValueError("kernel.normalize must be a boolean")
        default_bw = 1.0 if kind == KernelKind.GAUSSIAN else None
        return cls(kind=kind, bandwidth=raw.get("bandwidth", default_bw), normalize=normalize).validate()


def _as_batch(samples: ArrayLike, field: str) -> NDArray[np.float64]:
    arr = np.asarray(samples, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise MixselError(DIM_MISMATCH, f"{field} must be a sequence of vectors")
    if arr.shape[0] == 0:
        raise MixselError(EMPTY_INPUT, f"{field} is empty")
    return arr


def _unit_rows(arr: NDArray[np.float64]) -> NDArray[np.float64]:
    norms = np.linalg.norm(arr, axis=1)
    if np.any(norms == 0.0):
        raise MixselError(ZERO_VECTOR, "cosine kernel is undefined for a zero vector")
    return arr / norms[:, np.newaxis]


def cross_gram(spec: KernelSpec, xs: ArrayLike, ys: ArrayLike) -> NDArray[np.float64]:
    """k(x_i, y_j) for every pair of rows."""
    a = _as_batch(xs, "xs")
    b = _as_batch(ys, "ys")
    if a.shape[1] != b.shape[1]:
        raise MixselError(DIM_MISMATCH, f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if spec.kind == KernelKind.GAUSSIAN:
        sq = cdist(a, b, "sqeuclidean")
        return np.exp(-sq / (2.0 * float(spec.bandwidth) ** 2))
    return np.clip(_unit_rows(a) @ _unit_rows(b).T, -1.0, 1.0)


def paired_kernel(spec: KernelSpec, xs: ArrayLike, ys: ArrayLike) -> NDArray[np.float64]:
    """k(x_a, y_a) for matched rows."""
    a = _as_batch(xs, "xs")
    b = _as_batch(ys, "ys")
    if a.shape != b.shape:
        raise MixselError(DIM_MISMATCH, f"paired rows need equal shapes: {a.shape} vs {b.shape}")
    if spec.kind == KernelKind.GAUSSIAN:
        sq = np.sum((a - b) ** 2, axis=1)
        return np.exp(-sq / (2.0 * float(spec.bandwidth) ** 2))
    return np.clip(np.sum(_unit_rows(a) * _unit_rows(b), axis=1), -1.0, 1.0)


def unit_rows(samples: ArrayLike) -> NDArray[np.float64]:
    """Rows scaled to unit norm: the exact feature map of the cosine kernel."""
    return _unit_rows(_as_batch(samples, "samples"))


def kernel_eval(spec: KernelSpec, x: ArrayLike, y: ArrayLike) -> float:
    xv = np.asarray(x, dtype=np.float64).ravel()
    yv = np.asarray(y, dtype=np.float64).ravel()
    if xv.shape != yv.shape:
        raise MixselError(DIM_MISMATCH, f"dimension mismatch: {xv.shape[0]} vs {yv.shape[0]}")
    return float(cross_gram(spec, xv, yv)[0, 0])


def gram(spec: KernelSpec, samples: ArrayLike) -> NDArray[np.float64]:
    arr = _as_batch(samples, "samples")
    matrix = cross_gram(spec, arr, arr)
    matrix = 0.5 * (matrix + matrix.T)
    if spec.normalize:
        np.fill_diagonal(matrix, 1.0)
    return matrix


@dataclass(frozen=True)
class RFFMap:
    """Paired cos/sin random Fourier features for the gaussian kernel."""

    dim_in: int
    num_pairs: int
    bandwidth: float
    frequencies: NDArray[np.float64]
    seed: int | None = None

    @property
    def dim_out(self) -> int:
        return 2 * self.num_pairs

    @classmethod
    def sample(
        cls,
        dim_in: int,
        num_pairs: int,
        bandwidth: float,
        rng: np.random.Generator,
        *,
        seed: int | None = None,
    ) -> "RFFMap":
        if dim_in < 1 or num_pairs < 1:
            raise ValueError("dim_in and num_pairs must be >= 1")
        if not np.isfinite(bandwidth) or bandwidth <= 0:
            raise ValueError("bandwidth must be finite and > 0")
        omega = rng.standard_normal((num_pairs, dim_in)) / float(bandwidth)
        omega.setflags(write=False)
        return cls(dim_in=dim_in, num_pairs=num_pairs, bandwidth=float(bandwidth), frequencies=omega, seed=seed)


def rff_embed(feature_map: RFFMap, x: ArrayLike) -> NDArray[np.float64]:
    """Map one vector (returns 2D) or a batch of rows (returns n x 2D)."""
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    batch = arr[np.newaxis, :] if single else arr
    if batch.ndim != 2 or batch.shape[1] != feature_map.dim_in:
        raise MixselError(DIM_MISMATCH, f"expected input dimension {feature_map.dim_in}, got shape {arr.shape}")
    proj = batch @ feature_map.frequencies.T
    out = np.empty((batch.shape[0], feature_map.dim_out), dtype=np.float64)
    out[:, 0::2] = np.cos(proj)
    out[:, 1::2] = np.sin(proj)
    out /= np.sqrt(feature_map.num_pairs)
    return out[0] if single else out


__all__ = [
    "KernelKind",
    "KernelSpec",
    "RFFMap",
    "cross_gram",
    "gram",
    "kernel_eval",
    "paired_kernel",
    "rff_embed",
    "unit_rows",
]
