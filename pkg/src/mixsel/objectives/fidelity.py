from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.spatial import cKDTree

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MixselError


class FidelityFunctional(Protocol):
    def __call__(self, samples: ArrayLike) -> NDArray[np.float64]: ...


@dataclass(frozen=True)
class ReferenceMiss:
    """psi(x) = 1 when x has no real sample within distance tau, else 0.

    This is one minus the precision-style reference indicator, so that adding
    w * psi to a loss rewards samples that land near the real data.
    """

    real: NDArray[np.float64]
    tau: float
    _tree: cKDTree = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        real = np.asarray(self.real, dtype=np.float64)
        if real.ndim != 2 or real.shape[0] == 0:
            raise MixselError(EMPTY_INPUT, "fidelity reference set is empty")
        if not np.isfinite(self.tau) or self.tau <= 0:
            raise ValueError("fidelity_tau must be finite and > 0")
        object.__setattr__(self, "real", real)
        object.__setattr__(self, "_tree", cKDTree(real))

    def __call__(self, samples: ArrayLike) -> NDArray[np.float64]:
        batch = np.asarray(samples, dtype=np.float64)
        if batch.ndim == 1:
            batch = batch[np.newaxis, :]
        if batch.shape[1] != self.real.shape[1]:
            raise MixselError(DIM_MISMATCH, f"expected dimension {self.real.shape[1]}, got {batch.shape[1]}")
        distances, _ = self._tree.query(batch, k=1)
        return (distances > self.tau).astype(np.float64)


__all__ = ["FidelityFunctional", "ReferenceMiss"]
