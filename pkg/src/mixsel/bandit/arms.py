from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, POOL_EXHAUSTED, ZERO_VECTOR, MixselError
from mixsel.core.rng import RngStreams
from mixsel.numerics.linalg import as_symmetric, sym_eigvals


class ArmKind(str, Enum):
    SYNTHETIC_GAUSSIAN = "synthetic_gaussian"
    FILE_BACKED = "file_backed"


class PostMap(str, Enum):
    RAW = "raw"
    UNIT = "unit"


class Arm(Protocol):
    dim: int

    def draw(self, n: int) -> NDArray[np.float64]: ...


def _unit(samples: NDArray[np.float64]) -> NDArray[np.float64]:
    norms = np.linalg.norm(samples, axis=1)
    if np.any(norms == 0):
        raise MixselError(ZERO_VECTOR, "cannot normalize a zero sample")
    return samples / norms[:, np.newaxis]


class SyntheticGaussianArm:
    def __init__(self, mean: ArrayLike, cov: ArrayLike, rng: np.random.Generator, *, post_map: PostMap = PostMap.RAW) -> None:
        self.mean = np.asarray(mean, dtype=np.float64)
        self.cov = as_symmetric(cov)
        if self.cov.shape != (self.mean.shape[0], self.mean.shape[0]):
            raise MixselError(DIM_MISMATCH, f"covariance shape {self.cov.shape} does not match mean of length {self.mean.shape[0]}")
        self.dim = int(self.mean.shape[0])
        self.post_map = PostMap(post_map)
        self._rng = rng

    def draw(self, n: int) -> NDArray[np.float64]:
        samples = self._rng.multivariate_normal(self.mean, self.cov, size=n)
        return _unit(samples) if self.post_map == PostMap.UNIT else samples


class FileBackedArm:
    """Serves a shuffled pool without replacement."""

    def __init__(self, pool: ArrayLike, rng: np.random.Generator, *, post_map: PostMap = PostMap.RAW) -> None:
        data = np.asarray(pool, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] == 0:
            raise MixselError(EMPTY_INPUT, "file-backed arm needs a non-empty pool")
        self.post_map = PostMap(post_map)
        self._pool = _unit(data) if self.post_map == PostMap.UNIT else data
        self._order = rng.permutation(data.shape[0])
        self._cursor = 0
        self.dim = int(data.shape[1])

    @property
    def remaining(self) -> int:
        return int(self._order.shape[0] - self._cursor)

    def draw(self, n: int) -> NDArray[np.float64]:
        if n > self.remaining:
            raise MixselError(POOL_EXHAUSTED, f"pool has {self.remaining} unused samples, {n} requested")
        idx = self._order[self._cursor : self._cursor + n]
        self._cursor += n
        return self._pool[idx]


def _float_list(value: Any, field_name: str) -> list:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{field_name} must be finite")
    return arr.tolist()


@dataclass(frozen=True)
class ArmSpec:
    """Configuration of one arm; ``path`` is resolved by the harness."""

    kind: ArmKind = ArmKind.SYNTHETIC_GAUSSIAN
    mean: tuple[float, ...] | None = None
    cov: tuple[tuple[float, ...], ...] | None = None
    path: str | None = None
    post_map: PostMap = PostMap.RAW
    name: str | None = None

    @property
    def dim(self) -> int | None:
        return len(self.mean) if self.mean is not None else None

    def validate(self) -> "ArmSpec":
        kind = ArmKind(self.kind)
        post_map = PostMap(self.post_map)
        if kind == ArmKind.SYNTHETIC_GAUSSIAN:
            if self.mean is None or self.cov is None:
                raise ValueError("synthetic_gaussian arms need mean and cov")
            mean = tuple(_float_list(self.mean, "arm.mean"))
            cov = tuple(tuple(row) for row in _float_list(self.cov, "arm.cov"))
            if not mean:
                raise ValueError("arm.mean cannot be empty")
            if len(cov) != len(mean) or any(len(row) != len(mean) for row in cov):
                raise ValueError(f"arm.cov must be {len(mean)}x{len(mean)}")
            lowest = float(sym_eigvals(as_symmetric(np.asarray(cov)))[-1])
            if lowest < -1e-10:
                raise ValueError("arm.cov must be positive semidefinite")
            return ArmSpec(kind=kind, mean=mean, cov=cov, post_map=post_map, name=self.name)
        if not self.path or not str(self.path).strip():
            raise ValueError("file_backed arms need a path")
        return ArmSpec(kind=kind, path=str(self.path), post_map=post_map, name=self.name)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"kind": ArmKind(self.kind).value, "post_map": PostMap(self.post_map).value}
        if self.name is not None:
            payload["name"] = self.name
        if self.mean is not None:
            payload["mean"] = list(self.mean)
            payload["cov"] = [list(row) for row in self.cov]
        if self.path is not None:
            payload["path"] = self.path
        return payload

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ArmSpec":
        if not isinstance(raw, Mapping):
            raise ValueError("arm must be a mapping")
        kind_raw = raw.get("kind", "file_backed" if "path" in raw else ArmKind.SYNTHETIC_GAUSSIAN.value)
        try:
            kind = ArmKind(str(kind_raw).strip().lower())
            post_map = PostMap(str(raw.get("post_map", PostMap.RAW.value)).strip().lower())
        except ValueError as exc:
            raise ValueError(f"Invalid arm: {exc}") from exc
        return cls(
            kind=kind,
            mean=raw.get("mean"),
            cov=raw.get("cov"),
            path=raw.get("path"),
            post_map=post_map,
            name=raw.get("name"),
        ).validate()


def build_arm(spec: ArmSpec, index: int, streams: RngStreams, *, pool: ArrayLike | None = None) -> Arm:
    if spec.kind == ArmKind.SYNTHETIC_GAUSSIAN:
        return SyntheticGaussianArm(spec.mean, spec.cov, streams.stream(f"arm:{index}"), post_map=spec.post_map)
    if pool is None:
        raise MixselError(EMPTY_INPUT, f"arm {index} is file-backed but no pool was loaded")
    return FileBackedArm(pool, streams.stream(f"shuffle:{index}"), post_map=spec.post_map)


def draw_for_round(arm: Arm, n: int, round_index: int, arm_index: int) -> NDArray[np.float64]:
    try:
        return arm.draw(n)
    except MixselError as exc:
        if exc.code != POOL_EXHAUSTED:
            raise
        raise MixselError(POOL_EXHAUSTED, f"arm {arm_index} exhausted at round {round_index}: {exc.detail}") from exc


def population_sample(spec: ArmSpec, index: int, streams: RngStreams, size: int, *, pool: ArrayLike | None = None) -> NDArray[np.float64]:
    """Large frozen sample standing in for the arm's distribution."""
    if spec.kind == ArmKind.SYNTHETIC_GAUSSIAN:
        arm = SyntheticGaussianArm(spec.mean, spec.cov, streams.stream(f"population:{index}"), post_map=spec.post_map)
        return arm.draw(size)
    if pool is None:
        raise MixselError(EMPTY_INPUT, f"arm {index} is file-backed but no pool was loaded")
    data = np.asarray(pool, dtype=np.float64)
    if data.shape[0] > size:
        data = data[np.sort(streams.stream(f"population:{index}").choice(data.shape[0], size, replace=False))]
    return _unit(data) if spec.post_map == PostMap.UNIT else data


def is_exact_gaussian(spec: ArmSpec) -> bool:
    return spec.kind == ArmKind.SYNTHETIC_GAUSSIAN and spec.post_map == PostMap.RAW


__all__ = [
    "Arm",
    "ArmKind",
    "ArmSpec",
    "FileBackedArm",
    "PostMap",
    "SyntheticGaussianArm",
    "build_arm",
    "draw_for_round",
    "is_exact_gaussian",
    "population_sample",
]
