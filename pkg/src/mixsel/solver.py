"""Exponentiated-gradient minimization over the probability simplex."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, Iterator, Mapping, Protocol

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.assurance.logging import RunLogger
from mixsel.core.failures import INCONSISTENT_STATE, TOO_MANY_ARMS, MixselError
from mixsel.objectives.stats import check_simplex

POSITIVE_FLOOR = 1e-15
DESCENT_SLACK = 1e-8
MAX_BRUTE_FORCE_ARMS = 4


class SimplexOracle(Protocol):
    def loss(self, alpha: ArrayLike) -> float: ...

    def gradient(self, alpha: ArrayLike) -> NDArray[np.float64]: ...


class WarmStart(str, Enum):
    PREVIOUS_ITERATE = "previous_iterate"
    UNIFORM = "uniform"


@dataclass(frozen=True)
class EGConfig:
    stepsize: float = 0.5
    steps: int = 200
    warm_start: WarmStart = WarmStart.PREVIOUS_ITERATE
    decay: bool = False

    def validate(self) -> "EGConfig":
        if isinstance(self.stepsize, bool) or not isinstance(self.stepsize, (int, float)):
            raise ValueError("eg.stepsize must be numeric")
        if not math.isfinite(self.stepsize) or self.stepsize <= 0:
            raise ValueError("eg.stepsize must be finite and > 0")
        if isinstance(self.steps, bool) or not isinstance(self.steps, int) or self.steps < 1:
            raise ValueError("eg.steps must be an integer >= 1")
        try:
            warm = WarmStart(self.warm_start)
        except ValueError as exc:
            allowed = ", ".join(w.value for w in WarmStart)
            raise ValueError(f"Invalid eg.warm_start: {self.warm_start}. Allowed: {allowed}") from exc
        if not isinstance(self.decay, bool):
            raise ValueError("eg.decay must be a boolean")
        return EGConfig(stepsize=float(self.stepsize), steps=self.steps, warm_start=warm, decay=self.decay)

    def step_at(self, s: int) -> float:
        return self.stepsize / math.sqrt(s + 1) if self.decay else self.stepsize

    def to_dict(self) -> dict[str, Any]:
        return {
            "stepsize": self.stepsize,
            "steps": self.steps,
            "warm_start": WarmStart(self.warm_start).value,
            "decay": self.decay,
        }

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "EGConfig":
        if not isinstance(raw, Mapping):
            raise ValueError("eg must be a mapping")
        defaults = cls()
        return cls(
            stepsize=raw.get("stepsize", defaults.stepsize),
            steps=raw.get("steps", defaults.steps),
            warm_start=raw.get("warm_start", defaults.warm_start.value),
            decay=raw.get("decay", defaults.decay),
        ).validate()


def uniform_weights(num_arms: int) -> NDArray[np.float64]:
    return np.full(num_arms, 1.0 / num_arms)


def eg_step(alpha: ArrayLike, g: ArrayLike, eta: float) -> NDArray[np.float64]:
    """One multiplicative-weights update alpha_i * exp(-eta g_i), renormalized."""
    a = check_simplex(alpha, np.asarray(alpha).size)
    grad = np.asarray(g, dtype=np.float64).ravel()
    if grad.shape != a.shape:
        raise MixselError(INCONSISTENT_STATE, f"gradient has {grad.shape[0]} entries for {a.shape[0]} arms")
    support = a > 0
    if not np.all(np.isfinite(grad[support])):
        raise MixselError(INCONSISTENT_STATE, "non-finite gradient on the support")
    z = np.where(support, -eta * grad, -np.inf)
    z = z - z[support].max()
    w = np.where(support, a * np.exp(z), 0.0)
    w = w / w.sum()
    if np.any(w[support] < POSITIVE_FLOOR):
        # keep the support strictly positive
        w = np.where(support, np.maximum(w, POSITIVE_FLOOR), 0.0)
        w = w / w.sum()
    return w


def solve_simplex(
    oracle: SimplexOracle,
    alpha0: ArrayLike,
    cfg: EGConfig | None = None,
    *,
    logger: RunLogger | None = None,
) -> NDArray[np.float64]:
    cfg = cfg or EGConfig()
    start = check_simplex(alpha0, np.asarray(alpha0).size)
    alpha = start
    for s in range(cfg.steps):
        alpha = eg_step(alpha, oracle.gradient(alpha), cfg.step_at(s))
    start_loss = oracle.loss(start)
    final_loss = oracle.loss(alpha)
    if final_loss > start_loss + DESCENT_SLACK:
        if logger is not None:
            logger.info(
                "solver_fallback",
                "start_iterate",
                start_loss=float(start_loss),
                final_loss=float(final_loss),
                steps=cfg.steps,
                stepsize=cfg.stepsize,
            )
        return start
    return alpha


def _lattice(num_arms: int, resolution: int) -> Iterator[tuple[int, ...]]:
    if num_arms == 1:
        yield (resolution,)
        return
    for head in range(resolution + 1):
        for tail in _lattice(num_arms - 1, resolution - head):
            yield (head, *tail)


def brute_force_simplex(
    loss: Callable[[NDArray[np.float64]], float] | SimplexOracle,
    num_arms: int,
    resolution: int = 100,
) -> tuple[NDArray[np.float64], float]:
    """Minimize over the grid {k / resolution} on the simplex; first minimum in lexicographic order wins."""
    if num_arms > MAX_BRUTE_FORCE_ARMS:
        raise MixselError(TOO_MANY_ARMS, f"grid search supports at most {MAX_BRUTE_FORCE_ARMS} arms, got {num_arms}")
    if num_arms < 1 or resolution < 1:
        raise ValueError("num_arms and resolution must be >= 1")
    evaluate = loss.loss if hasattr(loss, "loss") else loss
    best_point: NDArray[np.float64] | None = None
    best_value = math.inf
    for point in _lattice(num_arms, resolution):
        alpha = np.asarray(point, dtype=np.float64) / resolution
        value = float(evaluate(alpha))
        if value < best_value:
            best_point, best_value = alpha, value
    if best_point is None:
        raise MixselError(INCONSISTENT_STATE, "loss is not finite anywhere on the grid")
    return best_point, best_value


__all__ = [
    "EGConfig",
    "SimplexOracle",
    "WarmStart",
    "brute_force_simplex",
    "eg_step",
    "solve_simplex",
    "uniform_weights",
]
