from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

REGRET_TOL = 1e-6


@dataclass(frozen=True)
class RoundRecord:
    t: int
    arm: int
    alpha: tuple[float, ...]
    emp_loss: float
    pop_loss: float = math.nan
    cum_regret: float = math.nan


@dataclass(frozen=True)
class BanditTrace:
    algorithm: str
    seed: int
    num_arms: int
    warm_start: int
    records: tuple[RoundRecord, ...]
    counts: tuple[int, ...]
    final_score: float
    oracle_value: float = math.nan
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return len(self.records)

    @property
    def arms(self) -> NDArray[np.int64]:
        return np.array([r.arm for r in self.records], dtype=np.int64)

    @property
    def alphas(self) -> NDArray[np.float64]:
        return np.array([r.alpha for r in self.records], dtype=np.float64).reshape(-1, self.num_arms)

    @property
    def has_population(self) -> bool:
        return bool(self.records) and not math.isnan(self.records[0].pop_loss)

    def count_history(self) -> NDArray[np.int64]:
        """n_i(t) for t = 0..T (row t holds counts after round t, warm start included)."""
        history = np.zeros((self.horizon + 1, self.num_arms), dtype=np.int64)
        history[0, :] = self.warm_start
        if self.horizon:
            pulls = np.zeros((self.horizon, self.num_arms), dtype=np.int64)
            pulls[np.arange(self.horizon), self.arms] = 1
            history[1:] = self.warm_start + np.cumsum(pulls, axis=0)
        return history

    def final_pop_loss(self) -> float:
        return self.records[-1].pop_loss if self.records else math.nan

    def regret_auc(self) -> float:
        if not self.has_population:
            return math.nan
        return float(sum(r.cum_regret for r in self.records))

    def header(self) -> list[str]:
        return ["t", "I_t", *[f"alpha_{i}" for i in range(self.num_arms)], "emp_loss", "pop_loss", "cum_regret"]

    def to_rows(self) -> list[list[Any]]:
        return [[r.t, r.arm, *r.alpha, r.emp_loss, r.pop_loss, r.cum_regret] for r in self.records]


def regret_curve(
    alphas: Sequence[ArrayLike],
    population_loss: Callable[[NDArray[np.float64]], float],
    optimum: float,
) -> NDArray[np.float64]:
    """Reg_t = sum_{s<=t} (F(alpha_s) - F*)."""
    gaps = np.array([population_loss(np.asarray(a, dtype=np.float64)) - optimum for a in alphas], dtype=np.float64)
    return np.cumsum(gaps)


__all__ = ["BanditTrace", "REGRET_TOL", "RoundRecord", "regret_curve"]
