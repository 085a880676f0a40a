"""Empirical checks of traces and snapshots against the closed-form bounds.

Read-only: nothing here feeds back into the selection loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from mixsel.bandit.population import OracleResult
from mixsel.bandit.trace import BanditTrace
from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MixselError
from mixsel.diagnostics.bounds import FDStructure, NLVStructure, hoeffding_bound_curve
from mixsel.numerics.linalg import sym_eig, sym_eigvals
from mixsel.objectives.empirical import EmpiricalObjective
from mixsel.solver import EGConfig, WarmStart, solve_simplex, uniform_weights


@dataclass(frozen=True)
class CountFloorReport:
    passed: bool
    worst_margin: float
    worst_round: int
    worst_arm: int
    first_violation: tuple[int, int] | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "worst_margin": self.worst_margin,
            "worst_round": self.worst_round,
            "worst_arm": self.worst_arm,
            "first_violation": list(self.first_violation) if self.first_violation else None,
        }


def count_floor(trace: BanditTrace, gamma: float, delta: float) -> CountFloorReport:
    """Checks n_i(t) >= M + gamma t - sqrt(2 t log(m T / delta)) for every arm and round."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    T = trace.horizon
    m = trace.num_arms
    if T == 0:
        return CountFloorReport(True, math.inf, 0, 0, None)
    history = trace.count_history()[1:].astype(np.float64)
    t = np.arange(1, T + 1, dtype=np.float64)
    slack = np.sqrt(2.0 * t * math.log(max(m * T / delta, 1.0)))
    floor = trace.warm_start + gamma * t - slack
    margins = history - floor[:, np.newaxis]
    flat = int(np.argmin(margins))
    worst_round, worst_arm = divmod(flat, m)
    violations = np.argwhere(margins < 0)
    first = (int(violations[0][0]) + 1, int(violations[0][1])) if violations.size else None
    return CountFloorReport(
        passed=first is None,
        worst_margin=float(margins.min()),
        worst_round=worst_round + 1,
        worst_arm=worst_arm,
        first_violation=first,
    )


@dataclass(frozen=True)
class DeviationProbe:
    checkpoints: tuple[int, ...]
    deviations: NDArray[np.float64]
    bounds: NDArray[np.float64]

    @property
    def violation_rate(self) -> float:
        observed = ~np.isnan(self.deviations)
        if not observed.any():
            return 0.0
        return float(np.mean((self.deviations > self.bounds[np.newaxis, :])[observed]))

    def to_dict(self) -> dict:
        return {
            "checkpoints": list(self.checkpoints),
            "deviations": np.where(np.isnan(self.deviations), None, self.deviations).tolist(),
            "bounds": self.bounds.tolist(),
            "violation_rate": self.violation_rate,
        }


def deviation_probe(
    features_by_arm: Sequence[ArrayLike],
    population_second_moments: ArrayLike,
    checkpoints: Sequence[int],
    *,
    horizon: int,
    delta: float,
) -> DeviationProbe:
    """||S_i(n) - S_i||_F at each checkpoint n next to the matching concentration radius."""
    population = np.asarray(population_second_moments, dtype=np.float64)
    m = len(features_by_arm)
    if population.shape[0] != m:
        raise MixselError(DIM_MISMATCH, f"{population.shape[0]} population moments for {m} arms")
    ns = tuple(int(n) for n in checkpoints)
    if not ns or min(ns) < 1:
        raise MixselError(EMPTY_INPUT, "checkpoints must be positive sample counts")
    deviations = np.full((m, len(ns)), np.nan)
    for i, raw in enumerate(features_by_arm):
        phi = np.asarray(raw, dtype=np.float64)
        if phi.ndim != 2 or phi.shape[1] != population.shape[1]:
            raise MixselError(DIM_MISMATCH, f"arm {i} features do not match the population dimension")
        for k, n in enumerate(ns):
            if n > phi.shape[0]:
                continue
            head = phi[:n]
            deviations[i, k] = float(np.linalg.norm(head.T @ head / n - population[i], "fro"))
    bounds = hoeffding_bound_curve(ns, m, horizon, delta)
    return DeviationProbe(checkpoints=ns, deviations=deviations, bounds=bounds)


def innovation_structure(second_moments: ArrayLike) -> NLVStructure:
    """Searches each arm's eigenvectors for its innovation direction.

    A heuristic verifier: raises OUT_OF_DOMAIN when the best directions found
    do not meet eps0 < nu0 / 8.
    """
    seconds = np.asarray(second_moments, dtype=np.float64)
    if seconds.ndim != 3 or seconds.shape[1] != seconds.shape[2]:
        raise MixselError(DIM_MISMATCH, "second moments must be an m x D x D stack")
    m, d = seconds.shape[0], seconds.shape[1]
    total = seconds.sum(axis=0)
    directions: list[NDArray[np.float64]] = []
    own: list[float] = []
    leak: list[float] = []
    for i in range(m):
        vectors = sym_eig(seconds[i]).eigenvectors
        own_values = np.einsum("dk,de,ek->k", vectors, seconds[i], vectors)
        other_values = np.einsum("dk,de,ek->k", vectors, total - seconds[i], vectors)
        best = int(np.argmax(own_values - other_values))
        directions.append(vectors[:, best])
        own.append(float(own_values[best]))
        leak.append(float(other_values[best]))
    return NLVStructure(d=d, m=m, nu0=min(own), eps0=max(leak), directions=tuple(directions)).validate()


class _Face:
    """Restriction of an objective to the face spanned by ``keep``."""

    def __init__(self, objective: EmpiricalObjective, keep: Sequence[int]) -> None:
        self.objective = objective
        self.keep = np.asarray(keep, dtype=np.int64)

    def _lift(self, beta: ArrayLike) -> NDArray[np.float64]:
        alpha = np.zeros(self.objective.num_arms)
        alpha[self.keep] = np.asarray(beta, dtype=np.float64)
        return alpha

    def loss(self, beta: ArrayLike) -> float:
        return self.objective.loss(self._lift(beta))

    def gradient(self, beta: ArrayLike) -> NDArray[np.float64]:
        return self.objective.gradient(self._lift(beta))[self.keep]


def fd_structure(
    objective: EmpiricalObjective,
    oracle: OracleResult,
    *,
    arm_covariances: Sequence[ArrayLike],
    reference_cov: ArrayLike,
    samples: Sequence[ArrayLike],
    eg: EGConfig | None = None,
) -> FDStructure:
    m = objective.num_arms
    bound = max(float(np.max(np.linalg.norm(np.asarray(s), axis=1))) for s in samples)
    lambda0 = float(sym_eigvals(reference_cov)[-1])
    nu = min(float(sym_eigvals(cov)[-1]) for cov in arm_covariances)
    gamma0 = float(min(oracle.alpha))
    eg = eg or EGConfig()
    face_cfg = EGConfig(stepsize=eg.stepsize, steps=max(eg.steps, 500), warm_start=WarmStart.UNIFORM)
    delta0 = math.inf
    for i in range(m if m > 1 else 0):
        face = _Face(objective, [j for j in range(m) if j != i])
        beta = solve_simplex(face, uniform_weights(m - 1), face_cfg)
        delta0 = min(delta0, face.loss(beta) - oracle.value)
    return FDStructure(bound=bound, lambda0=lambda0, nu=nu, gamma0=gamma0, delta0=float(delta0))


__all__ = [
    "CountFloorReport",
    "DeviationProbe",
    "count_floor",
    "deviation_probe",
    "fd_structure",
    "innovation_structure",
]
