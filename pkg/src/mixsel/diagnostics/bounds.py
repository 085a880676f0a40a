"""Closed-form concentration radii, interiority floors and entropy moduli."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from mixsel.core.failures import INVALID_CONFIDENCE, OUT_OF_DOMAIN, WARM_START_TOO_SMALL, MixselError


@dataclass(frozen=True)
class NLVStructure:
    """Innovation structure behind the log-Vendi interiority floor."""

    d: int
    m: int
    nu0: float
    eps0: float
    directions: tuple[NDArray[np.float64], ...] | None = None

    def validate(self) -> "NLVStructure":
        if self.d < 1 or self.m < 1:
            raise ValueError("d and m must be >= 1")
        if not 0 < self.nu0 <= 1:
            raise MixselError(OUT_OF_DOMAIN, f"nu0 must lie in (0, 1], got {self.nu0}")
        if not 0 <= self.eps0 < self.nu0 / 8:
            raise MixselError(OUT_OF_DOMAIN, f"eps0 must lie in [0, nu0/8), got {self.eps0}")
        if self.directions is not None:
            for v in self.directions:
                if abs(float(np.linalg.norm(v)) - 1.0) > 1e-8:
                    raise MixselError(OUT_OF_DOMAIN, "innovation directions must be unit vectors")
        return self

    def to_dict(self) -> dict:
        return {"d": self.d, "m": self.m, "nu0": self.nu0, "eps0": self.eps0}


@dataclass(frozen=True)
class FDStructure:
    bound: float
    lambda0: float
    nu: float
    gamma0: float
    delta0: float

    def validate(self, num_arms: int) -> "FDStructure":
        for name in ("bound", "lambda0", "nu", "gamma0", "delta0"):
            if not getattr(self, name) > 0:
                raise MixselError(OUT_OF_DOMAIN, f"{name} must be > 0, got {getattr(self, name)}")
        if self.gamma0 > 1.0 / num_arms + 1e-12:
            raise MixselError(OUT_OF_DOMAIN, f"gamma0 cannot exceed 1/m = {1.0 / num_arms}")
        return self

    def to_dict(self) -> dict:
        return {"B": self.bound, "lambda0": self.lambda0, "nu": self.nu, "gamma0": self.gamma0, "Delta0": self.delta0}


def _check_confidence(delta: float) -> None:
    if not 0 < delta < 1:
        raise MixselError(INVALID_CONFIDENCE, f"delta must lie in (0, 1), got {delta}")


def hoeffding_radius(M: int, m: int, T: int, delta: float) -> float:
    """(2/sqrt(M)) (1 + sqrt(2 log(m (T+1) / delta)))."""
    _check_confidence(delta)
    if M < 1 or m < 1 or T < 0:
        raise ValueError("M and m must be >= 1 and T >= 0")
    return (2.0 / math.sqrt(M)) * (1.0 + math.sqrt(2.0 * math.log(m * (T + 1) / delta)))


def theta_radius(n: int, m: int, T: int, delta: float) -> float:
    """Uniform radius for the running means of a [0, 1]-valued functional."""
    _check_confidence(delta)
    if n < 1 or m < 1 or T < 0:
        raise ValueError("n and m must be >= 1 and T >= 0")
    return math.sqrt(math.log(2.0 * m * (T + 1) / delta) / (2.0 * n))


def gamma_min_nlv(struct: NLVStructure, eta: float, w: float = 0.0) -> float:
    if w < 0:
        raise ValueError("w must be >= 0")
    if eta > struct.nu0 / 4:
        raise MixselError(WARM_START_TOO_SMALL, f"radius {eta:.4g} exceeds nu0/4 = {struct.nu0 / 4:.4g}")
    nu_eff = struct.nu0 - eta
    eps_eff = struct.eps0 + (struct.m - 1) * eta
    exponent = (struct.d / math.e + math.log(struct.m)) / nu_eff
    if w > 0:
        # the fidelity variant drops the -1
        exponent += w / nu_eff
        return max(0.0, math.exp(-exponent) - eps_eff)
    return max(0.0, math.exp(-1.0 - exponent) - eps_eff)


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log(x) - (1.0 - x) * math.log(1.0 - x)


def fannes_audenaert(T: float, d: int) -> float:
    """T log(d-1) + h(T) for a trace-distance half T in [0, 1 - 1/d]."""
    if d < 2:
        raise MixselError(OUT_OF_DOMAIN, f"d must be >= 2, got {d}")
    if not 0 <= T <= 1 - 1 / d:
        raise MixselError(OUT_OF_DOMAIN, f"T must lie in [0, {1 - 1 / d:.4g}], got {T}")
    return T * math.log(d - 1) + _binary_entropy(T)


@dataclass(frozen=True)
class NLVModulus:
    trace_half: float
    bound: float
    simplified: float | None

    def to_dict(self) -> dict:
        return {"T": self.trace_half, "bound": self.bound, "simplified": self.simplified}


def nlv_modulus(eps: float, d: int) -> NLVModulus:
    """Entropy continuity modulus for two unit-trace matrices with ||S - S'||_F = eps."""
    if eps < 0:
        raise MixselError(OUT_OF_DOMAIN, f"eps must be >= 0, got {eps}")
    trace_half = 0.5 * math.sqrt(d) * eps
    bound = fannes_audenaert(trace_half, d)
    simplified = None
    if 0 < eps <= 2.0 / (math.e * math.sqrt(d)):
        simplified = trace_half * (math.log(d - 1) + math.log(1.0 / trace_half) + 1.0)
    elif eps == 0:
        simplified = 0.0
    return NLVModulus(trace_half=trace_half, bound=bound, simplified=simplified)


def smallest_warm_start(struct: NLVStructure, T: int, delta: float, w: float = 0.0, *, limit: int = 10**7) -> int | None:
    """Smallest M with hoeffding_radius <= nu0/4 and a positive interiority floor."""
    _check_confidence(delta)

    def ok(M: int) -> bool:
        eta = hoeffding_radius(M, struct.m, T, delta)
        return eta <= struct.nu0 / 4 and gamma_min_nlv(struct, eta, w) > 0

    if not ok(limit):
        return None
    # both conditions are monotone in M
    lo, hi = 1, limit
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def hoeffding_bound_curve(ns: Sequence[int], m: int, T: int, delta: float) -> NDArray[np.float64]:
    return np.array([hoeffding_radius(int(n), m, T, delta) for n in ns])


__all__ = [
    "FDStructure",
    "NLVModulus",
    "NLVStructure",
    "fannes_audenaert",
    "gamma_min_nlv",
    "hoeffding_bound_curve",
    "hoeffding_radius",
    "nlv_modulus",
    "smallest_warm_start",
    "theta_radius",
]
