from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping

from mixsel.numerics.kernels import KernelKind, KernelSpec
from mixsel.numerics.linalg import DEFAULT_CLAMP
from mixsel.objectives.frechet import DEFAULT_REFERENCE_FLOOR
from mixsel.objectives.quadratic import QuadMode
from mixsel.objectives.vendi import DEFAULT_Q_MIN


class ObjectiveKind(str, Enum):
    FD = "fd"
    NLV_KERNEL = "nlv_kernel"
    NLV_FEATURES = "nlv_features"
    QUADRATIC = "quadratic"
    RKE_FEATURES = "rke_features"


def _coerce_finite(value: Any, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{field_name} must be numeric")
    if not math.isfinite(value):
        raise ValueError(f"{field_name} must be finite")
    return float(value)


def _coerce_positive(value: Any, field_name: str) -> float:
    number = _coerce_finite(value, field_name)
    if number <= 0:
        raise ValueError(f"{field_name} must be > 0")
    return number


def _coerce_optional_int(value: Any, field_name: str) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{field_name} must be an integer")
    if value < 1:
        raise ValueError(f"{field_name} must be >= 1")
    return value


def _coerce_enum(value: Any, enum_cls, field_name: str):
    try:
        return enum_cls(str(value).strip().lower())
    except Exception as exc:
        allowed = ", ".join(e.value for e in enum_cls)
        raise ValueError(f"Invalid {field_name}: {value}. Allowed: {allowed}") from exc


@dataclass(frozen=True)
class ObjectiveSpec:
    kind: ObjectiveKind = ObjectiveKind.FD
    kernel: KernelSpec = field(default_factory=KernelSpec)
    rff_pairs: int | None = None
    quad_mode: QuadMode = QuadMode.INV_RKE
    fidelity_weight: float = 0.0
    fidelity_tau: float | None = None
    reference_floor: float = DEFAULT_REFERENCE_FLOOR
    eig_clamp: float = DEFAULT_CLAMP
    q_min: float = DEFAULT_Q_MIN

    @property
    def needs_reference(self) -> bool:
        if self.kind == ObjectiveKind.FD or self.fidelity_weight > 0:
            return True
        return self.kind == ObjectiveKind.QUADRATIC and self.quad_mode == QuadMode.KD

    @property
    def label(self) -> str:
        if self.kind == ObjectiveKind.QUADRATIC:
            return f"quadratic_{QuadMode(self.quad_mode).value}"
        return ObjectiveKind(self.kind).value

    def validate(self) -> "ObjectiveSpec":
        kind = _coerce_enum(self.kind, ObjectiveKind, "objective.kind")
        kernel = self.kernel.validate()
        rff_pairs = _coerce_optional_int(self.rff_pairs, "objective.rff_pairs")
        if rff_pairs is not None:
            if kind not in (ObjectiveKind.NLV_FEATURES, ObjectiveKind.RKE_FEATURES):
                raise ValueError(f"rff_pairs is not used by objective kind {kind.value}")
            if kernel.kind != KernelKind.GAUSSIAN:
                raise ValueError("random Fourier features require the gaussian kernel")
        weight = _coerce_finite(self.fidelity_weight, "objective.fidelity_weight")
        if weight < 0:
            raise ValueError("objective.fidelity_weight must be >= 0")
        tau = None if self.fidelity_tau is None else _coerce_positive(self.fidelity_tau, "objective.fidelity_tau")
        if weight > 0 and tau is None:
            raise ValueError("objective.fidelity_tau is required when fidelity_weight > 0")
        return ObjectiveSpec(
            kind=kind,
            kernel=kernel,
            rff_pairs=rff_pairs,
            quad_mode=_coerce_enum(self.quad_mode, QuadMode, "objective.quad_mode"),
            fidelity_weight=weight,
            fidelity_tau=tau,
            reference_floor=_coerce_positive(self.reference_floor, "objective.reference_floor"),
            eig_clamp=_coerce_positive(self.eig_clamp, "objective.eig_clamp"),
            q_min=_coerce_positive(self.q_min, "objective.q_min"),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": ObjectiveKind(self.kind).value,
            "kernel": self.kernel.to_dict(),
            "rff_pairs": self.rff_pairs,
            "quad_mode": QuadMode(self.quad_mode).value,
            "fidelity_weight": self.fidelity_weight,
            "fidelity_tau": self.fidelity_tau,
            "reference_floor": self.reference_floor,
            "eig_clamp": self.eig_clamp,
            "q_min": self.q_min,
        }


def objective_spec_from_dict(raw: Mapping[str, Any]) -> ObjectiveSpec:
    if not isinstance(raw, Mapping):
        raise ValueError("objective must be a mapping")
    defaults = ObjectiveSpec()
    kernel_raw = raw.get("kernel")
    spec = ObjectiveSpec(
        kind=_coerce_enum(raw.get("kind", defaults.kind.value), ObjectiveKind, "objective.kind"),
        kernel=KernelSpec.from_dict(kernel_raw) if kernel_raw is not None else defaults.kernel,
        rff_pairs=raw.get("rff_pairs"),
        quad_mode=_coerce_enum(raw.get("quad_mode", defaults.quad_mode.value), QuadMode, "objective.quad_mode"),
        fidelity_weight=raw.get("fidelity_weight", defaults.fidelity_weight),
        fidelity_tau=raw.get("fidelity_tau"),
        reference_floor=raw.get("reference_floor", defaults.reference_floor),
        eig_clamp=raw.get("eig_clamp", defaults.eig_clamp),
        q_min=raw.get("q_min", defaults.q_min),
    )
    return spec.validate()


__all__ = ["ObjectiveKind", "ObjectiveSpec", "objective_spec_from_dict"]
