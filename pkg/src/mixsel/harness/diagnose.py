"""Post-hoc diagnostics over finished runs."""

from __future__ import annotations

from pathlib import Path
from typing import Any

import numpy as np

from mixsel.bandit.arms import ArmKind
from mixsel.bandit.policies import feature_map_for
from mixsel.core.failures import DIM_MISMATCH, EMPTY_INPUT, MixselError
from mixsel.core.rng import RngStreams
from mixsel.diagnostics.bounds import gamma_min_nlv, hoeffding_radius, smallest_warm_start, theta_radius
from mixsel.diagnostics.checks import count_floor, fd_structure, innovation_structure
from mixsel.harness.artifacts import TRACE_NAME, read_trace_csv
from mixsel.harness.experiment import ExperimentConfig, build_environment
from mixsel.objectives.empirical import FrechetObjective, VendiFeatureObjective

DEFAULT_DELTA = 0.05


def find_traces(target: str | Path) -> list[Path]:
    path = Path(target)
    if path.is_file():
        return [path]
    if not path.is_dir():
        raise FileNotFoundError(f"no traces at {path}")
    found = sorted(p for p in path.iterdir() if TRACE_NAME.match(p.name))
    if not found:
        raise MixselError(EMPTY_INPUT, f"no trace_*_seed*.csv files in {path}")
    return found


def _structure_section(cfg: ExperimentConfig, delta: float, gamma_override: float | None) -> tuple[dict[str, Any], float]:
    m, T, M = cfg.num_arms, cfg.horizon, cfg.warm_start
    section: dict[str, Any] = {
        "hoeffding_radius": hoeffding_radius(M, m, T, delta),
        "theta_radius": theta_radius(M, m, T, delta),
    }
    gamma = 0.0 if gamma_override is None else gamma_override
    env = build_environment(cfg)
    bandit_cfg = cfg.bandit_config(cfg.algorithms[0], cfg.seeds[0])
    model = env.population(feature_map_for(bandit_cfg, env.dim, RngStreams(cfg.seeds[0])))
    section["oracle"] = {"alpha": list(model.oracle.alpha), "value": model.oracle.value}
    objective = model.objective
    if isinstance(objective, VendiFeatureObjective):
        try:
            struct = innovation_structure(objective.second_moments())
        except MixselError as exc:
            section["nlv_structure"] = {"error": str(exc)}
        else:
            w = cfg.objective.fidelity_weight
            nlv: dict[str, Any] = dict(struct.to_dict())
            nlv["smallest_warm_start"] = smallest_warm_start(struct, T, delta, w)
            try:
                floor = gamma_min_nlv(struct, section["hoeffding_radius"], w)
                nlv["gamma_min"] = floor
                if gamma_override is None:
                    gamma = floor
            except MixselError as exc:
                nlv["gamma_min"] = None
                nlv["gamma_error"] = str(exc)
            section["nlv_structure"] = nlv
    elif isinstance(objective, FrechetObjective) and env.reference is not None:
        if all(spec.kind == ArmKind.SYNTHETIC_GAUSSIAN for spec in cfg.arms):
            struct = fd_structure(
                objective,
                model.oracle,
                arm_covariances=[np.asarray(spec.cov) for spec in cfg.arms],
                reference_cov=env.reference.moments.cov,
                samples=env.population_samples(),
                eg=cfg.eg,
            )
            section["fd_structure"] = struct.to_dict()
    section["gamma"] = gamma
    return section, gamma


def diagnose(
    cfg: ExperimentConfig,
    target: str | Path | None = None,
    *,
    gamma: float | None = None,
    delta: float = DEFAULT_DELTA,
) -> dict[str, Any]:
    """Count-floor checks for every trace plus the config's concentration radii and structure."""
    source = target if target is not None else (cfg.resolve(cfg.out) if cfg.out else None)
    if source is None:
        raise ValueError("diagnose needs --out (a run directory or trace file)")
    paths = find_traces(source)
    structure, floor = _structure_section(cfg, delta, gamma)
    traces: dict[str, Any] = {}
    passed = True
    for path in paths:
        trace = read_trace_csv(path, warm_start=cfg.warm_start)
        if trace.num_arms != cfg.num_arms:
            raise MixselError(DIM_MISMATCH, f"{path}: trace has {trace.num_arms} arms, config has {cfg.num_arms}")
        report = count_floor(trace, floor, delta)
        passed = passed and report.passed
        traces[path.name] = {
            "rounds": trace.horizon,
            "counts": list(trace.counts),
            "min_share": float(min(trace.counts) / sum(trace.counts)),
            "count_floor": report.to_dict(),
        }
    return {"ok": passed, "delta": delta, "structure": structure, "traces": traces}


__all__ = ["diagnose", "find_traces"]
