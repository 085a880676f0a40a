"""Experiment configuration and orchestration.

An experiment is one instance (arms, reference, objective) run by several
algorithms over several replicate seeds. Replicates share a
``BanditEnvironment`` so population samples and oracles are computed once.
"""

from __future__ import annotations

import itertools
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from mixsel.assurance.logging import RunLogger
from mixsel.bandit.arms import ArmKind, ArmSpec
from mixsel.bandit.policies import Algorithm, AlgorithmSpec, BanditConfig, feature_map_for, run_bandit
from mixsel.bandit.population import DEFAULT_ORACLE_RESOLUTION, DEFAULT_POPULATION_RFF_PAIRS, BanditEnvironment
from mixsel.bandit.trace import BanditTrace
from mixsel.core.failures import CONFIG_ERROR, MixselError
from mixsel.core.rng import RngStreams
from mixsel.harness.artifacts import (
    SUMMARY_HEADER,
    SummaryRow,
    render_score_svg,
    score_series,
    summarize,
    write_csv,
    write_json,
    write_manifest,
    write_summary_csv,
    write_text,
    write_trace_csv,
)
from mixsel.harness.embeddings import load_embeddings
from mixsel.objectives.empirical import ReferenceSet
from mixsel.objectives.spec import ObjectiveSpec, objective_spec_from_dict
from mixsel.solver import EGConfig

DEFAULT_REFERENCE_SIZE = 1000
SWEEP_AXES = ("delta_l", "sigma", "rff_pairs", "fidelity_weight")
_AXIS_TAGS = {"delta_l": "dl", "sigma": "sigma", "rff_pairs": "rff", "fidelity_weight": "w"}


def _as_int(value: Any, field_name: str, *, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{field_name} must be an integer")
    if value < minimum:
        raise ValueError(f"{field_name} must be >= {minimum}")
    return value


@dataclass(frozen=True)
class ReferenceSpec:
    """The real set: an embedding file, or a Gaussian drawn from the population seed."""

    path: str | None = None
    mean: tuple[float, ...] | None = None
    cov: tuple[tuple[float, ...], ...] | None = None
    size: int = DEFAULT_REFERENCE_SIZE

    def validate(self) -> "ReferenceSpec":
        if self.path is not None:
            if not str(self.path).strip():
                raise ValueError("reference.path cannot be empty")
            return ReferenceSpec(path=str(self.path))
        if self.mean is None or self.cov is None:
            raise ValueError("reference needs a path, or a mean and cov")
        # reuse the arm checks for the Gaussian form
        gaussian = ArmSpec(kind=ArmKind.SYNTHETIC_GAUSSIAN, mean=self.mean, cov=self.cov).validate()
        return ReferenceSpec(mean=gaussian.mean, cov=gaussian.cov, size=_as_int(self.size, "reference.size", minimum=2))

    def to_dict(self) -> dict[str, Any]:
        if self.path is not None:
            return {"path": self.path}
        return {"mean": list(self.mean), "cov": [list(row) for row in self.cov], "size": self.size}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "ReferenceSpec":
        if not isinstance(raw, Mapping):
            raise ValueError("reference must be a mapping")
        return cls(
            path=raw.get("path"),
            mean=raw.get("mean"),
            cov=raw.get("cov"),
            size=raw.get("size", DEFAULT_REFERENCE_SIZE),
        ).validate()


@dataclass(frozen=True)
class SweepAxes:
    delta_l: tuple[float, ...] = ()
    sigma: tuple[float, ...] = ()
    rff_pairs: tuple[int, ...] = ()
    fidelity_weight: tuple[float, ...] = ()

    @property
    def empty(self) -> bool:
        return not any(getattr(self, name) for name in SWEEP_AXES)

    def points(self) -> list[dict[str, Any]]:
        """Cartesian product of the non-empty axes, in axis order."""
        axes = [(name, getattr(self, name)) for name in SWEEP_AXES if getattr(self, name)]
        if not axes:
            return []
        names = [name for name, _ in axes]
        return [dict(zip(names, combo)) for combo in itertools.product(*(values for _, values in axes))]

    def to_dict(self) -> dict[str, list]:
        return {name: list(getattr(self, name)) for name in SWEEP_AXES if getattr(self, name)}

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> "SweepAxes":
        if not isinstance(raw, Mapping):
            raise ValueError("sweep must be a mapping")
        unknown = sorted(set(raw) - set(SWEEP_AXES))
        if unknown:
            raise ValueError(f"Unknown sweep axes: {', '.join(unknown)}. Allowed: {', '.join(SWEEP_AXES)}")
        values: dict[str, tuple] = {}
        for name in SWEEP_AXES:
            items = raw.get(name) or []
            if not isinstance(items, (list, tuple)):
                raise ValueError(f"sweep.{name} must be a list")
            for item in items:
                if isinstance(item, bool) or not isinstance(item, (int, float)) or not math.isfinite(item):
                    raise ValueError(f"sweep.{name} values must be finite numbers")
            if name == "rff_pairs":
                values[name] = tuple(_as_int(v, "sweep.rff_pairs", minimum=1) for v in items)
            else:
                values[name] = tuple(float(v) for v in items)
        return cls(**values)


@dataclass(frozen=True)
class ExperimentConfig:
    arms: tuple[ArmSpec, ...]
    objective: ObjectiveSpec
    name: str = "experiment"
    reference: ReferenceSpec | None = None
    horizon: int = 500
    warm_start: int = 5
    algorithms: tuple[AlgorithmSpec, ...] = (AlgorithmSpec(),)
    eg: EGConfig = field(default_factory=EGConfig)
    seeds: tuple[int, ...] = (0,)
    out: str | None = None
    population_size: int | None = None
    population_seed: int = 0
    population_rff_pairs: int = DEFAULT_POPULATION_RFF_PAIRS
    oracle_resolution: int = DEFAULT_ORACLE_RESOLUTION
    track_population: bool = True
    sweep: SweepAxes = field(default_factory=SweepAxes)
    # directory relative paths are resolved against; not serialized
    base_dir: str = field(default=".", compare=False)

    @property
    def num_arms(self) -> int:
        return len(self.arms)

    def resolve(self, path: str) -> Path:
        target = Path(path).expanduser()
        return target if target.is_absolute() else Path(self.base_dir) / target

    def validate(self) -> "ExperimentConfig":
        if not self.arms:
            raise ValueError("at least one arm is required")
        if not self.name or not str(self.name).strip():
            raise ValueError("name cannot be empty")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        labels = [a.label for a in self.algorithms]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate algorithm labels: {labels}")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        for seed in self.seeds:
            _as_int(seed, "seeds", minimum=0)
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        _as_int(self.population_seed, "population_seed", minimum=0)
        _as_int(self.population_rff_pairs, "population_rff_pairs", minimum=1)
        _as_int(self.oracle_resolution, "oracle_resolution", minimum=0)
        if self.population_size is not None:
            _as_int(self.population_size, "population_size", minimum=2)
        if not isinstance(self.track_population, bool):
            raise ValueError("track_population must be a boolean")
        if self.objective.needs_reference and self.reference is None:
            raise ValueError(f"objective {self.objective.label} requires a reference")
        for algorithm in self.algorithms:
            self.bandit_config(algorithm, self.seeds[0]).validate()
        return self

    def bandit_config(self, algorithm: AlgorithmSpec, seed: int) -> BanditConfig:
        return BanditConfig(
            arms=self.arms,
            objective=self.objective,
            horizon=self.horizon,
            warm_start=self.warm_start,
            algorithm=algorithm,
            eg=self.eg,
            seed=seed,
            track_population=self.track_population,
        )

    def with_overrides(
        self,
        *,
        seeds: Sequence[int] | None = None,
        out: str | None = None,
        algorithms: Sequence[str] | None = None,
        delta_l: float | None = None,
        sigma: float | None = None,
        rff_pairs: int | None = None,
        fidelity_weight: float | None = None,
    ) -> "ExperimentConfig":
        cfg = self
        if seeds is not None:
            cfg = replace(cfg, seeds=tuple(seeds))
        if out is not None:
            cfg = replace(cfg, out=out)
        if algorithms is not None:
            known = {Algorithm(a.name).value: a for a in cfg.algorithms}
            chosen = []
            for name in algorithms:
                spec = AlgorithmSpec.from_dict(name)
                chosen.append(known.get(Algorithm(spec.name).value, spec))
            cfg = replace(cfg, algorithms=tuple(chosen))
        if delta_l is not None:
            cfg = replace(
                cfg,
                algorithms=tuple(
                    replace(a, delta_l=delta_l).validate() if Algorithm(a.name) == Algorithm.MIXTURE_UCB else a
                    for a in cfg.algorithms
                ),
            )
        objective = cfg.objective
        if sigma is not None:
            objective = replace(objective, kernel=objective.kernel.with_bandwidth(sigma))
        if rff_pairs is not None:
            objective = replace(objective, rff_pairs=rff_pairs)
        if fidelity_weight is not None:
            objective = replace(objective, fidelity_weight=fidelity_weight)
        if objective is not cfg.objective:
            cfg = replace(cfg, objective=objective.validate())
        return cfg.validate()

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "name": self.name,
            "arms": [arm.to_dict() for arm in self.arms],
            "objective": self.objective.to_dict(),
            "horizon": self.horizon,
            "warm_start": self.warm_start,
            "algorithms": [a.to_dict() for a in self.algorithms],
            "eg": self.eg.to_dict(),
            "seeds": list(self.seeds),
            "population_size": self.population_size,
            "population_seed": self.population_seed,
            "population_rff_pairs": self.population_rff_pairs,
            "oracle_resolution": self.oracle_resolution,
            "track_population": self.track_population,
        }
        if self.reference is not None:
            payload["reference"] = self.reference.to_dict()
        if self.out is not None:
            payload["out"] = self.out
        if not self.sweep.empty:
            payload["sweep"] = self.sweep.to_dict()
        return payload

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], *, base_dir: str | Path = ".") -> "ExperimentConfig":
        if not isinstance(raw, Mapping):
            raise ValueError("experiment config must be a JSON object")
        arms_raw = raw.get("arms")
        if not isinstance(arms_raw, list) or not arms_raw:
            raise ValueError("arms must be a non-empty list")
        if "objective" not in raw:
            raise ValueError("objective is required")
        algorithms_raw = raw.get("algorithms", [Algorithm.MIXTURE_GREEDY.value])
        if not isinstance(algorithms_raw, list):
            raise ValueError("algorithms must be a list")
        seeds_raw = raw.get("seeds", [0])
        if not isinstance(seeds_raw, list):
            raise ValueError("seeds must be a list")
        reference_raw = raw.get("reference")
        cfg = cls(
            name=raw.get("name", "experiment"),
            arms=tuple(ArmSpec.from_dict(arm) for arm in arms_raw),
            objective=objective_spec_from_dict(raw["objective"]),
            reference=ReferenceSpec.from_dict(reference_raw) if reference_raw is not None else None,
            horizon=raw.get("horizon", 500),
            warm_start=raw.get("warm_start", 5),
            algorithms=tuple(AlgorithmSpec.from_dict(a) for a in algorithms_raw),
            eg=EGConfig.from_dict(raw.get("eg", {})),
            seeds=tuple(seeds_raw),
            out=raw.get("out"),
            population_size=raw.get("population_size"),
            population_seed=raw.get("population_seed", 0),
            population_rff_pairs=raw.get("population_rff_pairs", DEFAULT_POPULATION_RFF_PAIRS),
            oracle_resolution=raw.get("oracle_resolution", DEFAULT_ORACLE_RESOLUTION),
            track_population=raw.get("track_population", True),
            sweep=SweepAxes.from_dict(raw.get("sweep", {})),
            base_dir=str(base_dir),
        )
        return cfg.validate()

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        target = Path(path)
        try:
            raw = json.loads(target.read_text(encoding="utf-8"))
            return cls.from_dict(raw, base_dir=target.parent)
        except FileNotFoundError as exc:
            raise MixselError(CONFIG_ERROR, f"config file not found: {target}") from exc
        except json.JSONDecodeError as exc:
            raise MixselError(CONFIG_ERROR, f"{target}: invalid JSON ({exc})") from exc
        except (ValueError, TypeError, KeyError) as exc:
            raise MixselError(CONFIG_ERROR, f"{target}: {exc}") from exc


def _load_file(cfg: ExperimentConfig, path: str, role: str) -> np.ndarray:
    target = cfg.resolve(path)
    try:
        return load_embeddings(target)
    except FileNotFoundError as exc:
        raise MixselError(CONFIG_ERROR, f"{role} embedding file not found: {target}") from exc
    except MixselError as exc:
        raise MixselError(CONFIG_ERROR, f"{role}: {exc}") from exc


def load_reference(cfg: ExperimentConfig) -> ReferenceSet | None:
    spec = cfg.reference
    if spec is None:
        return None
    if spec.path is not None:
        return ReferenceSet.from_samples(_load_file(cfg, spec.path, "reference"))
    rng = RngStreams(cfg.population_seed).stream("population:reference")
    return ReferenceSet.from_samples(rng.multivariate_normal(np.asarray(spec.mean), np.asarray(spec.cov), size=spec.size))


def build_environment(cfg: ExperimentConfig, *, logger: RunLogger | None = None) -> BanditEnvironment:
    """Loads every referenced file; a missing or malformed file is a configuration error."""
    pools = {
        i: _load_file(cfg, spec.path, f"arm {i}")
        for i, spec in enumerate(cfg.arms)
        if spec.kind == ArmKind.FILE_BACKED
    }
    return BanditEnvironment(
        cfg.arms,
        cfg.objective,
        reference=load_reference(cfg),
        pools=pools,
        population_size=cfg.population_size,
        population_seed=cfg.population_seed,
        population_rff_pairs=cfg.population_rff_pairs,
        eg=cfg.eg,
        oracle_resolution=cfg.oracle_resolution,
        logger=logger,
    )


@dataclass(frozen=True)
class ExperimentResult:
    out_dir: Path
    traces: tuple[BanditTrace, ...]
    summary: tuple[SummaryRow, ...]
    files: tuple[Path, ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "out": str(self.out_dir),
            "runs": len(self.traces),
            "summary": [row.to_dict() for row in self.summary],
            "files": sorted(p.name for p in self.files),
        }


def run_replicates(
    cfg: ExperimentConfig,
    env: BanditEnvironment,
    *,
    jobs: int = 1,
    logger: RunLogger | None = None,
) -> list[BanditTrace]:
    """All (algorithm, seed) runs, returned in that order whatever the worker count."""
    logger = logger or RunLogger.disabled()
    tasks = [(algorithm, seed) for algorithm in cfg.algorithms for seed in cfg.seeds]

    def run_one(task: tuple[AlgorithmSpec, int]) -> BanditTrace:
        algorithm, seed = task
        return run_bandit(cfg.bandit_config(algorithm, seed), env, logger=logger)

    if jobs <= 1 or len(tasks) == 1:
        return [run_one(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(run_one, tasks))


def run_experiment(
    cfg: ExperimentConfig,
    out: str | Path | None = None,
    *,
    jobs: int = 1,
    logger: RunLogger | None = None,
    env: BanditEnvironment | None = None,
) -> ExperimentResult:
    target = out if out is not None else (cfg.resolve(cfg.out) if cfg.out else None)
    if target is None:
        raise ValueError("an output directory is required (--out or config 'out')")
    out_dir = Path(target)
    logger = (logger or RunLogger.disabled()).bind(experiment=cfg.name)
    logger.info("experiment", "start", out=str(out_dir), algorithms=[a.label for a in cfg.algorithms], seeds=list(cfg.seeds))
    env = env or build_environment(cfg, logger=logger)
    traces = run_replicates(cfg, env, jobs=jobs, logger=logger)

    out_dir.mkdir(parents=True, exist_ok=True)
    files = [write_trace_csv(out_dir, trace) for trace in traces]
    summary = summarize(traces)
    files.append(write_summary_csv(out_dir / "summary.csv", summary))
    files.append(write_text(out_dir / "score.svg", render_score_svg(score_series(traces), title=f"{cfg.name}: score vs round")))
    config_payload = cfg.to_dict()
    files.append(write_json(out_dir / "config.json", config_payload))
    write_manifest(out_dir, config_payload, files, population=env.describe())
    logger.info("experiment", "ok", runs=len(traces))
    return ExperimentResult(out_dir=out_dir, traces=tuple(traces), summary=tuple(summary), files=tuple(files))


def sweep_dirname(point: Mapping[str, Any]) -> str:
    return "_".join(f"{_AXIS_TAGS[name]}{value:g}" for name, value in point.items())


def run_sweep(
    cfg: ExperimentConfig,
    out: str | Path | None = None,
    *,
    jobs: int = 1,
    logger: RunLogger | None = None,
) -> tuple[Path, list[dict[str, Any]]]:
    """Runs every point of the sweep grid into its own sub-directory."""
    target = out if out is not None else (cfg.resolve(cfg.out) if cfg.out else None)
    if target is None:
        raise ValueError("an output directory is required (--out or config 'out')")
    points = cfg.sweep.points()
    if not points:
        raise ValueError("sweep needs at least one axis (delta_l, sigma, rff_pairs or fidelity_weight)")
    out_dir = Path(target)
    logger = logger or RunLogger.disabled()
    axis_names = [name for name in SWEEP_AXES if name in points[0]]
    rows: list[list[Any]] = []
    for point in points:
        point_cfg = cfg.with_overrides(**point)
        result = run_experiment(point_cfg, out_dir / sweep_dirname(point), jobs=jobs, logger=logger.bind(sweep=point))
        for row in result.summary:
            rows.append([point[name] for name in axis_names] + row.to_row())
    write_csv(out_dir / "sweep_summary.csv", axis_names + SUMMARY_HEADER, rows)
    records = [dict(zip(axis_names + SUMMARY_HEADER, row)) for row in rows]
    return out_dir, records


def run_oracle(
    cfg: ExperimentConfig,
    *,
    seed: int | None = None,
    env: BanditEnvironment | None = None,
    logger: RunLogger | None = None,
) -> dict[str, Any]:
    """alpha* and F* of the population objective (the random-feature map follows ``seed``)."""
    env = env or build_environment(cfg, logger=logger)
    seed = cfg.seeds[0] if seed is None else seed
    bandit_cfg = cfg.bandit_config(cfg.algorithms[0], seed)
    model = env.population(feature_map_for(bandit_cfg, env.dim, RngStreams(seed)))
    return {"objective": cfg.objective.label, "seed": seed, "population": env.describe(), **model.oracle.to_dict()}


__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "ReferenceSpec",
    "SweepAxes",
    "build_environment",
    "load_reference",
    "run_experiment",
    "run_oracle",
    "run_replicates",
    "run_sweep",
    "sweep_dirname",
]
