"""Embedding fixtures drawn from the Gaussian specs of a config."""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path

from mixsel.bandit.arms import ArmKind, ArmSpec, population_sample
from mixsel.core.failures import EMPTY_INPUT, MixselError
from mixsel.core.rng import RngStreams
from mixsel.harness.artifacts import write_json
from mixsel.harness.embeddings import write_embeddings
from mixsel.harness.experiment import ExperimentConfig, ReferenceSpec, load_reference

DEFAULT_FIXTURE_SIZE = 2000
FIXTURE_SUFFIXES = (".mxe", ".csv")


def gen_synthetic(
    cfg: ExperimentConfig,
    out_dir: str | Path,
    *,
    size: int = DEFAULT_FIXTURE_SIZE,
    suffix: str = ".mxe",
) -> dict[str, str]:
    """Writes one file per Gaussian arm plus the reference, and a config that reads them back.

    Samples come from the config's population streams, so the files hold the
    same draws a run would use as its population sample.
    """
    if suffix not in FIXTURE_SUFFIXES:
        raise ValueError(f"suffix must be one of {', '.join(FIXTURE_SUFFIXES)}")
    if isinstance(size, bool) or not isinstance(size, int) or size < 1:
        raise ValueError("size must be an integer >= 1")
    target = Path(out_dir)
    streams = RngStreams(cfg.population_seed)
    written: dict[str, str] = {}
    arms: list[ArmSpec] = []
    for i, spec in enumerate(cfg.arms):
        if spec.kind != ArmKind.SYNTHETIC_GAUSSIAN:
            arms.append(replace(spec, path=str(cfg.resolve(spec.path).resolve())))
            continue
        # raw draws; the post map is applied again when the file is read
        raw = replace(spec, post_map="raw")
        name = f"arm_{i}{suffix}"
        write_embeddings(target / name, population_sample(raw, i, streams, size))
        written[f"arm_{i}"] = name
        arms.append(ArmSpec(kind=ArmKind.FILE_BACKED, path=name, post_map=spec.post_map, name=spec.name).validate())
    if not written:
        raise MixselError(EMPTY_INPUT, "config has no synthetic_gaussian arms to write")

    reference = cfg.reference
    if reference is not None and reference.path is None:
        name = f"reference{suffix}"
        write_embeddings(target / name, load_reference(cfg).samples)
        written["reference"] = name
        reference = ReferenceSpec(path=name)
    elif reference is not None:
        reference = ReferenceSpec(path=str(cfg.resolve(reference.path).resolve()))

    fixture_cfg = replace(cfg, arms=tuple(arms), reference=reference, out=None)
    write_json(target / "experiment.json", fixture_cfg.to_dict())
    written["config"] = "experiment.json"
    return written


__all__ = ["DEFAULT_FIXTURE_SIZE", "gen_synthetic"]
