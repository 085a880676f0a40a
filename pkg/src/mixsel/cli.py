from __future__ import annotations

import argparse
import sys
from typing import Any


def _dump(obj: Any) -> str:
    # Late import so `mixsel --help` stays cheap.
    from mixsel.core.hashing import canonical_json

    return canonical_json(obj)


def _emit(obj: Any) -> None:
    sys.stdout.write(_dump(obj) + "\n")
    sys.stdout.flush()


def _emit_stderr(text: str) -> None:
    # Human output should not break machine pipelines.
    sys.stderr.write(text.rstrip("\n") + "\n")
    sys.stderr.flush()


def _safe_cli_log(cfg: Any, *, action: str, outcome: str, details: dict[str, Any], level: str = "info") -> None:
    if cfg is None:
        return
    try:
        from mixsel.assurance.logging import append_jsonl_log_event

        append_jsonl_log_event(cfg=cfg, action=action, outcome=outcome, details=details, level=level)
    except Exception:  # pragma: no cover - best-effort logging
        pass


def _single(values: list | None, flag: str) -> Any:
    if values is None:
        return None
    if len(values) != 1:
        raise ValueError(f"{flag} takes one value here; use `sweep` for several")
    return values[0]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixsel", description="Online mixture selection over sample generators")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="Experiment config (JSON)")
    common.add_argument("--seed", type=int, nargs="+", default=None, help="Replicate seed(s); overrides the config")
    common.add_argument("--out", default=None, help="Output directory; overrides the config")

    overrides = argparse.ArgumentParser(add_help=False)
    overrides.add_argument("--algo", nargs="+", default=None, help="Algorithm name(s) to run")
    overrides.add_argument("--delta-l", type=float, nargs="+", default=None, help="Mixture-UCB confidence level")
    overrides.add_argument("--sigma", type=float, nargs="+", default=None, help="Gaussian kernel bandwidth")
    overrides.add_argument("--rff-pairs", type=int, nargs="+", default=None, help="Random Fourier feature pairs D")
    overrides.add_argument("--fidelity-weight", type=float, nargs="+", default=None, help="Fidelity weight w")
    overrides.add_argument("--jobs", type=int, default=None, help="Worker threads for replicates (default MIXSEL_JOBS)")

    sub.add_parser("run", help="Run every algorithm over every seed", parents=[common, overrides])
    sub.add_parser("sweep", help="Run the cartesian product of the sweep axes", parents=[common, overrides])

    oracle = sub.add_parser("oracle", help="Print the best fixed mixture of the population objective", parents=[common])
    oracle.add_argument("--sigma", type=float, default=None, help="Gaussian kernel bandwidth")
    oracle.add_argument("--rff-pairs", type=int, default=None, help="Random Fourier feature pairs D")
    oracle.add_argument("--fidelity-weight", type=float, default=None, help="Fidelity weight w")

    diag = sub.add_parser("diagnose", help="Check finished traces against the concentration bounds", parents=[common])
    diag.add_argument("--gamma", type=float, default=None, help="Count-floor rate; default is the computed interiority floor")
    diag.add_argument("--delta", type=float, default=0.05, help="Confidence level of the bounds")
    diag.add_argument(
        "--output",
        choices=("json", "text", "both"),
        default="json",
        help="json emits machine output to stdout; text emits the report to stderr; both emits both.",
    )

    gen = sub.add_parser("gen-synthetic", help="Write embedding fixtures from the config's Gaussian arms", parents=[common])
    gen.add_argument("--size", type=int, default=2000, help="Samples per file")
    gen.add_argument("--format", choices=("mxe", "csv"), default="mxe", help="Embedding file format")

    return parser


def _apply_overrides(exp: Any, args: argparse.Namespace, *, sweep: bool) -> Any:
    from dataclasses import replace

    seeds = args.seed
    if args.command == "oracle":
        return exp.with_overrides(
            seeds=seeds,
            sigma=args.sigma,
            rff_pairs=args.rff_pairs,
            fidelity_weight=args.fidelity_weight,
        )
    if args.command in ("diagnose", "gen-synthetic"):
        exp = exp.with_overrides(seeds=seeds)
        if args.command == "gen-synthetic" and seeds is not None:
            exp = replace(exp, population_seed=_single(seeds, "--seed"))
        return exp
    if sweep:
        from mixsel.harness.experiment import SweepAxes

        axes = exp.sweep.to_dict()
        for name in ("delta_l", "sigma", "rff_pairs", "fidelity_weight"):
            values = getattr(args, name)
            if values is not None:
                axes[name] = values
        exp = replace(exp, sweep=SweepAxes.from_dict(axes))
        return exp.with_overrides(seeds=seeds, algorithms=args.algo)
    return exp.with_overrides(
        seeds=seeds,
        algorithms=args.algo,
        delta_l=_single(args.delta_l, "--delta-l"),
        sigma=_single(args.sigma, "--sigma"),
        rff_pairs=_single(args.rff_pairs, "--rff-pairs"),
        fidelity_weight=_single(args.fidelity_weight, "--fidelity-weight"),
    )


def _check_targets(args: argparse.Namespace, exp: Any) -> None:
    """Output and sweep requirements are configuration errors, raised before any work starts."""
    if args.command == "gen-synthetic" and args.out is None:
        raise ValueError("gen-synthetic needs --out")
    if args.command in ("run", "sweep", "diagnose") and args.out is None and not exp.out:
        raise ValueError(f"{args.command} needs --out (or 'out' in the config)")
    if args.command == "sweep" and exp.sweep.empty:
        raise ValueError("sweep needs at least one axis (delta_l, sigma, rff_pairs or fidelity_weight)")


def main(argv: list[str] | None = None) -> int:
    from mixsel.core.failures import EXIT_CONFIG, EXIT_OK

    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse has already printed usage
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG

    cfg = None
    phase = "config"
    try:
        from mixsel.assurance.logging import RunLogger
        from mixsel.config import load_config
        from mixsel.harness.experiment import ExperimentConfig

        cfg = load_config()
        logger = RunLogger(cfg=cfg).bind(command=args.command)
        exp = _apply_overrides(ExperimentConfig.load(args.config), args, sweep=args.command == "sweep")
        jobs = getattr(args, "jobs", None) or cfg.jobs
        if jobs < 1:
            raise ValueError("--jobs must be >= 1")
        _check_targets(args, exp)
        phase = "run"

        if args.command == "run":
            from mixsel.harness.experiment import run_experiment

            result = run_experiment(exp, args.out, jobs=jobs, logger=logger)
            payload = {"ok": True, **result.to_dict()}
            _safe_cli_log(cfg, action="run", outcome="ok", details={"out": payload["out"], "runs": payload["runs"]})
            _emit(payload)
            return EXIT_OK

        if args.command == "sweep":
            from mixsel.harness.experiment import run_sweep

            out_dir, rows = run_sweep(exp, args.out, jobs=jobs, logger=logger)
            _safe_cli_log(cfg, action="sweep", outcome="ok", details={"out": str(out_dir), "rows": len(rows)})
            _emit({"ok": True, "out": str(out_dir), "rows": rows})
            return EXIT_OK

        if args.command == "oracle":
            from mixsel.harness.experiment import run_oracle

            oracle = run_oracle(exp, logger=logger)
            _safe_cli_log(cfg, action="oracle", outcome="ok", details={"value": oracle["value"]})
            _emit({"ok": True, "oracle": oracle})
            return EXIT_OK

        if args.command == "diagnose":
            from mixsel.diagnostics.report import render_report
            from mixsel.harness.diagnose import diagnose

            report = diagnose(exp, args.out, gamma=args.gamma, delta=args.delta)
            _safe_cli_log(cfg, action="diagnose", outcome="ok" if report["ok"] else "violation", details={"traces": len(report["traces"])})
            if args.output in ("json", "both"):
                _emit({"ok": True, "report": report})
            if args.output in ("text", "both"):
                _emit_stderr(render_report(report))
            return EXIT_OK

        if args.command == "gen-synthetic":
            from mixsel.harness.synthetic import gen_synthetic
            files = gen_synthetic(exp, args.out, size=args.size, suffix=f".{args.format}")
            _safe_cli_log(cfg, action="gen_synthetic", outcome="ok", details={"files": files})
            _emit({"ok": True, "out": args.out, "files": files})
            return EXIT_OK

        raise ValueError(f"Unknown command: {args.command}")
    except Exception as exc:
        from mixsel.core.failures import exit_code_for, map_exception

        err = map_exception(exc, phase=phase)
        _safe_cli_log(cfg, action=args.command, outcome="error", details={"code": err.code, "detail": err.detail}, level="error")
        _emit({"ok": False, "code": err.code, "error": str(err)})
        return exit_code_for(err, phase=phase)


__all__ = ["main"]
