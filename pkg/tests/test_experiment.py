import json
import math
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np

from mixsel.core.failures import CONFIG_ERROR, EMPTY_INPUT, MixselError
from mixsel.harness.artifacts import SummaryRow, read_trace_csv, render_score_svg, summarize
from mixsel.harness.diagnose import diagnose
from mixsel.harness.experiment import (
    ExperimentConfig,
    SweepAxes,
    build_environment,
    run_experiment,
    run_oracle,
    run_sweep,
    sweep_dirname,
)
from mixsel.harness.synthetic import gen_synthetic
from mixsel.objectives.spec import ObjectiveKind


def _raw_config(**overrides) -> dict:
    raw = {
        "name": "fd_pair",
        "arms": [
            {"mean": [1.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
            {"mean": [-1.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]]},
        ],
        "reference": {"mean": [0.0, 0.0], "cov": [[1.0, 0.0], [0.0, 1.0]], "size": 200},
        "objective": {"kind": "fd", "fidelity_tau": 1.0},
        "horizon": 8,
        "warm_start": 3,
        "algorithms": ["mixture_greedy", "one_arm_greedy"],
        "eg": {"steps": 30},
        "seeds": [0, 1],
    }
    raw.update(overrides)
    return raw


def _config(**overrides) -> ExperimentConfig:
    return ExperimentConfig.from_dict(_raw_config(**overrides))


def _tree_bytes(root: Path) -> dict[str, bytes]:
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class ExperimentConfigTest(unittest.TestCase):
    def test_round_trip(self) -> None:
        cfg = _config(sweep={"delta_l": [0.1, 0.01]}, out="runs")
        self.assertEqual(ExperimentConfig.from_dict(cfg.to_dict()), cfg)
        self.assertEqual(cfg.objective.kind, ObjectiveKind.FD)
        self.assertEqual([a.label for a in cfg.algorithms], ["mixture_greedy", "one_arm_greedy"])

    def test_invalid_configs(self) -> None:
        raw = _raw_config()
        del raw["reference"]
        cases = [
            raw,
            _raw_config(seeds=[1, 1]),
            _raw_config(algorithms=["mixture_greedy", "mixture_greedy"]),
            _raw_config(horizon=0),
            _raw_config(arms=[]),
            _raw_config(sweep={"bandwidth": [1.0]}),
            _raw_config(algorithms=["thompson"]),
        ]
        for case in cases:
            with self.assertRaises(ValueError):
                ExperimentConfig.from_dict(case)

    def test_load_errors_are_config_errors(self) -> None:
        with TemporaryDirectory() as tmpdir:
            missing = Path(tmpdir) / "absent.json"
            broken = Path(tmpdir) / "broken.json"
            broken.write_text("{", encoding="utf-8")
            invalid = Path(tmpdir) / "invalid.json"
            invalid.write_text(json.dumps(_raw_config(horizon=-1)), encoding="utf-8")
            for path in (missing, broken, invalid):
                with self.assertRaises(MixselError) as ctx:
                    ExperimentConfig.load(path)
                self.assertEqual(ctx.exception.code, CONFIG_ERROR)
                self.assertIn(str(path), ctx.exception.detail)

    def test_paths_resolve_against_config_dir(self) -> None:
        with TemporaryDirectory() as tmpdir:
            path = Path(tmpdir) / "exp.json"
            path.write_text(json.dumps(_raw_config(out="runs")), encoding="utf-8")
            cfg = ExperimentConfig.load(path)
        self.assertEqual(cfg.resolve(cfg.out), Path(tmpdir) / "runs")

    def test_overrides(self) -> None:
        cfg = _config(algorithms=["mixture_greedy", {"name": "mixture_ucb", "delta_l": 0.1}])
        cfg = replace_objective_kind(cfg, "quadratic")
        overridden = cfg.with_overrides(delta_l=0.01, sigma=2.0, seeds=[5])
        self.assertEqual([a.delta_l for a in overridden.algorithms], [0.05, 0.01])
        self.assertEqual(overridden.objective.kernel.bandwidth, 2.0)
        self.assertEqual(overridden.seeds, (5,))
        with self.assertRaises(ValueError):
            cfg.with_overrides(rff_pairs=16)
        chosen = cfg.with_overrides(algorithms=["mixture_ucb"])
        self.assertEqual([a.label for a in chosen.algorithms], ["mixture_ucb_dl0.1"])

    def test_missing_embedding_file(self) -> None:
        with TemporaryDirectory() as tmpdir:
            raw = _raw_config()
            raw["arms"][0] = {"path": "missing.mxe"}
            cfg = ExperimentConfig.from_dict(raw, base_dir=tmpdir)
            with self.assertRaises(MixselError) as ctx:
                build_environment(cfg)
        self.assertEqual(ctx.exception.code, CONFIG_ERROR)
        self.assertIn("arm 0", ctx.exception.detail)


def replace_objective_kind(cfg: ExperimentConfig, kind: str) -> ExperimentConfig:
    raw = cfg.to_dict()
    raw["objective"]["kind"] = kind
    raw["warm_start"] = 3
    return ExperimentConfig.from_dict(raw)


class SweepAxesTest(unittest.TestCase):
    def test_points_follow_axis_order(self) -> None:
        axes = SweepAxes.from_dict({"fidelity_weight": [0.0, 0.5], "delta_l": [0.1]})
        self.assertEqual(axes.points(), [{"delta_l": 0.1, "fidelity_weight": 0.0}, {"delta_l": 0.1, "fidelity_weight": 0.5}])
        self.assertEqual(sweep_dirname(axes.points()[1]), "dl0.1_w0.5")
        self.assertTrue(SweepAxes().empty)
        with self.assertRaises(ValueError):
            SweepAxes.from_dict({"rff_pairs": [0]})


class RunExperimentTest(unittest.TestCase):
    def test_writes_expected_files(self) -> None:
        cfg = _config()
        with TemporaryDirectory() as tmpdir:
            out = Path(tmpdir) / "out"
            result = run_experiment(cfg, out)
            names = sorted(p.name for p in out.iterdir())
            self.assertEqual(
                names,
                [
                    "config.json",
                    "manifest.json",
                    "score.svg",
                    "summary.csv",
                    "trace_mixture_greedy_seed0.csv",
                    "trace_mixture_greedy_seed1.csv",
                    "trace_one_arm_greedy_seed0.csv",
                    "trace_one_arm_greedy_seed1.csv",
                ],
            )
            trace_path = out / "trace_mixture_greedy_seed0.csv"
            lines = trace_path.read_text(encoding="utf-8").splitlines()
            self.assertEqual(len(lines), cfg.horizon + 1)
            self.assertEqual(lines[0], "t,I_t,alpha_0,alpha_1,emp_loss,pop_loss,cum_regret")
            summary = (out / "summary.csv").read_text(encoding="utf-8").splitlines()
            self.assertEqual(len(summary), 3)
            manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
            self.assertEqual(set(manifest["files"]), set(names) - {"manifest.json"})
            self.assertEqual(manifest["population"]["method"], "exact_moments")
            self.assertEqual(json.loads((out / "config.json").read_text(encoding="utf-8"))["population_rff_pairs"], 256)
            reread = read_trace_csv(trace_path, warm_start=cfg.warm_start)
            original = result.traces[0]
            np.testing.assert_array_equal(reread.arms, original.arms)
            np.testing.assert_array_equal(reread.alphas, original.alphas)
            self.assertEqual(reread.counts, original.counts)
            self.assertTrue(math.isnan(reread.final_score))
            self.assertEqual(result.to_dict()["runs"], 4)

    def test_outputs_are_deterministic_and_worker_independent(self) -> None:
        cfg = _config()
        with TemporaryDirectory() as tmpdir:
            first = run_experiment(cfg, Path(tmpdir) / "a").out_dir
            second = run_experiment(cfg, Path(tmpdir) / "b").out_dir
            parallel = run_experiment(cfg, Path(tmpdir) / "c", jobs=4).out_dir
            self.assertEqual(_tree_bytes(first), _tree_bytes(second))
            self.assertEqual(_tree_bytes(first), _tree_bytes(parallel))

    def test_requires_output_directory(self) -> None:
        with self.assertRaises(ValueError):
            run_experiment(_config())

    def test_sweep_writes_one_directory_per_point(self) -> None:
        cfg = _config(sweep={"fidelity_weight": [0.0, 0.5]}, algorithms=["mixture_greedy"], seeds=[0])
        with TemporaryDirectory() as tmpdir:
            out_dir, records = run_sweep(cfg, Path(tmpdir) / "sweep")
            self.assertTrue((out_dir / "w0" / "summary.csv").is_file())
            self.assertTrue((out_dir / "w0.5" / "summary.csv").is_file())
            lines = (out_dir / "sweep_summary.csv").read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0].split(",")[:2], ["fidelity_weight", "algorithm"])
        self.assertEqual(len(lines), 3)
        self.assertEqual([r["fidelity_weight"] for r in records], [0.0, 0.5])

    def test_sweep_without_axes(self) -> None:
        with TemporaryDirectory() as tmpdir:
            with self.assertRaises(ValueError):
                run_sweep(_config(), tmpdir)


class OracleTest(unittest.TestCase):
    def test_symmetric_fd_oracle(self) -> None:
        payload = run_oracle(_config())
        self.assertEqual(payload["objective"], "fd")
        np.testing.assert_allclose(payload["alpha"], [0.5, 0.5], atol=0.1)
        self.assertLess(payload["value"], 0.9 * min(payload["arm_scores"]))

    def test_symmetric_kernel_distance_oracle(self) -> None:
        cfg = _config(objective={"kind": "quadratic", "quad_mode": "kd"}, population_size=500)
        payload = run_oracle(cfg)
        self.assertEqual(payload["objective"], "quadratic_kd")
        np.testing.assert_allclose(payload["alpha"], [0.5, 0.5], atol=0.05)

    def test_default_kernel_distance_population_is_large(self) -> None:
        payload = run_oracle(_config(objective={"kind": "quadratic", "quad_mode": "kd"}))
        self.assertEqual(payload["population"]["method"], "shifted_pairs")
        self.assertEqual(payload["population"]["size_per_arm"], [100_000, 100_000])
        np.testing.assert_allclose(payload["alpha"], [0.5, 0.5], atol=0.05)


class SyntheticFixtureTest(unittest.TestCase):
    def test_fixture_round_trip(self) -> None:
        with TemporaryDirectory() as tmpdir:
            written = gen_synthetic(_config(), tmpdir, size=100, suffix=".csv")
            self.assertEqual(written, {"arm_0": "arm_0.csv", "arm_1": "arm_1.csv", "reference": "reference.csv", "config": "experiment.json"})
            fixture = ExperimentConfig.load(Path(tmpdir) / written["config"])
            self.assertTrue(all(arm.path for arm in fixture.arms))
            env = build_environment(fixture)
            self.assertEqual(env.pools[0].shape, (100, 2))
            self.assertEqual(env.reference.samples.shape, (200, 2))
            result = run_experiment(fixture, Path(tmpdir) / "out")
            self.assertEqual(len(result.traces), 4)

    def test_requires_gaussian_arms(self) -> None:
        with TemporaryDirectory() as tmpdir:
            raw = _raw_config()
            raw["arms"] = [{"path": "a.mxe"}]
            with self.assertRaises(MixselError) as ctx:
                gen_synthetic(ExperimentConfig.from_dict(raw, base_dir=tmpdir), tmpdir)
        self.assertEqual(ctx.exception.code, EMPTY_INPUT)


class DiagnoseTest(unittest.TestCase):
    def test_reports_count_floor_per_trace(self) -> None:
        cfg = _config(algorithms=["mixture_greedy"], seeds=[0])
        with TemporaryDirectory() as tmpdir:
            run_experiment(cfg, Path(tmpdir))
            report = diagnose(cfg, Path(tmpdir), gamma=0.0)
        self.assertTrue(report["ok"])
        entry = report["traces"]["trace_mixture_greedy_seed0.csv"]
        self.assertEqual(entry["rounds"], cfg.horizon)
        self.assertEqual(sum(entry["counts"]), 2 * cfg.warm_start + cfg.horizon)
        self.assertTrue(entry["count_floor"]["passed"])

    def test_no_traces(self) -> None:
        with TemporaryDirectory() as tmpdir:
            with self.assertRaises(MixselError) as ctx:
                diagnose(_config(), Path(tmpdir))
        self.assertEqual(ctx.exception.code, EMPTY_INPUT)


class SummaryTest(unittest.TestCase):
    def test_single_seed_has_zero_spread(self) -> None:
        cfg = _config(algorithms=["mixture_greedy"], seeds=[3])
        with TemporaryDirectory() as tmpdir:
            result = run_experiment(cfg, Path(tmpdir))
        (row,) = summarize(result.traces)
        self.assertIsInstance(row, SummaryRow)
        self.assertEqual(row.to_row()[:2], ["mixture_greedy", 1])
        self.assertEqual(row.to_row()[3], 0.0)

    def test_svg_has_one_line_per_series(self) -> None:
        svg = render_score_svg({"a": [1.0, 0.5, 0.25], "b": [0.9, 0.8, 0.7]}, title="t")
        self.assertTrue(svg.startswith("<svg"))
        self.assertEqual(svg.count("<polyline"), 2)


if __name__ == "__main__":
    unittest.main()
