import math
import unittest

import numpy as np

from mixsel.bandit.arms import ArmSpec
from mixsel.bandit.population import BanditEnvironment
from mixsel.bandit.trace import BanditTrace, RoundRecord
from mixsel.core.failures import INVALID_CONFIDENCE, OUT_OF_DOMAIN, WARM_START_TOO_SMALL, MixselError
from mixsel.diagnostics.bounds import (
    FDStructure,
    NLVStructure,
    fannes_audenaert,
    gamma_min_nlv,
    hoeffding_bound_curve,
    hoeffding_radius,
    nlv_modulus,
    smallest_warm_start,
    theta_radius,
)
from mixsel.diagnostics.checks import count_floor, deviation_probe, fd_structure, innovation_structure
from mixsel.diagnostics.report import render_report
from mixsel.numerics.linalg import entropy_trace
from mixsel.numerics.metrics import GaussianMoments
from mixsel.objectives.empirical import ReferenceSet
from mixsel.objectives.spec import ObjectiveKind, ObjectiveSpec
from mixsel.solver import EGConfig


def _trace(arms: list[int], num_arms: int, warm_start: int = 1) -> BanditTrace:
    records = []
    for t, arm in enumerate(arms, start=1):
        alpha = tuple(1.0 if i == arm else 0.0 for i in range(num_arms))
        records.append(RoundRecord(t=t, arm=arm, alpha=alpha, emp_loss=0.0))
    counts = [warm_start + arms.count(i) for i in range(num_arms)]
    return BanditTrace(
        algorithm="mixture_greedy",
        seed=0,
        num_arms=num_arms,
        warm_start=warm_start,
        records=tuple(records),
        counts=tuple(counts),
        final_score=0.0,
    )


def _random_density(rng: np.random.Generator, d: int) -> np.ndarray:
    a = rng.standard_normal((d, d))
    s = a @ a.T + 2.0 * np.eye(d)
    return s / np.trace(s)


class RadiusTest(unittest.TestCase):
    def test_hoeffding_radius(self) -> None:
        self.assertAlmostEqual(hoeffding_radius(100, 5, 1000, 0.05), 1.160, delta=1e-3)
        self.assertAlmostEqual(hoeffding_radius(4, 1, 0, 1 - 1e-12), 1.0, delta=1e-5)
        self.assertLess(hoeffding_radius(10**12, 2, 10, 0.05), 1e-4)
        curve = hoeffding_bound_curve([1, 10, 100], 2, 50, 0.1)
        self.assertTrue(np.all(np.diff(curve) < 0))

    def test_invalid_confidence(self) -> None:
        for delta in (0.0, 1.0, -0.5):
            with self.assertRaises(MixselError) as ctx:
                hoeffding_radius(10, 2, 10, delta)
            self.assertEqual(ctx.exception.code, INVALID_CONFIDENCE)

    def test_theta_radius(self) -> None:
        self.assertAlmostEqual(theta_radius(50, 2, 9, 0.1), math.sqrt(math.log(400.0) / 100.0))
        self.assertLess(theta_radius(5000, 2, 9, 0.1), theta_radius(50, 2, 9, 0.1))


class GammaMinTest(unittest.TestCase):
    def test_closed_forms(self) -> None:
        struct = NLVStructure(d=3, m=2, nu0=1.0, eps0=0.01).validate()
        expected = math.exp(-1 - (3 / math.e + math.log(2))) - 0.01
        self.assertAlmostEqual(gamma_min_nlv(struct, 0.0), expected, places=12)
        self.assertAlmostEqual(expected, 0.0511, delta=1e-3)
        fidelity = math.exp(-(3 / math.e + math.log(2) + 1)) - 0.01
        self.assertAlmostEqual(gamma_min_nlv(struct, 0.0, 1.0), fidelity, places=12)

    def test_truncates_at_zero(self) -> None:
        struct = NLVStructure(d=50, m=8, nu0=0.8, eps0=0.09).validate()
        self.assertEqual(gamma_min_nlv(struct, 0.1), 0.0)

    def test_radius_too_large(self) -> None:
        struct = NLVStructure(d=3, m=2, nu0=0.4, eps0=0.0).validate()
        with self.assertRaises(MixselError) as ctx:
            gamma_min_nlv(struct, 0.2)
        self.assertEqual(ctx.exception.code, WARM_START_TOO_SMALL)

    def test_monotone_in_radius_and_nu0(self) -> None:
        for nu0 in (0.4, 0.6, 0.8, 1.0):
            struct = NLVStructure(d=2, m=2, nu0=nu0, eps0=0.0).validate()
            values = [gamma_min_nlv(struct, eta) for eta in np.linspace(0.0, nu0 / 4, 8)]
            self.assertTrue(all(a >= b for a, b in zip(values, values[1:])))
        by_nu = [gamma_min_nlv(NLVStructure(d=2, m=2, nu0=nu0, eps0=0.0), 0.05) for nu0 in (0.4, 0.6, 0.8, 1.0)]
        self.assertTrue(all(a <= b for a, b in zip(by_nu, by_nu[1:])))

    def test_structure_validation(self) -> None:
        with self.assertRaises(MixselError) as ctx:
            NLVStructure(d=2, m=2, nu0=0.8, eps0=0.2).validate()
        self.assertEqual(ctx.exception.code, OUT_OF_DOMAIN)
        with self.assertRaises(MixselError):
            NLVStructure(d=2, m=1, nu0=1.0, eps0=0.0, directions=(np.array([1.0, 1.0]),)).validate()
        with self.assertRaises(MixselError):
            FDStructure(bound=1.0, lambda0=1.0, nu=1.0, gamma0=0.6, delta0=0.1).validate(2)

    def test_smallest_warm_start_is_minimal(self) -> None:
        struct = NLVStructure(d=2, m=2, nu0=1.0, eps0=0.0).validate()
        M = smallest_warm_start(struct, 100, 0.05)
        self.assertIsNotNone(M)

        def admissible(n: int) -> bool:
            eta = hoeffding_radius(n, 2, 100, 0.05)
            return eta <= 0.25 and gamma_min_nlv(struct, eta) > 0

        self.assertTrue(admissible(M))
        self.assertFalse(admissible(M - 1))
        crowded = NLVStructure(d=500, m=2, nu0=0.1, eps0=0.012).validate()
        self.assertIsNone(smallest_warm_start(crowded, 100, 0.05, limit=10**4))


class EntropyModulusTest(unittest.TestCase):
    def test_fannes_audenaert_cases(self) -> None:
        self.assertEqual(fannes_audenaert(0.0, 4), 0.0)
        self.assertAlmostEqual(fannes_audenaert(0.5, 2), math.log(2), places=12)
        for T in np.linspace(0.01, 1 / math.e, 10):
            self.assertLessEqual(fannes_audenaert(T, 5), T * (math.log(4) + math.log(1 / T) + 1) + 1e-12)
        with self.assertRaises(MixselError) as ctx:
            fannes_audenaert(0.9, 2)
        self.assertEqual(ctx.exception.code, OUT_OF_DOMAIN)

    def test_monotone_for_larger_dimensions(self) -> None:
        for d in (3, 5, 10):
            values = [fannes_audenaert(T, d) for T in np.linspace(0.0, 0.5, 20)]
            self.assertTrue(all(a <= b + 1e-15 for a, b in zip(values, values[1:])))

    def test_modulus_bounds_entropy_gap(self) -> None:
        rng = np.random.default_rng(0)
        d = 4
        for _ in range(20):
            s = _random_density(rng, d)
            a = rng.standard_normal((d, d))
            direction = 0.5 * (a + a.T)
            direction -= np.trace(direction) / d * np.eye(d)
            direction /= np.linalg.norm(direction, "fro")
            eps = 0.02
            s2 = s + eps * direction
            modulus = nlv_modulus(eps, d)
            self.assertLessEqual(abs(entropy_trace(s) - entropy_trace(s2)), modulus.bound + 1e-12)
            self.assertIsNotNone(modulus.simplified)
        self.assertEqual(nlv_modulus(0.0, d).to_dict(), {"T": 0.0, "bound": 0.0, "simplified": 0.0})


class CountFloorTest(unittest.TestCase):
    def test_single_arm_passes(self) -> None:
        report = count_floor(_trace([0] * 50, 1), 1.0, 0.05)
        self.assertTrue(report.passed)
        self.assertGreaterEqual(report.worst_margin, 0.0)

    def test_starved_arm_fails_at_first_violation(self) -> None:
        T, gamma, delta = 400, 0.3, 0.05
        report = count_floor(_trace([0] * T, 2), gamma, delta)
        expected = next(
            t for t in range(1, T + 1) if 1 < 1 + gamma * t - math.sqrt(2 * t * math.log(2 * T / delta))
        )
        self.assertFalse(report.passed)
        self.assertEqual(report.first_violation, (expected, 1))
        self.assertEqual(report.worst_arm, 1)
        self.assertLess(report.worst_margin, 0.0)
        self.assertEqual(report.to_dict()["first_violation"], [expected, 1])

    def test_balanced_trace_passes(self) -> None:
        report = count_floor(_trace([t % 2 for t in range(200)], 2), 0.3, 0.05)
        self.assertTrue(report.passed)


class DeviationProbeTest(unittest.TestCase):
    def test_point_mass_has_no_deviation(self) -> None:
        phi = np.tile([[1.0, 0.0]], (20, 1))
        probe = deviation_probe([phi], np.array([np.diag([1.0, 0.0])]), [1, 5, 20], horizon=10, delta=0.05)
        np.testing.assert_allclose(probe.deviations, np.zeros((1, 3)), atol=1e-15)
        self.assertEqual(probe.violation_rate, 0.0)

    def test_single_sample_deviation_is_at_most_two(self) -> None:
        rng = np.random.default_rng(1)
        phi = rng.standard_normal((30, 3))
        phi /= np.linalg.norm(phi, axis=1, keepdims=True)
        population = np.eye(3)[np.newaxis] / 3
        probe = deviation_probe([phi], population, [1, 10, 50], horizon=10, delta=0.05)
        self.assertLessEqual(probe.deviations[0, 0], 2.0)
        self.assertTrue(np.isnan(probe.deviations[0, 2]))
        self.assertIsNone(probe.to_dict()["deviations"][0][2])


class StructureTest(unittest.TestCase):
    def test_orthogonal_arms(self) -> None:
        struct = innovation_structure(np.stack([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
        self.assertEqual((struct.d, struct.m), (2, 2))
        self.assertAlmostEqual(struct.nu0, 1.0)
        self.assertAlmostEqual(struct.eps0, 0.0)
        np.testing.assert_allclose(np.abs(struct.directions[0]), [1.0, 0.0], atol=1e-12)

    def test_overlapping_arms_are_out_of_domain(self) -> None:
        with self.assertRaises(MixselError) as ctx:
            innovation_structure(np.stack([np.eye(2) / 2, np.eye(2) / 2]))
        self.assertEqual(ctx.exception.code, OUT_OF_DOMAIN)

    def test_fd_structure_on_symmetric_instance(self) -> None:
        eye = ((1.0, 0.0), (0.0, 1.0))
        arms = (ArmSpec(mean=(1.0, 0.0), cov=eye).validate(), ArmSpec(mean=(-1.0, 0.0), cov=eye).validate())
        samples = np.random.default_rng(2).standard_normal((40, 2))
        reference = ReferenceSet(samples=samples, moments=GaussianMoments(np.zeros(2), np.eye(2)))
        eg = EGConfig(steps=100)
        env = BanditEnvironment(arms, ObjectiveSpec(kind=ObjectiveKind.FD), reference=reference, eg=eg)
        model = env.population()
        struct = fd_structure(
            model.objective,
            model.oracle,
            arm_covariances=[np.eye(2), np.eye(2)],
            reference_cov=np.eye(2),
            samples=[samples],
            eg=eg,
        ).validate(2)
        self.assertAlmostEqual(struct.lambda0, 1.0)
        self.assertAlmostEqual(struct.nu, 1.0)
        self.assertAlmostEqual(struct.gamma0, 0.5, delta=0.02)
        self.assertAlmostEqual(struct.delta0, 1.0 - model.oracle.value, places=6)
        self.assertEqual(set(struct.to_dict()), {"B", "lambda0", "nu", "gamma0", "Delta0"})


class ReportTest(unittest.TestCase):
    def test_render_is_sorted_and_nested(self) -> None:
        text = render_report({"ok": True, "b": {"y": None, "x": 1.0 / 3}, "a": [1, float("nan")]})
        self.assertEqual(text, "a: [1, nan]\nb:\n  x: 0.333333\n  y: none\nok: true\n")


if __name__ == "__main__":
    unittest.main()
