import math
import unittest

import numpy as np

from mixsel.core.failures import INVALID_MATRIX, SINGULAR_MATRIX, MixselError
from mixsel.numerics.linalg import entropy_trace, psd_fn, psd_project, sym_eig, sym_eigvals, trace_norm


def _random_symmetric(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return 0.5 * (a + a.T)


def _random_psd(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return a @ a.T + 0.1 * np.eye(n)


class SymEigTest(unittest.TestCase):
    def test_identity_and_diagonal(self) -> None:
        np.testing.assert_allclose(sym_eig(np.eye(3)).eigenvalues, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(sym_eig(np.diag([2.0, 0.0, -1.0])).eigenvalues, [2.0, 0.0, -1.0], atol=1e-14)
        np.testing.assert_allclose(sym_eigvals(np.diag([-1.0, 2.0, 0.0])), [2.0, 0.0, -1.0], atol=1e-14)

    def test_reconstruction(self) -> None:
        rng = np.random.default_rng(0)
        matrix = _random_symmetric(rng, 4)
        decomp = sym_eig(matrix)
        np.testing.assert_allclose(decomp.reconstruct(), matrix, atol=1e-8)
        np.testing.assert_allclose(decomp.eigenvectors.T @ decomp.eigenvectors, np.eye(4), atol=1e-10)

    def test_rejects_bad_input(self) -> None:
        for bad in (np.ones((2, 3)), np.array([[1.0, 2.0], [0.0, 1.0]]), np.array([[np.nan]])):
            with self.assertRaises(MixselError) as ctx:
                sym_eig(bad)
            self.assertEqual(ctx.exception.code, INVALID_MATRIX)

    def test_deterministic(self) -> None:
        matrix = _random_symmetric(np.random.default_rng(1), 5)
        np.testing.assert_array_equal(sym_eig(matrix).eigenvalues, sym_eig(matrix.copy()).eigenvalues)


class PsdFnTest(unittest.TestCase):
    def test_closed_forms(self) -> None:
        np.testing.assert_allclose(psd_fn(np.eye(2), "sqrt"), np.eye(2))
        np.testing.assert_allclose(psd_fn(np.diag([4.0, 9.0]), "sqrt"), np.diag([2.0, 3.0]), atol=1e-14)
        np.testing.assert_allclose(psd_fn(np.diag([math.e, math.e**2]), "log", 1e-12), np.diag([1.0, 2.0]), atol=1e-12)
        np.testing.assert_allclose(psd_fn(np.diag([4.0, 0.25]), "inv_sqrt"), np.diag([0.5, 2.0]), atol=1e-12)

    def test_singular_without_clamp(self) -> None:
        with self.assertRaises(MixselError) as ctx:
            psd_fn(np.diag([1.0, 0.0]), "log", 0.0)
        self.assertEqual(ctx.exception.code, SINGULAR_MATRIX)
        with self.assertRaises(MixselError):
            psd_fn(np.diag([1.0, 0.0]), "inv_sqrt", 0.0)
        # the default clamp keeps the boundary finite
        self.assertTrue(np.all(np.isfinite(psd_fn(np.diag([1.0, 0.0]), "log"))))

    def test_negative_dust_is_clamped_but_real_negativity_raises(self) -> None:
        np.testing.assert_allclose(psd_fn(np.diag([1.0, -1e-12]), "sqrt"), np.diag([1.0, 0.0]), atol=1e-14)
        with self.assertRaises(MixselError) as ctx:
            psd_fn(np.diag([1.0, -0.5]), "sqrt")
        self.assertEqual(ctx.exception.code, INVALID_MATRIX)

    def test_sqrt_properties_on_random_psd(self) -> None:
        rng = np.random.default_rng(2)
        for _ in range(5):
            m = _random_psd(rng, 4)
            root = psd_fn(m, "sqrt")
            quarter = psd_fn(root, "sqrt")
            np.testing.assert_allclose(np.linalg.matrix_power(quarter, 4), m, atol=1e-6)
            np.testing.assert_allclose(root @ psd_fn(m, "inv_sqrt"), np.eye(4), atol=1e-6)

    def test_psd_project(self) -> None:
        projected = psd_project(np.diag([2.0, -1.0]))
        np.testing.assert_allclose(projected, np.diag([2.0, 0.0]))
        m = _random_psd(np.random.default_rng(3), 3)
        np.testing.assert_allclose(psd_project(m), m)


class NormTest(unittest.TestCase):
    def test_trace_norm_cases(self) -> None:
        self.assertAlmostEqual(trace_norm(np.diag([1.0, -2.0])), 3.0)
        self.assertEqual(trace_norm(np.zeros((3, 3))), 0.0)
        v = np.array([2.0, 0.0, 0.0])
        self.assertAlmostEqual(trace_norm(np.outer(v, v)), 4.0)

    def test_norm_inequalities(self) -> None:
        rng = np.random.default_rng(4)
        for _ in range(20):
            m = _random_symmetric(rng, 5)
            nuclear = trace_norm(m)
            frob = float(np.linalg.norm(m, "fro"))
            op = float(np.max(np.abs(sym_eigvals(m))))
            self.assertGreaterEqual(nuclear + 1e-12, frob)
            self.assertGreaterEqual(frob + 1e-12, op)
            self.assertLessEqual(nuclear, math.sqrt(5) * frob + 1e-12)

    def test_entropy_trace_uses_zero_log_zero(self) -> None:
        self.assertEqual(entropy_trace(np.diag([1.0, 0.0])), 0.0)
        self.assertAlmostEqual(entropy_trace(np.eye(2) / 2), math.log(0.5))


if __name__ == "__main__":
    unittest.main()
