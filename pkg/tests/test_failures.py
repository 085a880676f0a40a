import json
import unittest

from mixsel.core.failures import (
    BAD_MAGIC,
    CONFIG_ERROR,
    EXIT_CONFIG,
    EXIT_RUNTIME,
    INCONSISTENT_STATE,
    MixselError,
    exit_code_for,
    map_exception,
)


class FailureMappingTest(unittest.TestCase):
    def test_map_exception_is_deterministic(self) -> None:
        cases = [
            (ValueError("invalid"), CONFIG_ERROR, "invalid"),
            (ValueError(""), CONFIG_ERROR, "ValueError"),
            (TypeError("wrong type"), CONFIG_ERROR, "wrong type"),
            (KeyError("missing"), CONFIG_ERROR, "'missing'"),
            (FileNotFoundError("not found"), CONFIG_ERROR, "not found"),
            (json.JSONDecodeError("bad", "{", 0), CONFIG_ERROR, None),
            (RuntimeError("fallback"), INCONSISTENT_STATE, "fallback"),
            (FloatingPointError("overflow"), INCONSISTENT_STATE, "overflow"),
        ]
        for exc, expected_code, expected_detail in cases:
            first = map_exception(exc)
            second = map_exception(exc)
            self.assertEqual(first.code, expected_code)
            self.assertEqual(second.code, expected_code)
            self.assertEqual(first.detail, second.detail)
            if expected_detail is not None:
                self.assertEqual(first.detail, expected_detail)
            self.assertIsNone(first.debug_detail)

    def test_run_phase_value_errors_are_runtime_failures(self) -> None:
        numeric = map_exception(ValueError("array must not contain infs or NaNs"), phase="run")
        self.assertEqual(numeric.code, INCONSISTENT_STATE)
        self.assertEqual(exit_code_for(numeric, phase="run"), EXIT_RUNTIME)
        self.assertEqual(map_exception(TypeError("bad operand"), phase="run").code, INCONSISTENT_STATE)
        missing = map_exception(FileNotFoundError("arm.mxe"), phase="run")
        self.assertEqual(missing.code, CONFIG_ERROR)
        self.assertEqual(exit_code_for(missing, phase="run"), EXIT_CONFIG)
        self.assertEqual(map_exception(ValueError("bad"), phase="config").code, CONFIG_ERROR)

    def test_mixsel_error_passes_through(self) -> None:
        original = MixselError(BAD_MAGIC, "x.mxe: expected magic at byte offset 0")
        self.assertIs(map_exception(original), original)
        self.assertEqual(str(original), "BAD_MAGIC: x.mxe: expected magic at byte offset 0")

    def test_debug_trace_is_attached_on_request(self) -> None:
        try:
            raise RuntimeError("boom")
        except RuntimeError as exc:
            err = map_exception(exc, include_debug=True)
        self.assertEqual(err.code, INCONSISTENT_STATE)
        self.assertIn("RuntimeError: boom", err.debug_detail)

        original = MixselError(BAD_MAGIC, "x")
        mapped = map_exception(original, include_debug=True)
        self.assertIsNot(mapped, original)
        self.assertIsNone(original.debug_detail)
        self.assertIsNotNone(mapped.debug_detail)

    def test_exit_codes(self) -> None:
        self.assertEqual(exit_code_for(MixselError(CONFIG_ERROR, "x")), EXIT_CONFIG)
        self.assertEqual(exit_code_for(MixselError(BAD_MAGIC, "x"), phase="config"), EXIT_CONFIG)
        self.assertEqual(exit_code_for(MixselError(BAD_MAGIC, "x")), EXIT_RUNTIME)
        self.assertEqual(exit_code_for(MixselError(INCONSISTENT_STATE, "x")), EXIT_RUNTIME)


if __name__ == "__main__":
    unittest.main()
