import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

from mixsel.config import CONFIG_SCHEMA_VERSION, LogLevel, MixselConfig, load_config


class ConfigTest(unittest.TestCase):
    def test_defaults(self) -> None:
        cfg = load_config({})
        self.assertEqual(cfg.log_level, LogLevel.INFO)
        self.assertEqual(cfg.jobs, 1)
        self.assertEqual(cfg.config_schema_version, CONFIG_SCHEMA_VERSION)

    def test_log_env_knob_and_alias(self) -> None:
        self.assertEqual(load_config({"MIXSEL_LOG": "debug"}).log_level, LogLevel.DEBUG)
        self.assertEqual(load_config({"MIXSEL_LOG": "ERROR"}).log_level, LogLevel.ERROR)
        self.assertEqual(load_config({"LOG_LEVEL": "debug"}).log_level, LogLevel.DEBUG)
        # the documented knob wins over the alias
        cfg = load_config({"MIXSEL_LOG": "error", "MIXSEL_LOG_LEVEL": "debug"})
        self.assertEqual(cfg.log_level, LogLevel.ERROR)

    def test_invalid_log_level_names_allowed_values(self) -> None:
        with self.assertRaises(ValueError) as ctx:
            load_config({"MIXSEL_LOG": "verbose"})
        self.assertIn("error, info, debug", str(ctx.exception))

    def test_jobs_env_override_and_validation(self) -> None:
        self.assertEqual(load_config({"MIXSEL_JOBS": "4"}).jobs, 4)
        self.assertEqual(load_config({"JOBS": "3"}).jobs, 3)
        with self.assertRaises(ValueError) as ctx:
            load_config({"MIXSEL_JOBS": "x"})
        self.assertIn("Invalid integer for jobs: x", str(ctx.exception))
        with self.assertRaises(ValueError):
            load_config({"MIXSEL_JOBS": "0"})
        with self.assertRaises(ValueError):
            load_config({"MIXSEL_JOBS": "257"})

    def test_home_dir_env(self) -> None:
        with TemporaryDirectory() as tmpdir:
            cfg = load_config({"MIXSEL_HOME_DIR": tmpdir})
            self.assertEqual(cfg.home, str(Path(tmpdir).resolve()))

    def test_log_path_env_override(self) -> None:
        cfg = load_config({"MIXSEL_LOG_PATH": "custom/logs.jsonl"})
        self.assertEqual(cfg.log_path, "custom/logs.jsonl")

    def test_log_path_must_be_relative_and_sandboxed(self) -> None:
        with self.assertRaises(ValueError):
            MixselConfig(log_path="   ").validate()
        with self.assertRaises(ValueError):
            MixselConfig(log_path="/tmp/out.jsonl").validate()
        with self.assertRaises(ValueError):
            MixselConfig(log_path="~/out.jsonl").validate()
        with self.assertRaises(ValueError):
            MixselConfig(home="/home/user", log_path="../evil").validate()
        with self.assertRaises(ValueError):
            MixselConfig(log_path="..\\evil.jsonl").validate()
        with self.assertRaises(ValueError):
            MixselConfig(log_path="C:\\evil.jsonl").validate()

    def test_schema_version_mismatch(self) -> None:
        with self.assertRaises(ValueError):
            load_config({"MIXSEL_CONFIG_SCHEMA_VERSION": "2"})

    def test_allows_orders_levels(self) -> None:
        cfg = MixselConfig(log_level=LogLevel.INFO)
        self.assertTrue(cfg.allows("error"))
        self.assertTrue(cfg.allows(LogLevel.INFO))
        self.assertFalse(cfg.allows("debug"))


if __name__ == "__main__":
    unittest.main()
