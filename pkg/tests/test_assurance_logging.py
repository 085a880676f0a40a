import json
import unittest
from pathlib import Path
from tempfile import TemporaryDirectory
from unittest.mock import patch

from mixsel.assurance.logging import RunLogger, append_jsonl_log_event, compute_checksum, log_path
from mixsel.config import LogLevel, MixselConfig
from mixsel.core.hashing import canonical_json


class AssuranceLoggingTest(unittest.TestCase):
    def test_append_jsonl_log_event_writes_canonical_json(self) -> None:
        with TemporaryDirectory() as tmpdir:
            cfg = MixselConfig(home=tmpdir, log_path="logs/events.jsonl", log_schema_version="2")
            ts = "2024-01-01T00:00:00Z"
            event = append_jsonl_log_event(cfg=cfg, action="bandit_run", outcome="ok", details={"b": 2, "a": 1}, ts=ts)

            target = Path(log_path(cfg))
            content = target.read_text(encoding="utf-8").strip()
            self.assertEqual(content, canonical_json(event))

            loaded = json.loads(content)
            self.assertEqual(loaded["schema_version"], "2")
            self.assertEqual(loaded["ts"], ts)
            self.assertEqual(loaded["level"], "info")
            self.assertEqual(loaded["details"], {"a": 1, "b": 2})
            without = {k: v for k, v in loaded.items() if k != "checksum"}
            self.assertEqual(loaded["checksum"], compute_checksum(without))

    def test_level_filtering(self) -> None:
        with TemporaryDirectory() as tmpdir:
            cfg = MixselConfig(home=tmpdir, log_path="events.jsonl", log_level=LogLevel.INFO)
            self.assertIsNone(append_jsonl_log_event(cfg=cfg, action="round", outcome="ok", level="debug"))
            self.assertFalse(log_path(cfg).exists())
            self.assertIsNotNone(append_jsonl_log_event(cfg=cfg, action="run", outcome="error", level="error"))
            self.assertEqual(len(log_path(cfg).read_text(encoding="utf-8").splitlines()), 1)

    def test_directory_log_path_raises(self) -> None:
        with TemporaryDirectory() as tmpdir:
            (Path(tmpdir) / "events.jsonl").mkdir()
            cfg = MixselConfig(home=tmpdir, log_path="events.jsonl")
            with self.assertRaises(RuntimeError):
                append_jsonl_log_event(cfg=cfg, action="run", outcome="ok")

    def test_run_logger_binds_context(self) -> None:
        with TemporaryDirectory() as tmpdir:
            cfg = MixselConfig(home=tmpdir, log_path="events.jsonl", log_level=LogLevel.DEBUG)
            logger = RunLogger(cfg=cfg).bind(algorithm="mixture_greedy").bind(seed=3)
            logger.debug("round", "ok", round=1)
            logger.info("bandit_run", "ok")
            lines = [json.loads(line) for line in log_path(cfg).read_text(encoding="utf-8").splitlines()]
            self.assertEqual([e["action"] for e in lines], ["round", "bandit_run"])
            self.assertEqual(lines[0]["details"], {"algorithm": "mixture_greedy", "seed": 3, "round": 1})

    def test_disabled_logger_and_write_failures_are_silent(self) -> None:
        RunLogger.disabled().error("run", "error", detail="x")
        with TemporaryDirectory() as tmpdir:
            cfg = MixselConfig(home=tmpdir, log_path="events.jsonl")
            with patch("mixsel.assurance.logging.append_jsonl_log_event", side_effect=RuntimeError("boom")):
                RunLogger(cfg=cfg).info("run", "ok")


if __name__ == "__main__":
    unittest.main()
