from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from mixsel.config import LogLevel, MixselConfig
from mixsel.core.hashing import canonical_json, sha256_hex


def compute_checksum(payload: Any) -> str:
    encoded_payload = payload if isinstance(payload, str) else canonical_json(payload)
    return sha256_hex(encoded_payload)


def _utc_now_iso_z() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def log_path(cfg: MixselConfig) -> Path:
    target = Path(cfg.log_path)
    if not target.is_absolute():
        home = Path(cfg.home).expanduser().resolve()
        target = home / target
    try:
        return target.resolve(strict=False)
    except TypeError:  # pragma: no cover - legacy compatibility
        return Path(os.path.abspath(str(target)))


def append_jsonl_log_event(
    *,
    cfg: MixselConfig,
    action: str,
    outcome: str,
    details: dict[str, Any] | None = None,
    level: LogLevel | str = LogLevel.INFO,
    ts: str | None = None,
    path: Path | None = None,
) -> dict[str, Any] | None:
    level = level if isinstance(level, LogLevel) else LogLevel(str(level).strip().lower())
    if not cfg.allows(level):
        return None
    event_without_checksum = {
        "schema_version": cfg.log_schema_version,
        "ts": ts or _utc_now_iso_z(),
        "level": level.value,
        "action": action,
        "outcome": outcome,
        "details": details or {},
    }
    event = dict(event_without_checksum, checksum=compute_checksum(event_without_checksum))
    serialized = canonical_json(event)
    target = path or log_path(cfg)
    target.parent.mkdir(parents=True, exist_ok=True)
    if target.exists() and target.is_dir():
        raise RuntimeError(f"Log path {target} is a directory, expected a file")
    with target.open("a", encoding="utf-8") as handle:
        handle.write(serialized + "\n")
    return event


@dataclass(frozen=True)
class RunLogger:
    """Binds a config and a fixed context to the event log.

    Failures while writing are swallowed: a run never depends on its log.
    """

    cfg: MixselConfig | None
    context: dict[str, Any] = field(default_factory=dict)
    path: Path | None = None

    @classmethod
    def disabled(cls) -> "RunLogger":
        return cls(cfg=None)

    def bind(self, **context: Any) -> "RunLogger":
        return RunLogger(cfg=self.cfg, context={**self.context, **context}, path=self.path)

    def enabled_for(self, level: LogLevel) -> bool:
        return self.cfg is not None and self.cfg.allows(level)

    def event(self, level: LogLevel, action: str, outcome: str, **details: Any) -> None:
        if not self.enabled_for(level):
            return
        try:
            append_jsonl_log_event(
                cfg=self.cfg,
                action=action,
                outcome=outcome,
                details={**self.context, **details},
                level=level,
                path=self.path,
            )
        except Exception:  # pragma: no cover - best-effort logging
            pass

    def error(self, action: str, outcome: str, **details: Any) -> None:
        self.event(LogLevel.ERROR, action, outcome, **details)

    def info(self, action: str, outcome: str, **details: Any) -> None:
        self.event(LogLevel.INFO, action, outcome, **details)

    def debug(self, action: str, outcome: str, **details: Any) -> None:
        self.event(LogLevel.DEBUG, action, outcome, **details)


__all__ = ["RunLogger", "append_jsonl_log_event", "compute_checksum", "log_path"]
