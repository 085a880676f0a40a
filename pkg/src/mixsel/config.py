from __future__ import annotations

import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path, PurePosixPath, PureWindowsPath
from typing import Mapping

ENV_PREFIX = "MIXSEL_"
CONFIG_SCHEMA_VERSION = "1"
MAX_JOBS = 256


class LogLevel(str, Enum):
    ERROR = "error"
    INFO = "info"
    DEBUG = "debug"

    @property
    def rank(self) -> int:
        return {"error": 0, "info": 1, "debug": 2}[self.value]


@dataclass(frozen=True)
class MixselConfig:
    version: str = "0.1.0"

    home: str = "."

    log_level: LogLevel = LogLevel.INFO
    log_schema_version: str = "1"
    log_path: str = ".mixsel/logs/mixsel.jsonl"

    # default worker count for replicate fan-out
    jobs: int = 1

    config_schema_version: str = CONFIG_SCHEMA_VERSION

    def validate(self) -> None:
        if (self.config_schema_version or "").strip() != CONFIG_SCHEMA_VERSION:
            raise ValueError("config_schema_version mismatch")

        if not (self.log_path or "").strip():
            raise ValueError("log_path must be set")
        if not (self.log_schema_version or "").strip():
            raise ValueError("log_schema_version must be set")

        home = Path(self.home).expanduser().resolve()
        _enforce_log_path_sandbox(self.log_path, home=home)

        if not (1 <= self.jobs <= MAX_JOBS):
            raise ValueError(f"jobs must be 1..{MAX_JOBS}")
        if not isinstance(self.log_level, LogLevel):
            raise ValueError("log_level must be a LogLevel")

    def allows(self, level: LogLevel | str) -> bool:
        wanted = level if isinstance(level, LogLevel) else LogLevel(str(level).strip().lower())
        return wanted.rank <= self.log_level.rank


def _get_env(env: Mapping[str, str], key: str) -> str | None:
    return env.get(f"{ENV_PREFIX}{key}") or env.get(key)


def _coerce_int(value: str, field: str) -> int:
    try:
        return int(value)
    except Exception as exc:
        raise ValueError(f"Invalid integer for {field}: {value}") from exc


def _coerce_enum(value: str, enum_cls, field: str):
    raw = value.strip().lower()
    try:
        return enum_cls(raw)
    except Exception as exc:
        allowed = ", ".join([e.value for e in enum_cls])
        raise ValueError(f"Invalid {field}: {value}. Allowed: {allowed}") from exc


def _resolve_home(env: Mapping[str, str]) -> Path:
    raw = _get_env(env, "HOME_DIR") or MixselConfig.home
    return Path(raw).expanduser().resolve()


def _enforce_log_path_sandbox(log_path: str, *, home: Path) -> None:
    raw = (log_path or "").strip()
    posix = PurePosixPath(raw)
    win = PureWindowsPath(raw)

    if posix.is_absolute() or win.is_absolute() or win.drive:
        raise ValueError("log_path must be a relative path")
    if raw.startswith("~"):
        raise ValueError("log_path must not start with ~")
    if ".." in posix.parts or ".." in win.parts:
        raise ValueError("log_path must not contain parent directory traversal")

    target = home / raw
    try:
        resolved = target.resolve(strict=False)
    except TypeError:
        resolved = Path(os.path.abspath(str(target)))

    try:
        resolved.relative_to(home)
    except Exception as exc:
        raise ValueError("log_path must resolve under home/") from exc


def load_config(env: Mapping[str, str] | None = None) -> MixselConfig:
    source: Mapping[str, str] = env if env is not None else os.environ

    cfg_schema_raw = (_get_env(source, "CONFIG_SCHEMA_VERSION") or "").strip()
    cfg_schema = cfg_schema_raw or CONFIG_SCHEMA_VERSION

    # MIXSEL_LOG is the documented knob; LOG_LEVEL is accepted as a longer alias
    level_raw = source.get(f"{ENV_PREFIX}LOG") or _get_env(source, "LOG_LEVEL")
    log_level = _coerce_enum(level_raw, LogLevel, "log_level") if level_raw else MixselConfig.log_level

    jobs_raw = _get_env(source, "JOBS")
    jobs = _coerce_int(jobs_raw, "jobs") if jobs_raw else MixselConfig.jobs

    cfg = MixselConfig(
        version=_get_env(source, "VERSION") or MixselConfig.version,
        home=str(_resolve_home(source)),
        log_level=log_level,
        log_schema_version=_get_env(source, "LOG_SCHEMA_VERSION") or MixselConfig.log_schema_version,
        log_path=_get_env(source, "LOG_PATH") or MixselConfig.log_path,
        jobs=jobs,
        config_schema_version=cfg_schema,
    )
    cfg.validate()
    return cfg


__all__ = ["CONFIG_SCHEMA_VERSION", "LogLevel", "MixselConfig", "load_config"]
