from .logging import RunLogger, append_jsonl_log_event

__all__ = ["RunLogger", "append_jsonl_log_event"]
