"""
mixsel: online selection of generator mixtures under diversity-aware scores.
"""

from .config import MixselConfig, load_config

_LAZY_EXPORTS = {
    "BanditConfig",
    "BanditEnvironment",
    "ExperimentConfig",
    "ObjectiveSpec",
    "run_bandit",
    "run_experiment",
}
_LAZY_MODULES = {
    "BanditConfig": ".bandit",
    "BanditEnvironment": ".bandit",
    "run_bandit": ".bandit",
    "ExperimentConfig": ".harness",
    "run_experiment": ".harness",
    "ObjectiveSpec": ".objectives",
}


def __getattr__(name):  # pragma: no cover - thin lazy import shim
    if name in _LAZY_EXPORTS:
        import importlib

        module = importlib.import_module(_LAZY_MODULES[name], __name__)
        return getattr(module, name)
    raise AttributeError(name)


__all__ = ["MixselConfig", "load_config", *sorted(_LAZY_EXPORTS)]
