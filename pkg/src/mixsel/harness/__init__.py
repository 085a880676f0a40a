from .diagnose import diagnose
from .embeddings import load_embeddings, write_embeddings
from .experiment import ExperimentConfig, build_environment, run_experiment, run_oracle, run_sweep
from .synthetic import gen_synthetic

__all__ = [
    "ExperimentConfig",
    "build_environment",
    "diagnose",
    "gen_synthetic",
    "load_embeddings",
    "run_experiment",
    "run_oracle",
    "run_sweep",
    "write_embeddings",
]
