from .arms import ArmKind, ArmSpec, FileBackedArm, PostMap, SyntheticGaussianArm, build_arm
from .policies import (
    Algorithm,
    AlgorithmSpec,
    BanditConfig,
    run_bandit,
    run_mixture_greedy,
    run_mixture_oracle,
    run_mixture_ucb,
    run_one_arm,
)
from .population import BanditEnvironment, OracleResult, PopulationModel, mixture_oracle, one_arm_oracle
from .trace import BanditTrace, RoundRecord, regret_curve

__all__ = [
    "Algorithm",
    "AlgorithmSpec",
    "ArmKind",
    "ArmSpec",
    "BanditConfig",
    "BanditEnvironment",
    "BanditTrace",
    "FileBackedArm",
    "OracleResult",
    "PopulationModel",
    "PostMap",
    "RoundRecord",
    "SyntheticGaussianArm",
    "build_arm",
    "mixture_oracle",
    "one_arm_oracle",
    "regret_curve",
    "run_bandit",
    "run_mixture_greedy",
    "run_mixture_oracle",
    "run_mixture_ucb",
    "run_one_arm",
]
