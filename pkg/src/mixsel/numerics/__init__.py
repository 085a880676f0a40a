from .kernels import KernelKind, KernelSpec, RFFMap, gram, kernel_eval, rff_embed
from .linalg import EigenDecomposition, psd_fn, sym_eig, trace_norm
from .metrics import GaussianMoments, frechet_distance, inv_rke, kernel_distance, moments_of, rke, vendi_score

__all__ = [
    "EigenDecomposition",
    "GaussianMoments",
    "KernelKind",
    "KernelSpec",
    "RFFMap",
    "frechet_distance",
    "gram",
    "inv_rke",
    "kernel_distance",
    "kernel_eval",
    "moments_of",
    "psd_fn",
    "rff_embed",
    "rke",
    "sym_eig",
    "trace_norm",
    "vendi_score",
]
