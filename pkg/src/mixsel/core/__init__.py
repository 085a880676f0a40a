from .failures import MixselError, map_exception
from .hashing import canonical_json, hash_object, sha256_hex
from .rng import RngStreams

__all__ = ["MixselError", "RngStreams", "canonical_json", "hash_object", "map_exception", "sha256_hex"]
