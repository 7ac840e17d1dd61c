# built-in dependencies
import hashlib
import json
from typing import Any, Dict, Iterable

# 3rd party dependencies
import numpy as np
import scipy

# package dependencies
from .logger import Logger

logger = Logger()


def get_numpy_version() -> str:
    """
    Find numpy's version string
    Returns
        version (str)
    """
    return str(np.__version__)


def get_scipy_version() -> str:
    """
    Find scipy's version string
    Returns
        version (str)
    """
    return str(scipy.__version__)


def runtime_fingerprint() -> Dict[str, str]:
    """Versions that can change floating point results between runs."""
    return {"numpy": get_numpy_version(), "scipy": get_scipy_version()}


def array_hash(arrays: Iterable[np.ndarray], metadata: Dict[str, Any] = None,
               hash_algorithm: str = "sha256") -> str:
    """
    Find the hash of a sequence of arrays together with json-able metadata
    Args:
        arrays (iterable of np.ndarray): sampled fields, hashed bytewise in order
        metadata (dict): grid metadata etc., hashed as canonical json
        hash_algorithm (str): hash algorithm
    Returns:
        hash (str)
    """
    hash_func = hashlib.new(hash_algorithm)
    for array in arrays:
        contiguous = np.ascontiguousarray(array, dtype=np.float64)
        hash_func.update(str(contiguous.shape).encode("utf-8"))
        hash_func.update(contiguous.tobytes())
    if metadata:
        hash_func.update(json.dumps(metadata, sort_keys=True).encode("utf-8"))
    return hash_func.hexdigest()


def json_hash(payload: Dict[str, Any], hash_algorithm: str = "sha256") -> str:
    """
    Find the hash of a json-able dictionary (key order independent)
    Args:
        payload (dict): e.g. a sweep config
        hash_algorithm (str): hash algorithm
    Returns:
        hash (str)
    """
    hash_func = hashlib.new(hash_algorithm)
    hash_func.update(json.dumps(payload, sort_keys=True).encode("utf-8"))
    return hash_func.hexdigest()

