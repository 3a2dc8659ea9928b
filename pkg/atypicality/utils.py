import hashlib
import math
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from atypicality.config import settings
from atypicality.errors import InvalidParameterError

BitsLike = Union[str, Sequence[int], np.ndarray]


def as_bit_array(x: BitsLike) -> np.ndarray:
    """Coerces a '0'/'1' string or a 0/1 sequence into a uint8 BitSequence."""
    if isinstance(x, str):
        if any(c not in "01" for c in x):
            raise InvalidParameterError("bit strings may only contain '0' and '1'")
        return np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
    arr = np.asarray(x)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint8)
    if arr.ndim != 1:
        raise InvalidParameterError("bit sequences must be one-dimensional")
    if not np.isin(arr, (0, 1)).all():
        raise InvalidParameterError("bit sequences may only contain 0 and 1")
    return arr.astype(np.uint8)


def derive_rng(seed: int, *keys: int) -> np.random.Generator:
    """Generator for (seed, keys...); independent of scheduling and worker count."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]))


def binomial_half_width(estimate: float, trials: int, z: Optional[float] = None) -> float:
    """Normal-approximation confidence half-width of a binomial proportion."""
    z = settings.CI_Z if z is None else z
    return z * math.sqrt(max(estimate * (1.0 - estimate), 0.0) / trials)


def sha256_file(path: Union[str, Path]) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
