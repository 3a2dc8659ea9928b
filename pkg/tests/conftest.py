import os
import numpy as np
import pytest

# Load test env before importing the package
# settings are read once at import time
os.environ["APP_ENV"] = "test"
os.environ["LOG_LEVEL"] = "WARNING"
os.environ["DEFAULT_WORKERS"] = "1"

# Now we can safely import the package
from atypicality.frozen import train
from atypicality.utils import derive_rng


@pytest.fixture
def rng():
    """A fresh seeded generator per test."""
    return np.random.default_rng(12345)


@pytest.fixture
def alternating_bits():
    return np.array([0, 1] * 500, dtype=np.uint8)


@pytest.fixture
def alternating_model(alternating_bits):
    return train([alternating_bits], 2)


@pytest.fixture
def insertion_stream():
    """2000 iid(½) bits with 200 iid(0.9) bits written over [1000, 1200)."""
    gen = derive_rng(7, 0)
    bits = gen.integers(0, 2, size=2000, dtype=np.uint8)
    bits[1000:1200] = (gen.random(200) < 0.9).astype(np.uint8)
    return bits
