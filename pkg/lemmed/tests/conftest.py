"""
Shared fixtures for the lemmed test suite.
"""

import os

import numpy as np
import pytest

import lemmed
from lemmed.model import ModelConfig, init_model
from lemmed.snippets import CONTROL, Vocab

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")

TINY_SOURCE = tuple("abcdefg")
TINY_TARGET = ("a", "b", "c", "+N", "+PL", "+V", "d")


@pytest.fixture
def bats_path():
    return os.path.join(DATA_DIR, "bats.tsv")


@pytest.fixture
def bats_corpus(bats_path):
    return lemmed.read_corpus(bats_path)


@pytest.fixture
def synthetic_corpus():
    return lemmed.make_synthetic_corpus(32, seed=0)


@pytest.fixture
def tiny_vocab():
    """Twelve symbols on each side, control symbols included."""
    return Vocab(tuple(CONTROL) + TINY_SOURCE, tuple(CONTROL) + TINY_TARGET)


@pytest.fixture
def make_tiny_model():
    """Factory for float64 single-layer models small enough for finite differences."""

    def make(source_vocab_size=12, target_vocab_size=12, seed=0, **overrides):
        values = dict(embedding_size=4, hidden_units=3, layers=1, dropout_p=0.0, rng_seed=seed, dtype="float64")
        values.update(overrides)
        return init_model(ModelConfig(source_vocab_size, target_vocab_size, **values))

    return make


@pytest.fixture
def make_pairs():
    """Factory for random (source ids, framed target ids) pairs over ids 5..vocab-1."""

    def make(count, seed=0, vocab_size=12, max_length=5):
        rng = np.random.default_rng(seed)
        pairs = []
        for _ in range(count):
            source = rng.integers(5, vocab_size, size=int(rng.integers(1, max_length + 1)))
            body = rng.integers(4, vocab_size, size=int(rng.integers(1, max_length + 1)))
            pairs.append((source, np.concatenate([[2], body, [3]])))
        return pairs

    return make
