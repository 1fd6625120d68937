"""Shared helpers for building random batches and bundles."""
from __future__ import annotations

import numpy as np
import pytest

from synalign.metric import SimilarityBundle, similarity_matrix


def random_bundle(rng: np.random.Generator, b: int = 16, d: int = 8, n_labels: int = 4):
    """A random raw-embedding batch with its similarity bundle."""
    labels = [f"L{i}" for i in rng.integers(0, n_labels, size=b)]
    raw = rng.normal(size=(b, d))
    return raw, labels, similarity_matrix(raw, labels)


def manual_bundle(S: np.ndarray, labels: list[str]) -> SimilarityBundle:
    """Bundle with a hand-written similarity matrix, bypassing normalization."""
    b = S.shape[0]
    return SimilarityBundle(
        unit_embeddings=np.eye(b, 4),
        S=np.asarray(S, dtype=np.float64),
        labels=labels,
        norms=np.ones(b),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
