"""Cosine similarity geometry and online hard-pair mining.

Embeddings are unit-normalized here (not in the encoder) so the miner's
on-sphere Euclidean distances and the losses' cosine similarities agree.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVectorError

_ZERO_NORM = 1e-12


@dataclass
class SimilarityBundle:
    """Unit embeddings, their cosine matrix S = U·Uᵀ, and batch labels.

    ``norms`` keeps the pre-normalization row norms so loss gradients can
    be pushed back to the raw embeddings.
    """

    unit_embeddings: np.ndarray  # (B, d), rows L2-normalized
    S: np.ndarray  # (B, B)
    labels: list[str]
    norms: np.ndarray  # (B,)


@dataclass
class MinedPairs:
    """Per-anchor positive/negative index sets, canonically sorted.

    ``margin`` records the mining margin used (0 when mining was off).
    """

    positives: list[np.ndarray]
    negatives: list[np.ndarray]
    margin: float

    def total_positives(self) -> int:
        return sum(len(p) for p in self.positives)

    def total_negatives(self) -> int:
        return sum(len(n) for n in self.negatives)


def similarity_matrix(embeddings: np.ndarray, labels: list[str]) -> SimilarityBundle:
    """Normalize rows to the unit sphere and form the cosine matrix.

    Raises :class:`ZeroVectorError` when a row's norm is below 1e-12,
    which signals a degenerate encoder state.
    """
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 2:
        raise ValueError("embeddings must be a (B, d) matrix with B >= 2")
    if len(labels) != embeddings.shape[0]:
        raise ValueError("labels length must match batch size")
    norms = np.linalg.norm(embeddings, axis=1)
    if np.any(norms < _ZERO_NORM):
        row = int(np.argmin(norms))
        raise ZeroVectorError(f"embedding row {row} has norm {norms[row]:.3e}")
    unit = embeddings / norms[:, None]
    return SimilarityBundle(unit_embeddings=unit, S=unit @ unit.T, labels=list(labels), norms=norms)


def sphere_distances(S: np.ndarray) -> np.ndarray:
    """Euclidean distances between unit vectors, D = sqrt(2 - 2S)."""
    return np.sqrt(np.maximum(0.0, 2.0 - 2.0 * S))


def _label_masks(labels: list[str]) -> tuple[np.ndarray, np.ndarray]:
    codes_by_label: dict[str, int] = {}
    for lab in labels:
        codes_by_label.setdefault(lab, len(codes_by_label))
    codes = np.asarray([codes_by_label[lab] for lab in labels])
    same = codes[:, None] == codes[None, :]
    pos_mask = same.copy()
    np.fill_diagonal(pos_mask, False)
    return pos_mask, ~same


def mine_hard_pairs(bundle: SimilarityBundle, margin: float) -> MinedPairs:
    """Select the hard triplets' endpoints per anchor.

    A triplet (a, p, n) with labels[a] = labels[p] ≠ labels[n] is hard
    when D_ap + margin > D_an (strictly) on sphere distances; each hard
    triplet contributes p to the anchor's positives and n to its
    negatives. Sets are deduplicated and sorted.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    b = bundle.S.shape[0]
    pos_mask, neg_mask = _label_masks(bundle.labels)
    D = sphere_distances(bundle.S)
    empty = np.empty(0, dtype=np.int64)
    positives: list[np.ndarray] = []
    negatives: list[np.ndarray] = []
    for a in range(b):
        pos = np.flatnonzero(pos_mask[a])
        neg = np.flatnonzero(neg_mask[a])
        if len(pos) == 0 or len(neg) == 0:
            positives.append(empty)
            negatives.append(empty)
            continue
        d_pos = D[a, pos]
        d_neg = D[a, neg]
        # p survives iff some n has D_ap + margin > D_an; n survives iff
        # some p has it. Extremes decide both.
        positives.append(pos[d_pos + margin > d_neg.min()])
        negatives.append(neg[d_neg < d_pos.max() + margin])
    return MinedPairs(positives=positives, negatives=negatives, margin=margin)


def all_pairs(labels: list[str]) -> MinedPairs:
    """Mining-off pair sets: every same-label j ≠ i and every other-label j."""
    if len(labels) < 2:
        raise ValueError("need at least 2 labels")
    pos_mask, neg_mask = _label_masks(labels)
    positives = [np.flatnonzero(pos_mask[a]) for a in range(len(labels))]
    negatives = [np.flatnonzero(neg_mask[a]) for a in range(len(labels))]
    return MinedPairs(positives=positives, negatives=negatives, margin=0.0)
