"""Offline positive-pair generation and pair-structured mini-batching.

Pairs are enumerated per concept, capped for class balance (uniform
random trimming under a seed), and batched two-names-at-a-time so every
batch member has at least one in-batch positive.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import MalformedLineError, UnknownConceptError
from .ontology import MentionSet, Ontology

# Above this many candidate pairs we sample by rejection instead of
# materializing an index range.
_DIRECT_SAMPLE_LIMIT = 1_000_000


@dataclass(frozen=True)
class PositivePair:
    """Two distinct surface names sharing one concept id."""

    name1: str
    name2: str
    cui: str


@dataclass(frozen=True)
class PairList:
    """Ordered positive pairs plus the seed used for trimming/shuffling.

    The seed is provenance metadata; it is not serialized to the pair
    TSV, so round-trips compare pair content.
    """

    pairs: tuple[PositivePair, ...]
    seed: int

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class MiniBatch:
    """Pairwise-laid-out batch: names[2k] and names[2k+1] share labels[2k]."""

    names: list[str]
    labels: list[str]

    def __len__(self) -> int:
        return len(self.names)


def _pair_from_linear(index: int, n: int) -> tuple[int, int]:
    """Map a linear index to the (i, j) combination in lexicographic order."""
    # Pairs with first element < i occupy cum(i) = i*n - i*(i+1)/2 slots.
    i = 0
    remaining = index
    while remaining >= n - 1 - i:
        remaining -= n - 1 - i
        i += 1
    return i, i + 1 + remaining


def _sample_pair_indices(total: int, cap: int, rng: np.random.Generator) -> np.ndarray:
    """Choose ``cap`` distinct indices from range(total), sorted ascending."""
    if total <= _DIRECT_SAMPLE_LIMIT:
        picked = rng.choice(total, size=cap, replace=False)
    else:
        chosen: set[int] = set()
        while len(chosen) < cap:
            chosen.add(int(rng.integers(total)))
        picked = np.fromiter(chosen, dtype=np.int64)
    picked.sort()
    return picked


def generate_pairs(ontology: Ontology, cap: int = 50, seed: int = 0) -> PairList:
    """Enumerate synonym pairs per concept, trimming each concept to ``cap``.

    A concept with n names yields min(C(n,2), cap) pairs; when over the
    cap, the kept subset is chosen uniformly without replacement under
    the seed. Concepts with a single name yield nothing. Output order is
    deterministic: concepts in first-appearance order, pairs in
    enumeration order.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    rng = np.random.default_rng(seed)
    pairs: list[PositivePair] = []
    for cui, indices in ontology.by_cui.items():
        names = [ontology.records[i].name for i in indices]
        n = len(names)
        if n < 2:
            continue
        total = n * (n - 1) // 2
        if total <= cap:
            for i in range(n):
                for j in range(i + 1, n):
                    pairs.append(PositivePair(names[i], names[j], cui))
        else:
            for lin in _sample_pair_indices(total, cap, rng):
                i, j = _pair_from_linear(int(lin), n)
                pairs.append(PositivePair(names[i], names[j], cui))
    return PairList(pairs=tuple(pairs), seed=seed)


def generate_finetune_pairs(
    mentions: MentionSet, ontology: Ontology, cap: int = 50, seed: int = 0
) -> PairList:
    """Pair every mention with each synonym of its gold concepts.

    Traversal order is mention order, gold cuis sorted, synonyms in
    dictionary order. Self-pairs (mention equal to the synonym) are
    excluded. Per-concept counts above ``cap`` are uniformly trimmed
    under the seed, keeping traversal order among survivors. Raises
    :class:`UnknownConceptError` when a gold cui is missing from the
    dictionary.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    all_pairs: list[PositivePair] = []
    per_cui: dict[str, list[int]] = {}
    for m_idx, mention in enumerate(mentions.mentions):
        for cui in sorted(mention.gold):
            if cui not in ontology.by_cui:
                raise UnknownConceptError(m_idx, cui)
            for rec_idx in ontology.by_cui[cui]:
                synonym = ontology.records[rec_idx].name
                if synonym == mention.text:
                    continue
                per_cui.setdefault(cui, []).append(len(all_pairs))
                all_pairs.append(PositivePair(mention.text, synonym, cui))
    rng = np.random.default_rng(seed)
    keep = np.ones(len(all_pairs), dtype=bool)
    for cui, positions in per_cui.items():
        if len(positions) > cap:
            kept = rng.choice(len(positions), size=cap, replace=False)
            drop = np.ones(len(positions), dtype=bool)
            drop[kept] = False
            for pos, dropped in zip(positions, drop):
                if dropped:
                    keep[pos] = False
    pairs = tuple(p for p, k in zip(all_pairs, keep) if k)
    return PairList(pairs=pairs, seed=seed)


def batch_iter(pairs: PairList, batch_pairs: int, epoch_seed: int = 0) -> Iterator[MiniBatch]:
    """Shuffle pairs under ``epoch_seed`` and chunk into pairwise batches.

    Each batch holds 2 * batch_pairs names, laid out pairwise. A final
    partial chunk is emitted if it holds at least 2 pairs and dropped
    otherwise.
    """
    if batch_pairs < 2:
        raise ValueError("batch_pairs must be >= 2")
    order = np.random.default_rng(epoch_seed).permutation(len(pairs.pairs))
    for start in range(0, len(order), batch_pairs):
        chunk = order[start : start + batch_pairs]
        if len(chunk) < 2:
            break
        names: list[str] = []
        labels: list[str] = []
        for idx in chunk:
            pair = pairs.pairs[idx]
            names.extend((pair.name1, pair.name2))
            labels.extend((pair.cui, pair.cui))
        yield MiniBatch(names=names, labels=labels)


def write_pairs(pairs: PairList, path: str) -> None:
    """Write pairs as ``name1<TAB>name2<TAB>cui`` lines in list order."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs.pairs:
            fh.write(f"{pair.name1}\t{pair.name2}\t{pair.cui}\n")


def read_pairs(path: str, seed: int = 0) -> PairList:
    """Read a pair TSV written by :func:`write_pairs`.

    The seed is not stored in the file; the returned list carries the
    given one. Raises :class:`MalformedLineError` on bad lines.
    """
    pairs: list[PositivePair] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh.read().splitlines(), start=1):
            cols = line.split("\t")
            if len(cols) != 3:
                raise MalformedLineError(path, line_no, f"expected 3 tab-separated columns, got {len(cols)}")
            name1, name2, cui = cols
            if not name1 or not name2 or not cui:
                raise MalformedLineError(path, line_no, "empty field")
            pairs.append(PositivePair(name1, name2, cui))
    return PairList(pairs=tuple(pairs), seed=seed)
