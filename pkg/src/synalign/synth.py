"""Seeded synthetic synonym corpora for desk-scale benchmarks.

Concepts come in families of five that share a small private syllable
pool, so names within a family overlap heavily in character n-grams
(the confusable regime where metric learning has something to fix)
while cross-family names stay mostly distinct. Synonyms are random edit
perturbations of a concept's base name: substitutions, insertions,
deletions, and abbreviation-style truncations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ontology import Mention, MentionSet, Ontology, SynonymRecord

_LETTERS = "abcdefghijklmnopqrstuvwxyz"
_FAMILY_SIZE = 5
_FAMILY_POOL = 6
_SYLLABLES_PER_NAME = 4


@dataclass(frozen=True)
class SyntheticSpec:
    n_concepts: int = 200
    synonyms_per_concept: int = 6
    edit_ops: int = 3
    holdout_per_concept: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_concepts < 1:
            raise ValueError("n_concepts must be >= 1")
        if not self.synonyms_per_concept > self.holdout_per_concept >= 1:
            raise ValueError("need synonyms_per_concept > holdout_per_concept >= 1")
        if self.edit_ops < 1:
            raise ValueError("edit_ops must be >= 1")


@dataclass
class SyntheticData:
    dictionary: Ontology
    train_mentions: MentionSet
    test_mentions: MentionSet


def _random_word(rng: np.random.Generator, length: int) -> str:
    return "".join(_LETTERS[i] for i in rng.integers(0, len(_LETTERS), size=length))


def _family_pool(rng: np.random.Generator) -> list[str]:
    pool: list[str] = []
    while len(pool) < _FAMILY_POOL:
        syllable = _random_word(rng, int(rng.integers(2, 4)))
        if syllable not in pool:
            pool.append(syllable)
    return pool


def _perturb(base: str, ops: int, rng: np.random.Generator) -> str:
    name = base
    for _ in range(ops):
        kind = int(rng.integers(4))
        if kind == 0 and len(name) >= 1:  # substitute
            pos = int(rng.integers(len(name)))
            name = name[:pos] + _LETTERS[int(rng.integers(26))] + name[pos + 1 :]
        elif kind == 1:  # insert
            pos = int(rng.integers(len(name) + 1))
            name = name[:pos] + _LETTERS[int(rng.integers(26))] + name[pos:]
        elif kind == 2 and len(name) > 3:  # delete
            pos = int(rng.integers(len(name)))
            name = name[:pos] + name[pos + 1 :]
        elif kind == 3 and len(name) > 4:  # abbreviation truncation
            keep = int(rng.integers(3, len(name)))
            name = name[:keep]
    return name


def generate(spec: SyntheticSpec) -> SyntheticData:
    """Build a dictionary plus train/test mention sets, fully seeded.

    Each concept gets ``synonyms_per_concept`` distinct names (the base
    plus perturbations); the last ``holdout_per_concept`` become test
    mentions and the rest form the dictionary. Train mentions reuse one
    dictionary synonym per concept, so their gold concepts always exist.
    """
    rng = np.random.default_rng(spec.seed)
    records: list[SynonymRecord] = []
    train: list[Mention] = []
    test: list[Mention] = []
    n_families = (spec.n_concepts + _FAMILY_SIZE - 1) // _FAMILY_SIZE
    for family in range(n_families):
        pool = _family_pool(rng)
        for member in range(_FAMILY_SIZE):
            c = family * _FAMILY_SIZE + member
            if c >= spec.n_concepts:
                break
            cui = f"C{c:04d}"
            base = "".join(
                pool[int(i)] for i in rng.integers(0, len(pool), size=_SYLLABLES_PER_NAME)
            )
            synonyms = [base]
            ops = spec.edit_ops
            attempts = 0
            while len(synonyms) < spec.synonyms_per_concept:
                candidate = _perturb(base, ops, rng)
                attempts += 1
                if candidate and candidate not in synonyms:
                    synonyms.append(candidate)
                elif attempts % 20 == 0:
                    ops += 1  # near-duplicate saturation; push further out
            kept = synonyms[: spec.synonyms_per_concept - spec.holdout_per_concept]
            held_out = synonyms[spec.synonyms_per_concept - spec.holdout_per_concept :]
            records.extend(SynonymRecord(cui=cui, name=name) for name in kept)
            train.append(Mention(text=kept[min(1, len(kept) - 1)], gold=frozenset({cui})))
            test.extend(Mention(text=name, gold=frozenset({cui})) for name in held_out)
    return SyntheticData(
        dictionary=Ontology.from_records(records),
        train_mentions=MentionSet(mentions=tuple(train)),
        test_mentions=MentionSet(mentions=tuple(test)),
    )
