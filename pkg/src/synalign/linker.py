"""Candidate-free entity linking by exact nearest-neighbour search.

The whole dictionary is embedded once into a unit-normalized matrix;
queries rank every row by dot product (cosine), with ties broken by
ascending row index so results are parallelism-independent.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .encoder import EncoderModel, encode_batch
from .errors import EmptyMentionSetError, ZeroVectorError
from .metric import _ZERO_NORM
from .ontology import MentionSet, Ontology


@dataclass
class LinkIndex:
    """One unit-normalized embedding row per dictionary record."""

    unit_embeddings: np.ndarray  # (N, d)
    names: list[str]
    cuis: list[str]

    def __len__(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class RankedName:
    name: str
    cui: str
    similarity: float


@dataclass
class Prediction:
    """Top-k dictionary names, similarity non-increasing."""

    ranked: list[RankedName]


@dataclass(frozen=True)
class MentionResult:
    mention: str
    gold_rank: int | None  # 1-based rank of the first gold hit, within max(ks)


@dataclass
class EvalReport:
    accuracy: dict[int, float]
    per_mention: list[MentionResult]

    @property
    def acc_at_1(self) -> float:
        return self.accuracy[1]

    @property
    def acc_at_5(self) -> float:
        return self.accuracy[5]

    def to_json(self) -> str:
        payload = {
            "n_mentions": len(self.per_mention),
            "accuracy": {f"acc@{k}": v for k, v in sorted(self.accuracy.items())},
            "per_mention": [
                {"mention": r.mention, "gold_rank": r.gold_rank} for r in self.per_mention
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _normalize_rows(matrix: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1)
    if np.any(norms < _ZERO_NORM):
        row = int(np.argmin(norms))
        raise ZeroVectorError(f"{what} row {row} has norm {norms[row]:.3e}")
    return matrix / norms[:, None]


def build_index(model: EncoderModel, ontology: Ontology, batch_size: int = 512) -> LinkIndex:
    """Embed every dictionary name, batched; rows follow record order.

    Encodings are independent of batching, so any batch_size gives a
    bit-identical index.
    """
    if len(ontology) == 0:
        raise ValueError("ontology must be nonempty")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    names = [rec.name for rec in ontology.records]
    cuis = [rec.cui for rec in ontology.records]
    blocks = []
    for start in range(0, len(names), batch_size):
        outputs, _ = encode_batch(model, names[start : start + batch_size])
        blocks.append(outputs)
    embeddings = np.vstack(blocks)
    return LinkIndex(unit_embeddings=_normalize_rows(embeddings, "index"), names=names, cuis=cuis)


def _rank_rows(index: LinkIndex, query_unit: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    sims = index.unit_embeddings @ query_unit
    # Stable sort on negated sims keeps ascending row order among ties.
    order = np.argsort(-sims, kind="stable")[:k]
    return order, sims[order]


def encode_query(model: EncoderModel, query: str) -> np.ndarray:
    outputs, _ = encode_batch(model, [query])
    return _normalize_rows(outputs, "query")[0]


def topk(index: LinkIndex, query: str, model: EncoderModel, k: int) -> Prediction:
    """Exact top-k rows by cosine similarity for one query string."""
    if not 1 <= k <= len(index):
        raise ValueError(f"k must lie in [1, {len(index)}]")
    order, sims = _rank_rows(index, encode_query(model, query), k)
    ranked = [
        RankedName(name=index.names[i], cui=index.cuis[i], similarity=float(s))
        for i, s in zip(order, sims)
    ]
    return Prediction(ranked=ranked)


def evaluate(index: LinkIndex, mentions: MentionSet, model: EncoderModel, ks: list[int]) -> EvalReport:
    """Score hit rates: a mention hits at k when any top-k name's cui is gold."""
    if len(mentions) == 0:
        raise EmptyMentionSetError("mention set is empty")
    if not ks or any(k < 1 for k in ks):
        raise ValueError("ks must be nonempty positive integers")
    k_max = min(max(ks), len(index))
    results: list[MentionResult] = []
    for mention in mentions.mentions:
        order, _ = _rank_rows(index, encode_query(model, mention.text), k_max)
        gold_rank = None
        for rank, row in enumerate(order, start=1):
            if index.cuis[row] in mention.gold:
                gold_rank = rank
                break
        results.append(MentionResult(mention=mention.text, gold_rank=gold_rank))
    accuracy = {
        k: sum(1 for r in results if r.gold_rank is not None and r.gold_rank <= k) / len(results)
        for k in ks
    }
    return EvalReport(accuracy=accuracy, per_mention=results)


def export_embeddings(index: LinkIndex, path: str) -> None:
    """Write ``name<TAB>cui<TAB>v1,...,vd`` rows with 17-digit floats."""
    with open(path, "w", encoding="utf-8") as fh:
        for name, cui, row in zip(index.names, index.cuis, index.unit_embeddings):
            values = ",".join(f"{x:.17g}" for x in row)
            fh.write(f"{name}\t{cui}\t{values}\n")
