"""Ingestion of synonym dictionaries and mention sets from TSV files.

Dictionary lines are ``cui<TAB>name``; mention lines are
``mention<TAB>cui(|cui)*``. Both files are UTF-8 without a header. All
surface strings pass through :func:`normalize_name` on the way in, and
loading is fully deterministic (file order, first occurrence wins).
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import EmptyFileError, EmptyGoldSetError, MalformedLineError


def normalize_name(raw: str) -> str:
    """Case-fold and whitespace-normalize a surface form.

    Unicode full case folding, leading/trailing whitespace stripped, and
    internal whitespace runs collapsed to single spaces. Idempotent; may
    return the empty string (callers decide whether to drop it).
    """
    return " ".join(raw.casefold().split())


@dataclass(frozen=True)
class SynonymRecord:
    """One normalized (concept id, surface name) dictionary entry."""

    cui: str
    name: str


@dataclass(frozen=True)
class Ontology:
    """A deduplicated synonym dictionary in deterministic file order.

    ``by_cui`` maps each concept id to the indices of its records, in
    record order.
    """

    records: tuple[SynonymRecord, ...]
    by_cui: dict[str, tuple[int, ...]] = field(compare=False)

    def __len__(self) -> int:
        return len(self.records)

    def names_of(self, cui: str) -> list[str]:
        return [self.records[i].name for i in self.by_cui.get(cui, ())]

    @staticmethod
    def from_records(records: list[SynonymRecord]) -> "Ontology":
        by_cui: dict[str, list[int]] = {}
        for i, rec in enumerate(records):
            by_cui.setdefault(rec.cui, []).append(i)
        return Ontology(
            records=tuple(records),
            by_cui={cui: tuple(idx) for cui, idx in by_cui.items()},
        )


@dataclass(frozen=True)
class Mention:
    """A query surface form with its nonempty set of gold concept ids."""

    text: str
    gold: frozenset[str]


@dataclass(frozen=True)
class MentionSet:
    """Mentions in file order, normalized like dictionary names."""

    mentions: tuple[Mention, ...]

    def __len__(self) -> int:
        return len(self.mentions)


def _read_lines(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read().splitlines()


def load_dictionary(path: str) -> Ontology:
    """Load a ``cui<TAB>name`` dictionary TSV into an :class:`Ontology`.

    Names are normalized and exact duplicate (cui, name) pairs dropped,
    keeping first occurrence. Lines whose name normalizes to the empty
    string are dropped. Raises :class:`MalformedLineError` on a wrong
    column count or an empty cui, :class:`EmptyFileError` if nothing
    survives.
    """
    records: list[SynonymRecord] = []
    seen: set[tuple[str, str]] = set()
    for line_no, line in enumerate(_read_lines(path), start=1):
        cols = line.split("\t")
        if len(cols) != 2:
            raise MalformedLineError(path, line_no, f"expected 2 tab-separated columns, got {len(cols)}")
        cui, raw_name = cols
        if not cui:
            raise MalformedLineError(path, line_no, "empty concept id")
        name = normalize_name(raw_name)
        if not name:
            continue
        key = (cui, name)
        if key in seen:
            continue
        seen.add(key)
        records.append(SynonymRecord(cui=cui, name=name))
    if not records:
        raise EmptyFileError(f"{path}: no valid dictionary records")
    return Ontology.from_records(records)


def write_dictionary(ontology: Ontology, path: str) -> None:
    """Write an ontology back out as ``cui<TAB>name`` lines in record order."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in ontology.records:
            fh.write(f"{rec.cui}\t{rec.name}\n")


def load_mentions(path: str) -> MentionSet:
    """Load a ``mention<TAB>cui(|cui)*`` TSV into a :class:`MentionSet`.

    Order is preserved; mention texts are normalized. Raises
    :class:`MalformedLineError` on bad column counts or a mention that
    normalizes to the empty string, :class:`EmptyGoldSetError` when the
    gold column holds no concept ids.
    """
    mentions: list[Mention] = []
    for line_no, line in enumerate(_read_lines(path), start=1):
        cols = line.split("\t")
        if len(cols) != 2:
            raise MalformedLineError(path, line_no, f"expected 2 tab-separated columns, got {len(cols)}")
        raw_mention, gold_col = cols
        text = normalize_name(raw_mention)
        if not text:
            raise MalformedLineError(path, line_no, "empty mention")
        gold = frozenset(c for c in gold_col.split("|") if c)
        if not gold:
            raise EmptyGoldSetError(path, line_no)
        mentions.append(Mention(text=text, gold=gold))
    return MentionSet(mentions=tuple(mentions))


def write_mentions(mention_set: MentionSet, path: str) -> None:
    """Write mentions as ``mention<TAB>cui(|cui)*`` lines; gold ids sorted."""
    with open(path, "w", encoding="utf-8") as fh:
        for m in mention_set.mentions:
            fh.write(f"{m.text}\t{'|'.join(sorted(m.gold))}\n")
