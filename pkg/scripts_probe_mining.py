"""Ad-hoc probe utilities for benchmark tuning (not part of the package)."""
import numpy as np
from synalign.ontology import Mention, MentionSet, Ontology, SynonymRecord

LETTERS = "abcdefghijklmnopqrstuvwxyz"


def word(rng, length):
    return "".join(LETTERS[i] for i in rng.integers(0, 26, size=length))


def perturb(base, ops, rng):
    name = base
    for _ in range(ops):
        kind = int(rng.integers(4))
        if kind == 0 and len(name) >= 1:
            pos = int(rng.integers(len(name)))
            name = name[:pos] + LETTERS[int(rng.integers(26))] + name[pos + 1:]
        elif kind == 1:
            pos = int(rng.integers(len(name) + 1))
            name = name[:pos] + LETTERS[int(rng.integers(26))] + name[pos:]
        elif kind == 2 and len(name) > 3:
            pos = int(rng.integers(len(name)))
            name = name[:pos] + name[pos + 1:]
        elif kind == 3 and len(name) > 4:
            keep = int(rng.integers(3, len(name)))
            name = name[:keep]
    return name


def gen_family(seed, family_pool, edit_ops, family_size=5, n_concepts=200):
    rng = np.random.default_rng(seed)
    records, test = [], []
    n_families = (n_concepts + family_size - 1) // family_size
    for f in range(n_families):
        pool = []
        while len(pool) < family_pool:
            s = word(rng, int(rng.integers(2, 4)))
            if s not in pool:
                pool.append(s)
        for j in range(family_size):
            c = f * family_size + j
            if c >= n_concepts:
                break
            cui = f"C{c:04d}"
            base = "".join(pool[int(i)] for i in rng.integers(0, len(pool), size=4))
            synonyms = [base]
            ops = edit_ops
            attempts = 0
            while len(synonyms) < 6:
                cand = perturb(base, ops, rng)
                attempts += 1
                if cand and cand not in synonyms:
                    synonyms.append(cand)
                elif attempts % 20 == 0:
                    ops += 1
            records.extend(SynonymRecord(cui, n) for n in synonyms[:5])
            test.append(Mention(synonyms[5], frozenset({cui})))
    return Ontology.from_records(records), MentionSet(tuple(test))
