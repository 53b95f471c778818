#!/usr/bin/env python3
"""Regenerate the small test fixtures under tests/fixtures.

Output is deterministic; rerunning must leave the committed files unchanged.
"""

import json
import random
import sys
from pathlib import Path

KG_DIM = 8
HIDDEN_DIM = 4
CLASSES = ["Mechanism", "Effect", "Advice", "Int", "Other"]


def fmt(x):
    return repr(round(x, 6))


def write_tiny(out):
    (out / "tiny_types.tsv").write_text(
        "DB00001\tdrug\nDB00002\tdrug\nP00001\ttarget\nP00002\ttarget\nC0001\tdisease\n")
    (out / "tiny_triples.tsv").write_text(
        "DB00001\tdrug-target\tP00001\nDB00002\tdrug-target\tP00002\nP00001\ttarget-target\tP00002\n")


def write_biokg(out, rng):
    drugs = [f"DB{i:05d}" for i in range(1, 13)]
    targets = [f"P{i:05d}" for i in range(1, 11)]
    diseases = [f"C{i:04d}" for i in range(1, 7)]
    with open(out / "biokg_types.tsv", "w") as f:
        for d in drugs:
            f.write(f"{d}\tdrug\n")
        for t in targets:
            f.write(f"{t}\ttarget\n")
        for c in diseases:
            f.write(f"{c}\tdisease\n")
    triples = set()
    pools = [
        ("drug-target", drugs, targets, 30),
        ("target-target", targets, targets, 12),
        ("drug-disease", drugs, diseases, 16),
        ("disease-disease", diseases, diseases, 4),
        ("disease-target", diseases, targets, 8),
    ]
    for rel, heads, tails, n in pools:
        while sum(1 for t in triples if t[1] == rel) < n:
            h, t = rng.choice(heads), rng.choice(tails)
            if h != t:
                triples.add((h, rel, t))
    with open(out / "biokg_triples.tsv", "w") as f:
        for h, r, t in sorted(triples):
            f.write(f"{h}\t{r}\t{t}\n")
    return drugs


NAMES = ["aspirin", "warfarin", "ibuprofen", "heparin", "digoxin", "amiodarone",
         "simvastatin", "ketoconazole", "rifampin", "fluoxetine", "lithium", "metformin"]


def write_lexicon(out, drugs):
    with open(out / "drug_names.tsv", "w") as f:
        for name, d in zip(NAMES, drugs):
            f.write(f"{name}\t{d}\n")
        f.write(f"acetylsalicylic acid\t{drugs[0]}\n")
        f.write(f"warfarin sodium\t{drugs[1]}\n")


def write_wordvecs(out, rng):
    words = ["novadrug", "acid", "sodium", "compound", "x-17"]
    with open(out / "wordvecs.txt", "w") as f:
        f.write(f"{len(words)} {KG_DIM}\n")
        for w in words:
            f.write(w + " " + " ".join(fmt(rng.uniform(-0.5, 0.5)) for _ in range(KG_DIM)) + "\n")


def instance(rng, idx, drugs, labeled):
    t = rng.randint(4, 9)
    hidden = [[round(rng.uniform(-1, 1), 6) for _ in range(HIDDEN_DIM)] for _ in range(t)]
    a = rng.randint(1, t - 1)
    b = rng.randint(a, t - 1)
    c = rng.randint(1, t - 1)
    e = rng.randint(c, t - 1)
    i1, i2 = rng.randrange(len(drugs)), rng.randrange(len(drugs))
    d1, m1 = drugs[i1], NAMES[i1]
    d2, m2 = drugs[i2], NAMES[i2]
    if idx % 7 == 3:
        # Unlinked mention resolved by the word-vector fallback.
        d2, m2 = None, "novadrug compound"
    obj = {"id": f"s{idx:03d}"}
    if labeled:
        obj["label"] = CLASSES[(i1 + i2) % 5]
    obj.update({"hidden": hidden, "span1": [a, b], "span2": [c, e],
                "drug1": d1, "drug2": d2, "mention1": m1, "mention2": m2})
    return obj


def write_instances(out, rng, drugs):
    header = json.dumps({"dim": HIDDEN_DIM, "classes": CLASSES}, separators=(",", ":"))
    for name, n, labeled in [("instances_train.jsonl", 40, True), ("instances_test.jsonl", 15, True),
                             ("instances_unlabeled.jsonl", 5, False)]:
        with open(out / name, "w") as f:
            f.write(header + "\n")
            for i in range(n):
                f.write(json.dumps(instance(rng, i, drugs, labeled), separators=(",", ":")) + "\n")


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "fixtures"
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240611)
    write_tiny(out)
    drugs = write_biokg(out, rng)
    write_lexicon(out, drugs)
    write_wordvecs(out, rng)
    write_instances(out, rng, drugs)


if __name__ == "__main__":
    main()
