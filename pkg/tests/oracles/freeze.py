"""Regenerate the frozen oracle outputs under tests/golden.

Run from the repository root:  python -m tests.oracles.freeze
The fixtures are built here from seeded numpy/random draws; nothing is
taken from the package under test except the synthetic corpus writer.
"""

import json
import random
from pathlib import Path

import numpy as np

from . import density, ingest, mw

GOLDEN = Path(__file__).resolve().parent.parent / "golden"
SYNTH = Path(__file__).resolve().parents[2] / "src" / "uedkit" / "data" / "synthetic"


def mw_fixtures():
    rng = np.random.default_rng(20240611)
    cases = []
    shapes = [(15, 15), (20, 25), (30, 30), (12, 40), (36, 84), (25, 25), (40, 18), (50, 50),
              (16, 30), (22, 22)]
    for i, (n1, n2) in enumerate(shapes):
        shift = [0.0, 0.3, 0.5, 0.2, 0.4, 0.6, 0.1, 0.25, 0.7, 0.35][i]
        a = rng.normal(0, 1, n1)
        b = rng.normal(shift, 1, n2)
        if i % 3 == 1:
            a, b = np.round(a * 2) / 2, np.round(b * 2) / 2  # heavy ties
        a, b = [float(x) for x in a], [float(x) for x in b]
        p = mw.permutation_p(a, b, draws=1_000_000, seed=1000 + i)
        cases.append({"a": a, "b": b, "mc_p": p})
        print(f"fixture {i}: n=({n1},{n2}) mc_p={p:.5f}")
    return cases


def density_fixture():
    rng = random.Random(77)
    vocab = ["good", "bad", "terrible", "day", "news", "hope", "fear", "Safe", "#Good",
             "state-of-the-art", "café", "ok", "the", "shot"]
    posts = []
    for i in range(100):
        month = f"2021-{rng.randint(1, 6):02d}"
        text = " ".join(rng.choice(vocab) for _ in range(rng.randint(0, 8)))
        posts.append({"id": f"d{i:03d}", "user_id": f"u{i}", "created_at": f"{month}-0{rng.randint(1, 9)}T00:00:00Z",
                      "text": text, "token_count": len(density.words(text))})
    return posts


def main():
    GOLDEN.mkdir(exist_ok=True)
    (GOLDEN / "mw_montecarlo.json").write_text(json.dumps(mw_fixtures(), indent=1) + "\n")

    posts = density_fixture()
    with open(GOLDEN / "density_100_corpus.jsonl", "w") as fh:
        for p in posts:
            fh.write(json.dumps(p) + "\n")
    assoc = density.read_emotion(GOLDEN / "density_emotion.txt")
    scores = density.read_scores(GOLDEN / "density_warmth.csv")
    table = density.monthly(posts, assoc, scores)
    out = {m: {c: list(v) for c, v in sorted(row.items())} for m, row in sorted(table.items())}
    (GOLDEN / "density_100_expected.json").write_text(json.dumps(out, indent=1, sort_keys=True) + "\n")

    summary = ingest.summarize(SYNTH / "corpus.jsonl")
    (GOLDEN / "synthetic_ingest_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(summary)


if __name__ == "__main__":
    main()
