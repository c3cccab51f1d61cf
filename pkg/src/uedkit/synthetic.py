"""Deterministic synthetic corpora and lexicons for demos, tests and benchmarks.

The real lexicons and post collections are not redistributable; this
module produces small stand-ins with the same file formats.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

# word: (categories, (warmth, sociability, trust, competence, arousal))
LEXICON = {
    "good": ({"positive", "joy", "trust"}, (0.85, 0.80, 0.82, 0.70, 0.40)),
    "happy": ({"positive", "joy"}, (0.88, 0.90, 0.70, 0.60, 0.65)),
    "grateful": ({"positive", "joy", "trust"}, (0.90, 0.85, 0.80, 0.55, 0.35)),
    "thankful": ({"positive", "joy"}, (0.88, 0.82, 0.78, 0.52, 0.30)),
    "protect": ({"positive", "trust", "anticipation"}, (0.80, 0.60, 0.85, 0.82, 0.45)),
    "safe": ({"positive", "trust", "joy"}, (0.82, 0.60, 0.88, 0.70, 0.20)),
    "effective": ({"positive", "trust"}, (0.65, 0.45, 0.75, 0.92, 0.40)),
    "science": ({"positive", "trust", "anticipation"}, (0.60, 0.40, 0.72, 0.90, 0.35)),
    "relief": ({"positive", "joy", "surprise"}, (0.78, 0.60, 0.65, 0.50, 0.30)),
    "hope": ({"positive", "anticipation", "joy", "trust"}, (0.80, 0.70, 0.70, 0.55, 0.45)),
    "soon": ({"anticipation"}, (0.55, 0.50, 0.50, 0.50, 0.50)),
    "wait": ({"anticipation"}, (0.45, 0.40, 0.45, 0.25, 0.40)),
    "sudden": ({"surprise"}, (0.40, 0.40, 0.40, 0.45, 0.80)),
    "shock": ({"surprise", "fear", "negative"}, (0.25, 0.30, 0.25, 0.35, 0.90)),
    "bad": ({"negative", "sadness", "anger"}, (0.10, 0.20, 0.15, 0.30, 0.55)),
    "die": ({"negative", "fear", "sadness"}, (0.12, 0.15, 0.20, 0.15, 0.75)),
    "dead": ({"negative", "fear", "sadness"}, (0.10, 0.12, 0.18, 0.12, 0.70)),
    "dangerous": ({"negative", "fear"}, (0.08, 0.15, 0.10, 0.45, 0.85)),
    "forced": ({"negative", "anger", "fear"}, (0.12, 0.18, 0.12, 0.50, 0.75)),
    "mandatory": ({"negative", "anger"}, (0.20, 0.25, 0.30, 0.60, 0.55)),
    "fake": ({"negative", "disgust", "anger"}, (0.10, 0.20, 0.05, 0.20, 0.60)),
    "fear": ({"negative", "fear"}, (0.15, 0.20, 0.20, 0.10, 0.80)),
    "injury": ({"negative", "fear", "sadness"}, (0.15, 0.20, 0.25, 0.15, 0.70)),
    "risk": ({"negative", "fear", "anticipation"}, (0.25, 0.30, 0.25, 0.40, 0.65)),
    "ill": ({"negative", "sadness", "fear"}, (0.25, 0.25, 0.35, 0.10, 0.45)),
    "poison": ({"negative", "disgust", "fear", "anger"}, (0.05, 0.10, 0.05, 0.35, 0.85)),
    "toxic": ({"negative", "disgust", "fear"}, (0.06, 0.10, 0.06, 0.30, 0.80)),
    "scam": ({"negative", "anger", "disgust"}, (0.05, 0.15, 0.02, 0.40, 0.65)),
    "lies": ({"negative", "anger", "disgust"}, (0.06, 0.12, 0.03, 0.30, 0.60)),
    "harm": ({"negative", "fear", "sadness", "anger"}, (0.10, 0.15, 0.12, 0.25, 0.70)),
    "wear": (set(), (0.50, 0.45, 0.50, 0.30, 0.30)),
    "masks": (set(), (0.50, 0.45, 0.55, 0.25, 0.30)),
    "shot": ({"fear"}, (0.30, 0.35, 0.40, 0.45, 0.60)),
    "doctor": ({"trust", "positive"}, (0.75, 0.60, 0.85, 0.85, 0.40)),
    "kids": ({"joy"}, (0.85, 0.85, 0.70, 0.30, 0.55)),
    "new": ({"anticipation", "surprise"}, (0.55, 0.55, 0.50, 0.55, 0.55)),
    "vaccine": ({"trust", "positive"}, (0.60, 0.40, 0.65, 0.70, 0.40)),
    "vaccination": ({"trust", "positive"}, (0.60, 0.40, 0.65, 0.70, 0.40)),
    "flu": ({"negative", "fear", "sadness"}, (0.30, 0.30, 0.40, 0.30, 0.40)),
    "the": (set(), (0.50, 0.50, 0.50, 0.50, 0.20)),
    "today": (set(), (0.55, 0.55, 0.55, 0.50, 0.35)),
}

PRO = ["grateful", "thankful", "protect", "safe", "effective", "science", "relief",
       "happy", "protect", "doctor", "kids", "good", "hope", "wear", "masks", "shot", "wait",
       "risk", "die", "bad", "ill"]
ANTI = ["poison", "toxic", "dangerous", "forced", "mandatory", "scam", "fake", "lies",
        "injury", "harm", "dead", "fear", "bad", "risk", "kids", "shock", "sudden"]
NEUTRAL = ["new", "soon", "doctor", "today", "the", "shot", "wait", "kids", "sudden"]
FILLER = ["the", "my", "a", "got", "is", "for", "and", "to", "this", "today", "week",
          "clinic", "line", "appointment", "news", "people", "school", "state", "report"]
TOPIC = ["vaccine", "vaccines", "vaccination", "vax", "flu", "#vaccine", "booster", "jab"]
NOISE = ["https://t.co/x1y2", "@health_news", "www.example.org/story", ":)", "\U0001F489",
         "café", "❤️"]
BAND = ["The Vaccines band played music tonight", "The Vaccines music band new album",
        "saw The Vaccines band live music show"]


def write_lexicons(directory) -> tuple[Path, Path]:
    """Write ``emotion.txt`` (NRC layout) and ``warmth.csv`` into ``directory``."""
    from .lexicon import CATEGORIES

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "emotion.txt", "w", encoding="utf-8", newline="\n") as fh:
        for word in sorted(LEXICON):
            cats = LEXICON[word][0]
            for c in sorted(CATEGORIES):
                fh.write(f"{word}\t{c}\t{1 if c in cats else 0}\n")
    with open(d / "warmth.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("word,warmth,sociability,trust,competence,arousal\n")
        for word in sorted(LEXICON):
            w = LEXICON[word][1]
            fh.write(word + "," + ",".join(f"{v:.3f}" for v in w) + "\n")
    return d / "emotion.txt", d / "warmth.csv"


def _month_list(start_year: int, months: int) -> list[tuple[int, int]]:
    return [(start_year + i // 12, i % 12 + 1) for i in range(months)]


def _post_text(rng: random.Random, stance: str, covid: bool) -> str:
    pool = {"favor": PRO, "against": ANTI, "neutral": NEUTRAL}[stance]
    words = [rng.choice(TOPIC)]
    n_cue = rng.randint(1, 3) if stance != "neutral" else rng.randint(0, 1)
    words += [rng.choice(pool) for _ in range(n_cue)]
    if covid and rng.random() < 0.4:
        words.append(rng.choice(["new", "sudden", "hope", "science"]))
    words += [rng.choice(FILLER) for _ in range(rng.randint(3, 9))]
    rng.shuffle(words)
    if rng.random() < 0.3:
        words.insert(rng.randrange(len(words) + 1), rng.choice(NOISE))
    text = " ".join(words)
    return text[0].upper() + text[1:]


def generate_posts(n: int, seed: int = 0, start_year: int = 2018, months: int = 48,
                   users: int | None = None, split_year: int = 2020,
                   band_rate: float = 0.02, repost_rate: float = 0.02):
    """Yield ``(post_dict, stance)`` pairs; stance is None for band and re-posts."""
    rng = random.Random(seed)
    cal = _month_list(start_year, months)
    users = users or max(10, n // 7)
    for i in range(n):
        y, m = cal[rng.randrange(len(cal))]
        day = rng.randint(1, 28)
        ts = f"{y:04d}-{m:02d}-{day:02d}T{rng.randrange(24):02d}:{rng.randrange(60):02d}:{rng.randrange(60):02d}Z"
        covid = y >= split_year
        u = rng.random()
        stance = None
        if u < band_rate:
            text = rng.choice(BAND)
        elif u < band_rate + repost_rate:
            text = "RT @someone: " + _post_text(rng, "favor", covid)
        else:
            p_against = 0.25 + (0.15 if covid and m > 6 else 0.0)
            r = rng.random()
            stance = "against" if r < p_against else ("favor" if r < p_against + 0.45 else "neutral")
            text = _post_text(rng, stance, covid)
        post = {"id": f"p{i:07d}", "user_id": f"u{rng.randrange(users):05d}",
                "created_at": ts, "text": text}
        yield post, stance


def write_corpus(path, n: int, seed: int = 0, malformed: int = 0, **kw) -> Path:
    """Write ``n`` synthetic posts as JSONL, plus ``malformed`` broken lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rng = random.Random(seed + 1)
    bad_at = set(rng.sample(range(n), min(malformed, n))) if malformed else set()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, (post, _) in enumerate(generate_posts(n, seed, **kw)):
            if i in bad_at:
                fh.write('{"id": "broken", "text": \n')
            fh.write(json.dumps(post) + "\n")
    return path


def write_gold(path, n: int = 90, seed: int = 7) -> Path:
    """A small annotated set: post_id, text, label."""
    rng = random.Random(seed)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(n):
            stance = ("favor", "against", "neutral")[i % 3]
            text = _post_text(rng, stance, covid=rng.random() < 0.5)
            fh.write(json.dumps({"post_id": f"g{i:04d}", "text": text, "label": stance}) + "\n")
    return path


def write_bundle(directory, n: int = 1000, seed: int = 2024) -> Path:
    """The bundled demo set: corpus, lexicons, gold labels and a config."""
    d = Path(directory)
    write_lexicons(d / "lexicons")
    write_corpus(d / "corpus.jsonl", n, seed, malformed=3)
    write_gold(d / "gold.jsonl")
    (d / "synthetic.conf").write_text(
        "# demo configuration for the bundled synthetic corpus\n"
        "input = corpus.jsonl\n"
        "lexicons = lexicons\n"
        "stance.gold = gold.jsonl\n"
        "embedding.provider = mock\n"
        "llm.provider = mock\n"
        "stance.per_month = 10\n"
        "stance.seed = 11\n"
        "stance.runs = 3\n"
        "stance.sweep = true\n"
        "stance.concurrency = 4\n"
        "rolling = 3\n"
        "alpha = 0.32\n"
        "split = 2020-01-01\n",
        encoding="utf-8")
    return d
