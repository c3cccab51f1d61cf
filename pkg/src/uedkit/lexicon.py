"""Word-emotion lexicons, tokenization and per-post scoring.

Two lexicons are supported:

* a categorical emotion lexicon in ``word<TAB>category<TAB>flag`` format
  (eight emotions plus two sentiments), and
* a continuous warmth lexicon, CSV with ``word,warmth,sociability,trust,
  competence,arousal`` columns, every score in [0, 1].

Continuous scores are stored internally as integers in millionths so that
sums over any partition of the corpus are exact and order independent.
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import DataError

logger = logging.getLogger(__name__)

EMOTIONS = ("anger", "anticipation", "disgust", "fear", "joy",
            "sadness", "surprise", "trust")
SENTIMENTS = ("negative", "positive")
CATEGORIES = SENTIMENTS + EMOTIONS
WARMTH_DIMENSIONS = ("warmth", "sociability", "trust", "competence", "arousal")
LOW_CATEGORIES = ("low_warmth", "low_competence")

SCORE_SCALE = 1_000_000
DEFAULT_LOW_THRESHOLD = 1 / 3

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character.

    ``#word`` therefore yields ``word``; hyphenated compounds split apart.
    """
    return _TOKEN_RE.findall(text.lower())


def read_word_list(path) -> set[str]:
    """One word per line; blank lines and ``#`` comments ignored."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip().lower()
            if line:
                words.add(line)
    return words


def default_exclusions() -> set[str]:
    """Vaccine variants plus the shipped illness-term list."""
    ref = resources.files("uedkit") / "data" / "exclusions.txt"
    with resources.as_file(ref) as path:
        return read_word_list(path)


def _resolve_exclusions(exclusions) -> set[str]:
    if exclusions is None:
        return default_exclusions()
    if isinstance(exclusions, (str, Path)):
        return read_word_list(exclusions)
    return {w.lower() for w in exclusions}


@dataclass(frozen=True)
class EmotionLexicon:
    entries: Mapping[str, frozenset]

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word in self.entries

    def get(self, word, default=frozenset()):
        return self.entries.get(word, default)


@dataclass(frozen=True)
class WarmthLexicon:
    # word -> tuple of scaled integer scores, ordered as WARMTH_DIMENSIONS
    entries: Mapping[str, tuple]

    def __len__(self):
        return len(self.entries)

    def __contains__(self, word):
        return word in self.entries

    def scores(self, word) -> dict[str, float]:
        raw = self.entries[word]
        return {d: v / SCORE_SCALE for d, v in zip(WARMTH_DIMENSIONS, raw)}

    def score(self, word, dimension) -> float:
        return self.entries[word][WARMTH_DIMENSIONS.index(dimension)] / SCORE_SCALE

    def low_words(self, dimension: str, threshold: float = DEFAULT_LOW_THRESHOLD) -> frozenset:
        idx = WARMTH_DIMENSIONS.index(dimension)
        cut = threshold * SCORE_SCALE
        return frozenset(w for w, s in self.entries.items() if s[idx] < cut)


def load_emotion_lexicon(path, exclusions=None) -> EmotionLexicon:
    """Load a tab-separated word/category/flag file.

    Only rows flagged ``1`` become associations. Words in ``exclusions``
    (default: vaccine variants and illness terms) are dropped entirely.
    Unknown categories raise :class:`DataError` with the line number; a
    repeated (word, category) row overrides the earlier one.
    """
    excluded = _resolve_exclusions(exclusions)
    flags: dict[tuple[str, str], bool] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected word<TAB>category<TAB>flag")
            word, category, flag = (p.strip() for p in parts)
            word = word.lower()
            if category not in CATEGORIES:
                raise DataError(f"{path}:{lineno}: unknown category {category!r}")
            if flag not in ("0", "1"):
                raise DataError(f"{path}:{lineno}: flag must be 0 or 1, got {flag!r}")
            key = (word, category)
            if key in flags:
                logger.warning("%s:%d: duplicate row for %s/%s, last one wins",
                               path, lineno, word, category)
            flags[key] = flag == "1"

    entries: dict[str, set] = {}
    for (word, category), on in flags.items():
        if on and word not in excluded:
            entries.setdefault(word, set()).add(category)
    lex = EmotionLexicon({w: frozenset(c) for w, c in entries.items()})
    logger.info("loaded %d emotion-lexicon words from %s", len(lex), path)
    return lex


def load_warmth_lexicon(path, exclusions=None) -> WarmthLexicon:
    excluded = _resolve_exclusions(exclusions)
    entries = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in ("word",) + WARMTH_DIMENSIONS:
            if col not in header:
                raise DataError(f"{path}: missing column {col!r}")
        for row in reader:
            lineno = reader.line_num
            word = row["word"].strip().lower()
            scaled = []
            for dim in WARMTH_DIMENSIONS:
                try:
                    value = float(row[dim])
                except (TypeError, ValueError):
                    raise DataError(f"{path}:{lineno}: non-numeric {dim} score {row[dim]!r}") from None
                if not 0.0 <= value <= 1.0:
                    raise DataError(f"{path}:{lineno}: {dim} score {value} outside [0, 1]")
                scaled.append(round(value * SCORE_SCALE))
            if word and word not in excluded:
                entries[word] = tuple(scaled)
    logger.info("loaded %d warmth-lexicon words from %s", len(entries), path)
    return WarmthLexicon(entries)


@dataclass
class PostScore:
    post_id: str
    month: str
    token_count: int = 0
    emotion_counts: dict = field(default_factory=dict)
    low_counts: dict = field(default_factory=dict)
    # scaled integer sums, see SCORE_SCALE
    score_sums: dict = field(default_factory=dict)
    warmth_hits: int = 0

    def count(self, category: str) -> int:
        if category in self.low_counts:
            return self.low_counts[category]
        return self.emotion_counts.get(category, 0)

    def _sum(self, dim):
        return self.score_sums.get(dim, 0) / SCORE_SCALE

    @property
    def warmth_sum(self):
        return self._sum("warmth")

    @property
    def sociability_sum(self):
        return self._sum("sociability")

    @property
    def trust_sum(self):
        return self._sum("trust")

    @property
    def competence_sum(self):
        return self._sum("competence")


class Scorer:
    """Scores posts against a fixed pair of lexicons.

    Low-score word sets are resolved once so that scoring stays a handful
    of dict lookups per token.
    """

    def __init__(self, elex: EmotionLexicon, wlex: WarmthLexicon,
                 low_threshold: float = DEFAULT_LOW_THRESHOLD):
        self.elex = elex
        self.wlex = wlex
        self.low_threshold = low_threshold
        self.low_sets = {
            "low_warmth": wlex.low_words("warmth", low_threshold),
            "low_competence": wlex.low_words("competence", low_threshold),
        }

    def score_tokens(self, post_id: str, month: str, tokens: Iterable[str]) -> PostScore:
        elex = self.elex.entries
        wlex = self.wlex.entries
        low_w = self.low_sets["low_warmth"]
        low_c = self.low_sets["low_competence"]
        emo = dict.fromkeys(CATEGORIES, 0)
        sums = [0, 0, 0, 0, 0]
        n = hits = nlw = nlc = 0
        for tok in tokens:
            n += 1
            cats = elex.get(tok)
            if cats:
                for c in cats:
                    emo[c] += 1
            s = wlex.get(tok)
            if s is not None:
                hits += 1
                sums[0] += s[0]
                sums[1] += s[1]
                sums[2] += s[2]
                sums[3] += s[3]
                sums[4] += s[4]
                if tok in low_w:
                    nlw += 1
                if tok in low_c:
                    nlc += 1
        return PostScore(
            post_id=post_id,
            month=month,
            token_count=n,
            emotion_counts=emo,
            low_counts={"low_warmth": nlw, "low_competence": nlc},
            score_sums=dict(zip(WARMTH_DIMENSIONS, sums)),
            warmth_hits=hits,
        )

    def score(self, post) -> PostScore:
        return self.score_tokens(post.id, post.month, tokenize(post.text))


def score_post(post, elex: EmotionLexicon, wlex: WarmthLexicon,
               low_threshold: float = DEFAULT_LOW_THRESHOLD) -> PostScore:
    """Score one post. A word with k categories adds one to each of the k counts."""
    return Scorer(elex, wlex, low_threshold).score(post)
