"""Ingestion and preprocessing of timestamped post collections.

Pipeline: parse -> drop re-posts -> clean_text -> dedup_daily ->
semantic_filter, then write a canonical JSONL corpus sorted by
(created_at, id).
"""

from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, ProviderError
from .lexicon import tokenize
from .parallel import chunked, ordered_map

logger = logging.getLogger(__name__)

DEFAULT_ANCHOR = "The Vaccines music band"
DEFAULT_THRESHOLD = 0.7
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"

DEFAULT_EMOTICONS = (
    ":)", ":-)", ":(", ":-(", ":D", ":-D", ";)", ";-)", ":P", ":-P", ":p",
    ":-p", ":'(", ":/", ":-/", ":|", ":-|", ":o", ":O", ":-o", ":-O", ":*",
    ":-*", "<3", "</3", "xD", "XD", "=)", "=(", "^_^", "^^", "-_-", "T_T",
    ":3", ":]", ":[", ":>", ":<", "8-)", "B-)", ":S",
)

_URL_RE = re.compile(r"(?:https?|ftp)://\S+|\bwww\.\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_EMOJI_RE = re.compile(
    "["
    "\U0001F000-\U0001FAFF"  # pictographs, emoticons, transport, flags
    "\u2300-\u23FF"  # misc technical
    "\u2600-\u27BF"  # misc symbols, dingbats
    "\u2B00-\u2BFF"  # arrows, stars
    "\uFE00-\uFE0F"  # variation selectors
    "\u200D\u20E3"  # zero-width joiner, keycap
    "]+"
)
_SPACE_RE = re.compile(r"\s+")


def _emoticon_re(emoticons: Sequence[str]) -> re.Pattern:
    alts = "|".join(re.escape(e) for e in sorted(emoticons, key=len, reverse=True))
    return re.compile(rf"(?<!\S)(?:{alts})(?!\S)")


_DEFAULT_EMOTICON_RE = _emoticon_re(DEFAULT_EMOTICONS)


def _clean_once(text: str, emoticon_re: re.Pattern) -> str:
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(" ", text)
    text = _EMOJI_RE.sub(" ", text)
    # remaining non-ASCII characters are deleted, not replaced: "café" -> "caf"
    text = text.encode("ascii", "ignore").decode("ascii")
    text = emoticon_re.sub(" ", text)
    return _SPACE_RE.sub(" ", text).strip()


def clean_text(raw: str, emoticons: Sequence[str] | None = None) -> str:
    """Strip URLs, @-mentions, emoji, ASCII emoticons and non-ASCII characters.

    Whitespace is collapsed and trimmed. The rules are re-applied until the
    text stops changing, so ``clean_text`` is idempotent.
    """
    pattern = _DEFAULT_EMOTICON_RE if emoticons is None else _emoticon_re(emoticons)
    prev, text = None, raw
    while text != prev:
        prev, text = text, _clean_once(text, pattern)
    return text


def parse_timestamp(value: str) -> datetime:
    """Parse ISO-8601 into an aware UTC datetime at second precision."""
    if not isinstance(value, str) or not value:
        raise ValueError("created_at must be a non-empty string")
    s = value.strip()
    if s.endswith(("Z", "z")):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.strftime(TIMESTAMP_FORMAT)


@dataclass(frozen=True)
class RawPost:
    id: str
    user_id: str
    created_at: str  # canonical "YYYY-MM-DDTHH:MM:SSZ"
    text: str
    is_repost: bool = False

    @classmethod
    def from_dict(cls, obj) -> "RawPost":
        if not isinstance(obj, dict):
            raise ValueError("line is not a JSON object")
        for key in ("id", "user_id", "created_at", "text"):
            if key not in obj:
                raise ValueError(f"missing field {key!r}")
        pid, uid, text = obj["id"], obj["user_id"], obj["text"]
        if isinstance(pid, int) and not isinstance(pid, bool):
            pid = str(pid)
        if isinstance(uid, int) and not isinstance(uid, bool):
            uid = str(uid)
        if not isinstance(pid, str) or not pid:
            raise ValueError("id must be a non-empty string")
        if not isinstance(uid, str) or not uid:
            raise ValueError("user_id must be a non-empty string")
        if not isinstance(text, str):
            raise ValueError("text must be a string")
        created = format_timestamp(parse_timestamp(obj["created_at"]))
        repost = bool(obj.get("is_repost", False)) or text.startswith("RT @")
        return cls(pid, uid, created, text, repost)


@dataclass(frozen=True)
class PostRecord:
    id: str
    user_id: str
    created_at: str
    text: str
    token_count: int

    @property
    def day(self) -> str:
        return self.created_at[:10]

    @property
    def month(self) -> str:
        return self.created_at[:7]

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=True)

    @classmethod
    def from_dict(cls, obj) -> "PostRecord":
        return cls(obj["id"], obj["user_id"], obj["created_at"], obj["text"],
                   int(obj["token_count"]))


@dataclass(frozen=True)
class FilterDecision:
    post_id: str
    similarity: float
    kept: bool


def make_record(raw: RawPost, emoticons=None) -> PostRecord:
    text = clean_text(raw.text, emoticons)
    return PostRecord(raw.id, raw.user_id, raw.created_at, text, len(tokenize(text)))


def dedup_daily(posts: Iterable) -> list:
    """Keep one post per (user_id, UTC calendar day).

    The earliest post wins, ties broken by the smallest id. Output is sorted
    by (created_at, id). Raises :class:`DataError` on a repeated id.
    """
    seen_ids = set()
    best: dict[tuple[str, str], object] = {}
    for p in posts:
        if p.id in seen_ids:
            raise DataError(f"duplicate post id {p.id!r}")
        seen_ids.add(p.id)
        key = (p.user_id, p.created_at[:10])
        cur = best.get(key)
        if cur is None or (p.created_at, p.id) < (cur.created_at, cur.id):
            best[key] = p
    return sorted(best.values(), key=lambda p: (p.created_at, p.id))


def _load_checkpoint(path, threshold) -> dict[str, FilterDecision]:
    done = {}
    if path and os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    sim = d["similarity"]
                    done[d["post_id"]] = FilterDecision(d["post_id"], sim, sim < threshold)
        logger.info("resuming semantic filter: %d decisions in %s", len(done), path)
    return done


def semantic_filter(posts: Sequence[PostRecord], anchor: str = DEFAULT_ANCHOR,
                    threshold: float = DEFAULT_THRESHOLD, provider=None,
                    batch_size: int = 256, checkpoint=None):
    """Drop posts whose embedding is too close to ``anchor``.

    A post is kept iff cosine(post, anchor) < threshold. Every post gets a
    :class:`FilterDecision`. Decisions are appended to ``checkpoint`` batch by
    batch; if the provider gives up, :class:`ProviderError` propagates with
    the checkpoint path and a later call with the same checkpoint resumes.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    if provider is None:
        raise ValueError("an embedding provider is required")
    done = _load_checkpoint(checkpoint, threshold)
    todo = [p for p in posts if p.id not in done]

    if todo:
        try:
            anchor_vec = _unit(np.asarray(provider.embed([anchor]), dtype=float)[0])
        except ProviderError as exc:
            raise ProviderError(str(exc), checkpoint) from exc
        fh = open(checkpoint, "a", encoding="utf-8") if checkpoint else None
        try:
            for batch in chunked(todo, batch_size):
                try:
                    vecs = np.asarray(provider.embed([p.text for p in batch]), dtype=float)
                except ProviderError as exc:
                    raise ProviderError(str(exc), checkpoint) from exc
                for p, v in zip(batch, vecs):
                    sim = float(np.clip(_unit(v) @ anchor_vec, -1.0, 1.0))
                    dec = FilterDecision(p.id, sim, sim < threshold)
                    done[p.id] = dec
                    if fh:
                        fh.write(json.dumps(asdict(dec)) + "\n")
                if fh:
                    fh.flush()
        finally:
            if fh:
                fh.close()

    decisions = [done[p.id] for p in posts]
    kept = [p for p, d in zip(posts, decisions) if d.kept]
    return kept, decisions


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    return v / n if n > 0 else v


@dataclass
class IngestConfig:
    filter_enabled: bool = True
    anchor: str = DEFAULT_ANCHOR
    threshold: float = DEFAULT_THRESHOLD
    order: str = "clean-dedup-filter"  # or clean-filter-dedup
    workers: int = 1
    chunk_size: int = 2000
    batch_size: int = 256
    emoticons: tuple | None = None


@dataclass
class CorpusSummary:
    lines: int = 0
    rejected: int = 0
    raw: int = 0
    reposts: int = 0
    after_dedup: int = 0
    after_filter: int = 0
    unique_users: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d.update(d.pop("extra"))
        return d


def _clean_chunk(args):
    chunk, emoticons = args
    return [make_record(p, emoticons) for p in chunk]


def read_raw(path, rejects: list) -> Iterator[RawPost]:
    """Yield valid RawPosts; append ``{line, reason}`` for every bad line."""
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                yield RawPost.from_dict(json.loads(line))
            except (ValueError, TypeError) as exc:
                rejects.append({"line": lineno, "reason": str(exc)})


def iter_corpus(path) -> Iterator[PostRecord]:
    """Stream PostRecords from a canonical corpus file (or a directory holding corpus.jsonl)."""
    path = Path(path)
    if path.is_dir():
        path = path / "corpus.jsonl"
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield PostRecord.from_dict(json.loads(line))


def ingest(path, out_dir, config: IngestConfig | None = None, provider=None) -> CorpusSummary:
    """Run the preprocessing pipeline over a JSONL file and write the corpus.

    Writes ``corpus.jsonl``, ``rejects.jsonl``, ``filter_decisions.jsonl``
    and ``summary.json`` into ``out_dir``.
    """
    config = config or IngestConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary = CorpusSummary()

    rejects: list = []
    originals = []
    for raw in read_raw(path, rejects):
        summary.raw += 1
        if raw.is_repost:
            summary.reposts += 1
        originals.append(raw)
    summary.rejected = len(rejects)
    summary.lines = summary.raw + summary.rejected

    seen = set()
    for r in originals:
        if r.id in seen:
            raise DataError(f"duplicate post id {r.id!r}")
        seen.add(r.id)
    del seen

    raws = [r for r in originals if not r.is_repost]
    del originals
    jobs = ((chunk, config.emoticons) for chunk in chunked(raws, config.chunk_size))
    records = [rec for part in ordered_map(_clean_chunk, jobs, config.workers) for rec in part]

    def run_filter(items):
        if not config.filter_enabled:
            return items
        if provider is None:
            raise ValueError("semantic filter enabled but no embedding provider given")
        kept, decisions = semantic_filter(items, config.anchor, config.threshold, provider,
                                          config.batch_size, out / "filter_checkpoint.jsonl")
        with open(out / "filter_decisions.jsonl", "w", encoding="utf-8") as fh:
            for d in decisions:
                fh.write(json.dumps(asdict(d)) + "\n")
        return kept

    if config.order == "clean-dedup-filter":
        records = dedup_daily(records)
        summary.after_dedup = len(records)
        records = run_filter(records)
    elif config.order == "clean-filter-dedup":
        records = sorted(records, key=lambda p: (p.created_at, p.id))
        records = run_filter(records)
        records = dedup_daily(records)
        summary.after_dedup = len(records)
    else:
        raise ValueError(f"unknown pipeline order {config.order!r}")
    summary.after_filter = len(records)
    summary.unique_users = len({p.user_id for p in records})

    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for p in records:
            fh.write(p.to_json() + "\n")
    with open(out / "rejects.jsonl", "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(json.dumps(r) + "\n")
    ckpt = out / "filter_checkpoint.jsonl"
    if ckpt.exists():
        ckpt.unlink()
    with open(out / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    logger.info("ingest: %s", summary.to_dict())
    return summary
