"""LLM stance annotation harness and classification metrics."""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, ProviderError

logger = logging.getLogger(__name__)

DEFAULT_TEMPERATURE = 0.4
SWEEP_TEMPERATURES = (0.0, 0.4, 0.7, 1.0)
DEFAULT_PER_MONTH = 2000
DEFAULT_TARGET = "vaccines"


class StanceLabel(str, Enum):
    FAVOR = "favor"
    AGAINST = "against"
    NEUTRAL = "neutral"


LABELS = ("against", "favor", "neutral")

_NORMALIZE = {
    "favor": "favor", "favour": "favor", "in favor": "favor", "in favour": "favor",
    "pro": "favor", "support": "favor", "supportive": "favor",
    "against": "against", "anti": "against", "oppose": "against", "opposed": "against",
    "neutral": "neutral", "neither": "neutral", "none": "neutral",
    "neither of the two inferences can be reasonably made": "neutral",
}


def normalize_label(text: str) -> StanceLabel | None:
    """Map a raw model answer onto a StanceLabel, or None if unmappable."""
    s = text.strip().lower()
    for prefix in ("stance:", "answer:", "label:"):
        if s.startswith(prefix):
            s = s[len(prefix):].strip()
    s = s.strip(" \t\n\"'`.*!")
    label = _NORMALIZE.get(s)
    if label is None:
        # a one-line answer followed by an explanation
        first = s.splitlines()[0].strip(" \"'`.*!,:") if s else ""
        label = _NORMALIZE.get(first)
    return StanceLabel(label) if label else None


@dataclass(frozen=True)
class PromptTemplate:
    system: str
    user: str
    target: str = DEFAULT_TARGET

    @classmethod
    def parse(cls, text: str, target: str = DEFAULT_TARGET) -> "PromptTemplate":
        """Template text: system message, a ``---`` line, then the user message."""
        parts = text.split("\n---\n", 1)
        system, user = (parts[0], parts[1]) if len(parts) == 2 else ("", parts[0])
        if "{text}" not in user:
            raise ValueError("prompt template user message needs a {text} slot")
        return cls(system.strip(), user.strip(), target)

    @classmethod
    def default(cls, target: str = DEFAULT_TARGET) -> "PromptTemplate":
        text = (resources.files("uedkit") / "data" / "stance_prompt.txt").read_text(encoding="utf-8")
        return cls.parse(text, target)

    @property
    def hash(self) -> str:
        raw = f"{self.system}\x00{self.user}\x00{self.target}".encode()
        return hashlib.sha256(raw).hexdigest()[:16]

    def messages(self, text: str) -> list[dict]:
        fill = lambda s: s.replace("{target}", self.target).replace("{text}", text)
        msgs = [{"role": "user", "content": fill(self.user)}]
        if self.system:
            msgs.insert(0, {"role": "system", "content": fill(self.system)})
        return msgs


@dataclass(frozen=True)
class StanceRecord:
    post_id: str
    label: str
    model_id: str
    temperature: float
    prompt_hash: str
    run_id: str


def sample_monthly(corpus: Iterable, per_month: int = DEFAULT_PER_MONTH, seed: int = 0) -> list:
    """Uniform sample without replacement of up to ``per_month`` posts per month.

    Each month uses its own RNG derived from (seed, month), so a month's
    sample depends only on that month's posts. Months with fewer posts are
    returned whole, with a warning. Output is sorted by (created_at, id).
    """
    if per_month < 1:
        raise ValueError("per_month must be >= 1")
    by_month: dict[str, list] = {}
    for p in corpus:
        by_month.setdefault(p.month, []).append(p)
    if not by_month:
        raise DataError("cannot sample from an empty corpus")
    out = []
    for month in sorted(by_month):
        posts = sorted(by_month[month], key=lambda p: (p.created_at, p.id))
        if len(posts) <= per_month:
            if len(posts) < per_month:
                logger.warning("month %s has %d posts (< %d); using all", month, len(posts), per_month)
            out.extend(posts)
            continue
        rng = random.Random(f"{seed}:{month}")
        out.extend(rng.sample(posts, per_month))
    return sorted(out, key=lambda p: (p.created_at, p.id))


def _read_log(path) -> dict[str, dict]:
    done = {}
    if path and Path(path).exists():
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    row = json.loads(line)
                    done[row["post_id"]] = row
    return done


@dataclass
class ClassifyResult:
    records: list
    failures: list  # post ids whose answers could not be parsed


def classify(posts: Sequence, client, template: PromptTemplate | None = None,
             temperature: float = DEFAULT_TEMPERATURE, run_id: str = "run-0",
             concurrency: int = 4, log_path=None) -> ClassifyResult:
    """Annotate each post's stance through ``client``.

    Results are appended to the run log at ``log_path`` as they complete; a
    rerun with the same log skips posts already answered. An unparseable
    answer is retried once and then logged as a parse failure. If the
    endpoint stays unavailable the run aborts with :class:`ProviderError`
    and the log acts as the resume checkpoint.
    """
    if not 0 <= temperature <= 2:
        raise ValueError("temperature must be in [0, 2]")
    template = template or PromptTemplate.default()
    ids = [p.id for p in posts]
    if len(set(ids)) != len(ids):
        raise DataError("duplicate post ids in classification input")
    done = _read_log(log_path)
    todo = [p for p in posts if p.id not in done]
    lock = threading.Lock()
    fh = open(log_path, "a", encoding="utf-8") if log_path else None

    def work(post):
        msgs = template.messages(post.text)
        label = None
        for _ in range(2):
            label = normalize_label(client.complete(msgs, temperature, run_id=run_id))
            if label is not None:
                break
        row = {"post_id": post.id, "label": label.value if label else None,
               "model_id": client.model, "temperature": temperature,
               "prompt_hash": template.hash, "run_id": run_id}
        if label is None:
            logger.warning("unparseable stance answer for post %s", post.id)
        with lock:
            done[post.id] = row
            if fh:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
                fh.flush()

    try:
        if concurrency <= 1:
            for p in todo:
                work(p)
        else:
            with ThreadPoolExecutor(max_workers=concurrency) as pool:
                futures = [pool.submit(work, p) for p in todo]
                errors = [f.exception() for f in futures]
                errors = [e for e in errors if e is not None]
                if errors:
                    raise errors[0]
    except ProviderError as exc:
        raise ProviderError(f"{exc} ({len(done)}/{len(posts)} posts done)", log_path) from exc
    finally:
        if fh:
            fh.close()

    if log_path:
        # completion order depends on thread timing; store the log sorted
        with open(log_path, "w", encoding="utf-8") as out:
            for pid in sorted(done):
                out.write(json.dumps(done[pid], sort_keys=True) + "\n")

    records, failures = [], []
    wanted = set(ids)
    for pid in sorted(wanted):
        row = done[pid]
        if row["label"] is None:
            failures.append(pid)
        else:
            records.append(StanceRecord(pid, row["label"], row["model_id"], row["temperature"],
                                        row["prompt_hash"], row["run_id"]))
    return ClassifyResult(records, failures)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: dict  # label -> ClassMetrics
    accuracy: float
    macro_avg: ClassMetrics
    weighted_avg: ClassMetrics
    total: int

    def to_dict(self) -> dict:
        d = {lab: asdict(m) for lab, m in self.per_class.items()}
        d["accuracy"] = self.accuracy
        d["macro avg"] = asdict(self.macro_avg)
        d["weighted avg"] = asdict(self.weighted_avg)
        return d


def f1_score(precision: float, recall: float) -> float:
    return 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)


def report_from_confusion(matrix, labels: Sequence[str] = LABELS) -> ClassificationReport:
    """Build the report from a confusion matrix (rows gold, columns predicted)."""
    m = np.asarray(matrix, dtype=np.int64)
    total = int(m.sum())
    per = {}
    for i, lab in enumerate(labels):
        tp = int(m[i, i])
        pred = int(m[:, i].sum())
        support = int(m[i, :].sum())
        p = tp / pred if pred else 0.0
        r = tp / support if support else 0.0
        per[lab] = ClassMetrics(p, r, f1_score(p, r), support)
    macro, weighted = averages(per)
    acc = int(np.trace(m)) / total if total else 0.0
    return ClassificationReport(per, acc, macro, weighted, total)


def averages(per_class: dict) -> tuple[ClassMetrics, ClassMetrics]:
    """Macro (unweighted) and support-weighted means of per-class metrics."""
    cs = list(per_class.values())
    total = sum(c.support for c in cs)
    mean = lambda attr: sum(getattr(c, attr) for c in cs) / len(cs)
    wmean = lambda attr: sum(getattr(c, attr) * c.support for c in cs) / total if total else 0.0
    macro = ClassMetrics(mean("precision"), mean("recall"), mean("f1"), total)
    weighted = ClassMetrics(wmean("precision"), wmean("recall"), wmean("f1"), total)
    return macro, weighted


def evaluate(predictions, gold, labels: Sequence[str] = LABELS) -> ClassificationReport:
    """Compare predicted and gold labels keyed by post id.

    Both arguments are mappings post_id -> label (or iterables of
    StanceRecord / (post_id, label) pairs). The id sets must match.
    """
    pred = _as_mapping(predictions)
    ref = _as_mapping(gold)
    if set(pred) != set(ref):
        missing = sorted(set(ref) - set(pred))
        extra = sorted(set(pred) - set(ref))
        raise DataError(f"post id mismatch: missing predictions {missing[:10]}, "
                        f"unexpected predictions {extra[:10]}")
    index = {lab: i for i, lab in enumerate(labels)}
    m = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for pid, g in ref.items():
        m[index[g], index[pred[pid]]] += 1
    return report_from_confusion(m, labels)


def _as_mapping(items) -> dict:
    if isinstance(items, dict):
        return {k: StanceLabel(v).value for k, v in items.items()}
    out = {}
    for it in items:
        if isinstance(it, StanceRecord):
            out[it.post_id] = it.label
        else:
            pid, lab = it
            out[pid] = StanceLabel(lab).value
    return out


def aggregate_reports(reports: Sequence[ClassificationReport]) -> dict:
    """Mean and sample SD of every cell across runs."""
    dicts = [r.to_dict() for r in reports]
    out = {}
    for key, val in dicts[0].items():
        if isinstance(val, dict):
            out[key] = {}
            for metric in val:
                xs = np.array([d[key][metric] for d in dicts], dtype=float)
                if metric == "support":
                    out[key][metric] = int(xs[0])
                else:
                    out[key][metric] = _mean_sd(xs)
        else:
            out[key] = _mean_sd(np.array([d[key] for d in dicts], dtype=float))
    out["runs"] = len(reports)
    return out


def _mean_sd(xs: np.ndarray) -> dict:
    sd = float(xs.std(ddof=1)) if len(xs) > 1 else 0.0
    return {"mean": float(xs.mean()), "sd": sd}


def monthly_proportions(posts: Sequence, records: Sequence[StanceRecord]) -> list[dict]:
    """Per-month stance fractions among successfully labelled sampled posts."""
    label_of = {r.post_id: r.label for r in records}
    rows: dict[str, dict] = {}
    for p in posts:
        row = rows.setdefault(p.month, {"n": 0, "favor": 0, "against": 0, "neutral": 0})
        row["n"] += 1
        lab = label_of.get(p.id)
        if lab is not None:
            row[lab] += 1
    out = []
    for month in sorted(rows):
        r = rows[month]
        labelled = r["favor"] + r["against"] + r["neutral"]
        frac = (lambda k: r[k] / labelled) if labelled else (lambda k: 0.0)
        out.append({"month": month, "n_sampled": r["n"], "favor_frac": frac("favor"),
                    "against_frac": frac("against"), "neutral_frac": frac("neutral")})
    return out
