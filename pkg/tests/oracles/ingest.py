"""Independent recount of the ingest summary for a raw JSONL file.

Cleaning works token by token (the synthetic noise tokens are whitespace
separated), and the mock embedding is rebuilt from its definition: sha1
buckets of lowercase alphanumeric runs, cosine by exact counts.
"""

import hashlib
import json
import math
from collections import Counter

from .density import words


def _bucket(tok, dim=256):
    return int.from_bytes(hashlib.sha1(tok.encode()).digest()[:8], "big") % dim


def _clean(text):
    kept = []
    for tok in text.split():
        if tok.lower().startswith(("http://", "https://", "www.")) or tok.startswith("@"):
            continue
        tok = "".join(ch for ch in tok if ord(ch) < 128)
        if tok in (":)", ":(", ":-)", ":-(", ":D", ";)"):
            continue
        if tok:
            kept.append(tok)
    return " ".join(kept)


def _cos(a, b):
    va = Counter(_bucket(t) for t in words(a))
    vb = Counter(_bucket(t) for t in words(b))
    dot = sum(va[k] * vb[k] for k in va)
    na = math.sqrt(sum(v * v for v in va.values()))
    nb = math.sqrt(sum(v * v for v in vb.values()))
    return dot / (na * nb) if na and nb else 0.0


def summarize(path, anchor="The Vaccines music band", threshold=0.7):
    lines = rejected = raw = reposts = 0
    originals = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            lines += 1
            try:
                obj = json.loads(line)
            except ValueError:
                rejected += 1
                continue
            raw += 1
            if obj.get("is_repost") or obj["text"].startswith("RT @"):
                reposts += 1
                continue
            originals.append(obj)
    groups = {}
    for o in originals:
        groups.setdefault((o["user_id"], o["created_at"][:10]), []).append(o)
    survivors = [min(g, key=lambda o: (o["created_at"], o["id"])) for g in groups.values()]
    kept = [o for o in survivors if _cos(_clean(o["text"]), anchor) < threshold]
    return {"lines": lines, "rejected": rejected, "raw": raw, "reposts": reposts,
            "after_dedup": len(survivors), "after_filter": len(kept),
            "unique_users": len({o["user_id"] for o in kept})}
