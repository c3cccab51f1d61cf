"""Brute-force monthly emotion-word density with exact fractions.

Reads the NRC-style and CSV lexicon files itself and tokenises with a
character loop, so it shares no code with the package.
"""

import json
from fractions import Fraction


def read_emotion(path, excluded=()):
    assoc = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.strip().split("\t")
            if len(parts) != 3 or parts[2] != "1" or parts[0] in excluded:
                continue
            assoc.setdefault(parts[0], set()).add(parts[1])
    return assoc


def read_scores(path, excluded=()):
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            cells = line.strip().split(",")
            if cells[0] in excluded:
                continue
            out[cells[0]] = {h: Fraction(c) for h, c in zip(header[1:], cells[1:])}
    return out


def words(text):
    out, cur = [], ""
    for ch in text.lower():
        if ("a" <= ch <= "z") or ("0" <= ch <= "9"):
            cur += ch
        else:
            if cur:
                out.append(cur)
            cur = ""
    if cur:
        out.append(cur)
    return out


def monthly(posts, assoc, scores=None, low=Fraction(1, 3)):
    """{month: {category: (count, tokens)}} over dicts with created_at and text."""
    table = {}
    for p in posts:
        month = p["created_at"][:7]
        row = table.setdefault(month, {"__tokens__": 0})
        for w in words(p["text"]):
            row["__tokens__"] += 1
            for cat in assoc.get(w, ()):
                row[cat] = row.get(cat, 0) + 1
            if scores is not None and w in scores:
                if scores[w]["warmth"] < low:
                    row["low_warmth"] = row.get("low_warmth", 0) + 1
                if scores[w]["competence"] < low:
                    row["low_competence"] = row.get("low_competence", 0) + 1
    out = {}
    for month, row in table.items():
        total = row.pop("__tokens__")
        out[month] = {cat: (n, total) for cat, n in row.items()}
        out[month]["__tokens__"] = (total, total)
    return out


def load_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]
