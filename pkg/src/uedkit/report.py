"""Charts and artifact manifests.

All charts are hand-assembled SVG with fixed numeric precision and no
embedded timestamps, so identical inputs give byte-identical files. Each
chart is written next to a CSV/JSON file holding the numbers it draws.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape

from .dynamics import HomeBase2D
from .lexicon import DEFAULT_LOW_THRESHOLD, WarmthLexicon, tokenize

logger = logging.getLogger(__name__)

DEFAULT_K = 15
DIMENSIONS = {"low-warmth": "warmth", "low-competence": "competence"}

WIDTH, HEIGHT = 720, 400
MARGIN = 50
PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class TreemapSpec:
    stance: str
    dimension: str
    entries: tuple  # ((word, frequency), ...)

    def to_dict(self):
        return {"stance": self.stance, "dimension": self.dimension,
                "entries": [[w, f] for w, f in self.entries]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["stance"], d["dimension"], tuple((w, int(f)) for w, f in d["entries"]))


def top_k_low_words(texts: Iterable[str], wlex: WarmthLexicon, stance: str, dimension: str,
                    threshold: float = DEFAULT_LOW_THRESHOLD, k: int = DEFAULT_K,
                    weight: str = "token") -> TreemapSpec:
    """Most frequent words scoring below ``threshold`` on a dimension.

    ``weight="token"`` counts every occurrence, ``weight="post"`` counts each
    word at most once per post. Ties are broken alphabetically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not 0 < threshold < 1:
        raise ValueError("threshold must be in (0, 1)")
    if dimension not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {sorted(DIMENSIONS)}")
    low = wlex.low_words(DIMENSIONS[dimension], threshold)
    counts: Counter = Counter()
    n = 0
    for text in texts:
        n += 1
        toks = [t for t in tokenize(text) if t in low]
        counts.update(set(toks) if weight == "post" else toks)
    if n == 0:
        logger.warning("top_k_low_words: empty %s subset", stance)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:k]
    return TreemapSpec(stance, dimension, tuple(ranked))


# -- layout -------------------------------------------------------------------

def _worst(row: Sequence[float], side: float) -> float:
    s = sum(row)
    return max(max(side * side * r / (s * s), s * s / (side * side * r)) for r in row)


def squarify(sizes: Sequence[float], x: float, y: float, w: float, h: float) -> list[tuple]:
    """Squarified treemap: rectangles (x, y, w, h) for sizes sorted descending."""
    total = float(sum(sizes))
    if total <= 0:
        return []
    areas = [s * w * h / total for s in sizes]
    rects = []
    i = 0
    while i < len(areas):
        side = min(w, h)
        row = [areas[i]]
        j = i + 1
        while j < len(areas) and _worst(row + [areas[j]], side) <= _worst(row, side):
            row.append(areas[j])
            j += 1
        s = sum(row)
        if w >= h:
            col_w = s / h if h else 0
            yy = y
            for a in row:
                rh = a / col_w if col_w else 0
                rects.append((x, yy, col_w, rh))
                yy += rh
            x, w = x + col_w, w - col_w
        else:
            row_h = s / w if w else 0
            xx = x
            for a in row:
                rw = a / row_h if row_h else 0
                rects.append((xx, y, rw, row_h))
                xx += rw
            y, h = y + row_h, h - row_h
        i = j
    return rects


# -- svg helpers ----------------------------------------------------------------

def _f(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _svg(body: list[str], style: str, title: str) -> str:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<title>{escape(title)}</title>",
        f"<style>{style}</style>",
        f'<rect class="background" x="0" y="0" width="{WIDTH}" height="{HEIGHT}"/>',
    ]
    return "\n".join(head + body + ["</svg>", ""])


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _axes(xlabels: Sequence[str], ymin: float, ymax: float) -> list[str]:
    x0, y0, x1, y1 = MARGIN, HEIGHT - MARGIN, WIDTH - MARGIN, MARGIN
    out = [f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}"/>',
           f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}"/>']
    if xlabels:
        out.append(f'<text class="tick" x="{x0}" y="{y0 + 18}">{escape(xlabels[0])}</text>')
        out.append(f'<text class="tick" x="{x1}" y="{y0 + 18}" text-anchor="end">'
                   f"{escape(xlabels[-1])}</text>")
    out.append(f'<text class="tick" x="{x0 - 4}" y="{y0}" text-anchor="end">{ymin!r}</text>')
    out.append(f'<text class="tick" x="{x0 - 4}" y="{y1}" text-anchor="end">{ymax!r}</text>')
    return out


_LINE_STYLE = (".background{fill:#ffffff}.axis{stroke:#333333;stroke-width:1}"
               ".tick,.legend{font:11px sans-serif;fill:#333333}"
               "polyline{fill:none;stroke-width:1.5}polyline.raw{stroke-opacity:0.35}"
               "polyline.rolled{stroke-width:2.5}")


def render_timeseries(series: Mapping[str, Sequence[tuple]], out, rolled: Mapping | None = None,
                      title: str = "") -> Path:
    """Line chart of one or more monthly series.

    ``series`` maps a name to ``[(label, value), ...]``. If ``rolled`` is
    given (same shape), each raw series is drawn light and its rolled
    counterpart dark. Writes ``out`` (SVG) and ``out.with_suffix('.csv')``.
    """
    out = Path(out)
    if not series or not any(series.values()):
        raise ValueError("render_timeseries needs at least one non-empty series")
    labels = sorted({lab for pts in series.values() for lab, _ in pts})
    xpos = {lab: i for i, lab in enumerate(labels)}
    values = [v for pts in series.values() for _, v in pts]
    if rolled:
        values += [v for pts in rolled.values() for _, v in pts]
    ymin, ymax = min(values), max(values)
    span = (ymax - ymin) or 1.0
    xs = (WIDTH - 2 * MARGIN) / max(len(labels) - 1, 1)
    ys = (HEIGHT - 2 * MARGIN) / span

    def pts(seq):
        return " ".join(f"{_f(MARGIN + xpos[lab] * xs)},{_f(HEIGHT - MARGIN - (v - ymin) * ys)}"
                        for lab, v in seq)

    body = _axes(labels, ymin, ymax)
    for i, name in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        cls = "raw" if rolled else "series"
        body.append(f'<polyline class="{cls}" data-series="{escape(name)}" stroke="{color}" '
                    f'points="{pts(series[name])}"/>')
        if rolled and name in rolled:
            body.append(f'<polyline class="rolled" data-series="{escape(name)}" stroke="{color}" '
                        f'points="{pts(rolled[name])}"/>')
        body.append(f'<text class="legend" x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * i}" '
                    f'fill="{color}">{escape(name)}</text>')
    _write(out, _svg(body, _LINE_STYLE, title))

    with open(out.with_suffix(".csv"), "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "label", "value", "rolled"])
        for name, seq in series.items():
            r = dict(rolled.get(name, [])) if rolled else {}
            for lab, v in seq:
                w.writerow([name, lab, repr(float(v)), repr(float(r[lab])) if lab in r else ""])
    return out


def render_ellipses(bases: Sequence[HomeBase2D], out, names: Sequence[str] | None = None,
                    title: str = "home bases") -> Path:
    """Draw home-base ellipses in warmth (x) / competence (y) space.

    Ellipse ``i`` gets the style class ``era-<names[i]>``; the default CSS
    colours ``era-pre`` red and ``era-covid`` blue.
    """
    out = Path(out)
    if not bases:
        raise ValueError("render_ellipses needs at least one ellipse")
    names = list(names or [str(i) for i in range(len(bases))])
    boxes = []
    for b in bases:
        a, c = b.semi_axes
        ca, sa = math.cos(b.angle), math.sin(b.angle)
        hx = math.hypot(a * ca, c * sa)
        hy = math.hypot(a * sa, c * ca)
        boxes.append((b.mean_w - hx, b.mean_w + hx, b.mean_c - hy, b.mean_c + hy))
    xmin = min(bx[0] for bx in boxes)
    xmax = max(bx[1] for bx in boxes)
    ymin = min(bx[2] for bx in boxes)
    ymax = max(bx[3] for bx in boxes)
    scale = min((WIDTH - 2 * MARGIN) / ((xmax - xmin) or 1.0),
                (HEIGHT - 2 * MARGIN) / ((ymax - ymin) or 1.0))
    tx = lambda v: MARGIN + (v - xmin) * scale
    ty = lambda v: HEIGHT - MARGIN - (v - ymin) * scale

    style = (".background{fill:#ffffff}.axis{stroke:#333333;stroke-width:1}"
             ".tick,.legend{font:11px sans-serif;fill:#333333}"
             "ellipse{fill-opacity:0.15;stroke-width:2}"
             ".era-pre{stroke:#d62728;fill:#d62728}.era-covid{stroke:#1f77b4;fill:#1f77b4}")
    body = _axes([], ymin, ymax)
    for i, (b, name) in enumerate(zip(bases, names)):
        a, c = b.semi_axes
        cx, cy = tx(b.mean_w), ty(b.mean_c)
        deg = -math.degrees(b.angle)  # svg y axis points down
        body.append(f'<ellipse class="home-base era-{escape(name)}" cx="{_f(cx)}" cy="{_f(cy)}" '
                    f'rx="{_f(a * scale)}" ry="{_f(c * scale)}" '
                    f'transform="rotate({_f(deg)} {_f(cx)} {_f(cy)})"/>')
        body.append(f'<text class="legend" x="{WIDTH - MARGIN}" y="{MARGIN + 14 * i}" '
                    f'text-anchor="end">{escape(name)}</text>')
    _write(out, _svg(body, style, title))
    data = [dict(name=name, mean_w=b.mean_w, mean_c=b.mean_c, lambda1=b.lambda1,
                 lambda2=b.lambda2, angle=b.angle, psi=b.psi, alpha=b.alpha, n=b.n)
            for b, name in zip(bases, names)]
    _write(out.with_suffix(".json"), json.dumps(data, indent=2, sort_keys=True) + "\n")
    return out


def render_treemap(spec: TreemapSpec, out, title: str | None = None) -> Path:
    out = Path(out)
    body = []
    rects = squarify([f for _, f in spec.entries], MARGIN, MARGIN,
                     WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN)
    for i, ((word, freq), (x, y, w, h)) in enumerate(zip(spec.entries, rects)):
        body.append(f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                    f'fill="{PALETTE[i % len(PALETTE)]}"/>')
        body.append(f'<text class="label" x="{_f(x + w / 2)}" y="{_f(y + h / 2)}" '
                    f'text-anchor="middle">{escape(word)} ({freq})</text>')
    style = (".background{fill:#ffffff}.cell{stroke:#ffffff;stroke-width:2;fill-opacity:0.8}"
             ".label{font:12px sans-serif;fill:#111111}")
    _write(out, _svg(body, style, title or f"{spec.dimension} words, {spec.stance}"))
    _write(out.with_suffix(".json"), json.dumps(spec.to_dict(), indent=2) + "\n")
    return out


# -- manifests ------------------------------------------------------------------

MANIFEST_EXCLUDE = {"manifest.json", "config.frozen", "stage.json"}


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def build_manifest(root) -> dict:
    """Checksums of every artifact under ``root`` (relative POSIX paths).

    Run metadata (manifests, frozen configs, stage markers) and resume
    logs are left out so the manifest depends only on the results.
    """
    root = Path(root)
    files = {}
    for p in sorted(root.rglob("*")):
        if not p.is_file() or p.name in MANIFEST_EXCLUDE or p.name.endswith(".log.jsonl"):
            continue
        rel = p.relative_to(root).as_posix()
        files[rel] = {"sha256": sha256_file(p), "bytes": p.stat().st_size}
    return {"artifacts": files}


def write_manifest(root) -> Path:
    path = Path(root) / "manifest.json"
    _write(path, json.dumps(build_manifest(root), indent=2, sort_keys=True) + "\n")
    return path
