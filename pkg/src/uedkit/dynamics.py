"""Time-binned densities and utterance-emotion-dynamics metrics.

Monthly aggregation keeps integer counts only (continuous lexicon scores are
already integers in millionths), so merging partial accumulators is exact
and the result does not depend on how the corpus was sharded.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .lexicon import CATEGORIES, LOW_CATEGORIES, SCORE_SCALE, WARMTH_DIMENSIONS, PostScore

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.32
DEFAULT_SPLIT = "2020-01-01"
DENSITY_CATEGORIES = CATEGORIES + LOW_CATEGORIES


class DegenerateCovarianceError(ValueError):
    pass


@dataclass(frozen=True)
class BinDensity:
    bin: str
    category: str
    emotion_word_count: int
    token_total: int

    @property
    def density(self) -> float:
        return self.emotion_word_count / self.token_total


@dataclass
class MonthBin:
    token_total: int = 0
    posts: int = 0
    counts: dict = field(default_factory=lambda: dict.fromkeys(DENSITY_CATEGORIES, 0))
    score_sums: dict = field(default_factory=lambda: dict.fromkeys(WARMTH_DIMENSIONS, 0))
    hits: int = 0
    # per-post means, summed; only used for the per-post warmth series
    post_mean_sums: dict = field(default_factory=lambda: dict.fromkeys(WARMTH_DIMENSIONS, 0.0))
    posts_with_hits: int = 0


class MonthlyAccumulator:
    """Reduces a stream of PostScores into per-month integer totals."""

    def __init__(self):
        self.bins: dict[str, MonthBin] = {}

    def add(self, s: PostScore) -> None:
        b = self.bins.get(s.month)
        if b is None:
            b = self.bins[s.month] = MonthBin()
        b.token_total += s.token_count
        b.posts += 1
        counts = b.counts
        for c, v in s.emotion_counts.items():
            counts[c] += v
        for c, v in s.low_counts.items():
            counts[c] += v
        if s.warmth_hits:
            b.hits += s.warmth_hits
            b.posts_with_hits += 1
            for d, v in s.score_sums.items():
                b.score_sums[d] += v
                b.post_mean_sums[d] += v / (SCORE_SCALE * s.warmth_hits)

    def update(self, scores: Iterable[PostScore]) -> "MonthlyAccumulator":
        for s in scores:
            self.add(s)
        return self

    def merge(self, other: "MonthlyAccumulator") -> "MonthlyAccumulator":
        for month, ob in other.bins.items():
            b = self.bins.get(month)
            if b is None:
                b = self.bins[month] = MonthBin()
            b.token_total += ob.token_total
            b.posts += ob.posts
            b.hits += ob.hits
            b.posts_with_hits += ob.posts_with_hits
            for c, v in ob.counts.items():
                b.counts[c] += v
            for d, v in ob.score_sums.items():
                b.score_sums[d] += v
            for d, v in ob.post_mean_sums.items():
                b.post_mean_sums[d] += v
        return self

    @property
    def months(self) -> list[str]:
        return sorted(self.bins)

    def densities(self, category: str) -> list[BinDensity]:
        return [BinDensity(m, category, self.bins[m].counts[category], self.bins[m].token_total)
                for m in self.months if self.bins[m].token_total > 0]

    def warmth_series(self, dimension: str, mode: str = "token") -> list[tuple[str, float]]:
        """Monthly mean lexicon score for one dimension.

        ``mode="token"`` averages over every lexicon-matched token in the
        month; ``mode="post"`` averages the per-post means.
        """
        out = []
        for m in self.months:
            b = self.bins[m]
            if mode == "token":
                if b.hits:
                    out.append((m, b.score_sums[dimension] / (SCORE_SCALE * b.hits)))
            elif mode == "post":
                if b.posts_with_hits:
                    out.append((m, b.post_mean_sums[dimension] / b.posts_with_hits))
            else:
                raise ValueError(f"unknown warmth series mode {mode!r}")
        return out


def bin_density(scores: Iterable[PostScore], category: str, binning: str = "month") -> list[BinDensity]:
    """Emotion-word density per calendar month, chronological, empty bins omitted."""
    if binning != "month":
        raise ValueError("only monthly binning is supported")
    return MonthlyAccumulator().update(scores).densities(category)


def per_post_density(scores: Iterable[PostScore], category: str,
                     group: Callable[[PostScore], object] = lambda s: None):
    """Unweighted mean over posts of count/token_count, per group.

    Returns ``(means, skipped)`` where ``skipped`` counts zero-token posts.
    """
    sums: dict = {}
    ns: dict = {}
    skipped = 0
    for s in scores:
        if s.token_count == 0:
            skipped += 1
            continue
        g = group(s)
        sums[g] = sums.get(g, 0.0) + s.count(category) / s.token_count
        ns[g] = ns.get(g, 0) + 1
    if skipped:
        logger.warning("per_post_density: skipped %d zero-token posts", skipped)
    return {g: sums[g] / ns[g] for g in sums}, skipped


def rolling_mean(series: Sequence[float], window: int, centered: bool = False) -> list[float]:
    """Moving average with windows shrunk at the edges.

    Trailing by default: index i averages ``series[max(0, i-window+1):i+1]``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    v = [float(x) for x in series]
    n = len(v)
    out = []
    for i in range(n):
        if centered:
            lo = max(0, i - (window - 1) // 2)
            hi = min(n, i + window // 2 + 1)
        else:
            lo, hi = max(0, i - window + 1), i + 1
        ref = v[lo]  # offsets from ref keep constant windows exact
        out.append(ref + math.fsum(x - ref for x in v[lo:hi]) / (hi - lo))
    return out


@dataclass(frozen=True)
class HomeBase1D:
    mean: float
    lower: float
    upper: float
    alpha: float
    n: int
    variance: float
    t_crit: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def contains(self, x: float) -> bool:
        return self.lower <= x <= self.upper


def home_base_1d(values: Sequence[float], alpha: float = DEFAULT_ALPHA) -> HomeBase1D:
    """Confidence band ``mean +/- t * sqrt(var / N)``.

    ``var`` is the sample variance and ``t`` the two-sided Student-t critical
    value at confidence ``1 - alpha`` with N-1 degrees of freedom.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2:
        raise ValueError("home_base_1d needs at least 2 values")
    mean = float(v.mean())
    var = float(v.var(ddof=1))
    t_crit = float(sps.t.ppf(1 - alpha / 2, n - 1))
    half = t_crit * math.sqrt(var / n)
    return HomeBase1D(mean, mean - half, mean + half, alpha, n, var, t_crit)


@dataclass(frozen=True)
class HomeBase2D:
    mean_w: float
    mean_c: float
    lambda1: float
    lambda2: float
    angle: float  # radians, direction of the lambda1 eigenvector
    psi: float
    alpha: float
    n: int = 0

    @property
    def semi_axes(self) -> tuple[float, float]:
        return math.sqrt(self.psi * self.lambda1), math.sqrt(self.psi * self.lambda2)

    @property
    def area(self) -> float:
        a, b = self.semi_axes
        return math.pi * a * b

    def membership(self, w, c):
        """Ellipse expression in the eigenbasis; <= 1 inside, == 1 on the boundary."""
        dw = np.asarray(w, dtype=float) - self.mean_w
        dc = np.asarray(c, dtype=float) - self.mean_c
        cos, sin = math.cos(self.angle), math.sin(self.angle)
        u1 = cos * dw + sin * dc
        u2 = -sin * dw + cos * dc
        return u1 ** 2 / (self.psi * self.lambda1) + u2 ** 2 / (self.psi * self.lambda2)

    def contains(self, w, c):
        return self.membership(w, c) <= 1.0

    def boundary(self, theta):
        """Point on the ellipse boundary at eccentric angle ``theta``."""
        a, b = self.semi_axes
        cos, sin = math.cos(self.angle), math.sin(self.angle)
        x, y = a * math.cos(theta), b * math.sin(theta)
        return self.mean_w + cos * x - sin * y, self.mean_c + sin * x + cos * y


def _eig2x2(a: float, b: float, d: float):
    """Eigenvalues (descending) and major-axis angle of [[a, b], [b, d]]."""
    half_tr = (a + d) / 2.0
    disc = math.hypot((a - d) / 2.0, b)
    l1, l2 = half_tr + disc, half_tr - disc
    angle = 0.5 * math.atan2(2.0 * b, a - d)
    return l1, l2, angle


def home_base_2d(points, alpha: float = DEFAULT_ALPHA, rel_tol: float = 1e-12) -> HomeBase2D:
    """Confidence ellipse of (warmth, competence) points.

    Axes come from the eigen-decomposition of the sample covariance, scaled
    by the chi-square critical value with 2 degrees of freedom.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must be in (0, 1)")
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2:
        raise ValueError("points must be a sequence of (w, c) pairs")
    n = len(p)
    if n < 3:
        raise ValueError("home_base_2d needs at least 3 points")
    mw, mc = float(p[:, 0].mean()), float(p[:, 1].mean())
    dw, dc = p[:, 0] - mw, p[:, 1] - mc
    sww = float(dw @ dw) / (n - 1)
    scc = float(dc @ dc) / (n - 1)
    swc = float(dw @ dc) / (n - 1)
    l1, l2, angle = _eig2x2(sww, swc, scc)
    if l1 <= 0 or l2 <= rel_tol * l1:
        raise DegenerateCovarianceError(
            "covariance is (near) singular: points are collinear; use the 1-D home base instead")
    psi = float(sps.chi2.ppf(1 - alpha, 2))
    return HomeBase2D(mw, mc, l1, l2, angle, psi, alpha, n)


def emotional_variability(values: Sequence[float], formula: str = "sd") -> float:
    """Population standard deviation; ``formula="printed-variance"`` skips the root."""
    v = np.asarray(values, dtype=float)
    if len(v) < 1:
        raise ValueError("need at least one value")
    var = float(np.mean((v - v.mean()) ** 2))
    if formula == "sd":
        return math.sqrt(var)
    if formula == "printed-variance":
        return var
    raise ValueError(f"unknown EV formula {formula!r}")


def ev_2d(points, formula: str = "sd") -> float:
    p = np.asarray(points, dtype=float)
    return (emotional_variability(p[:, 0], formula) + emotional_variability(p[:, 1], formula)) / 2


@dataclass(frozen=True)
class TrajectoryPoint:
    index: int
    mean_w: float
    mean_c: float


def trajectory(scores, window: int = 10) -> list[TrajectoryPoint]:
    """Sliding-window (step 1) means over a word-level (warmth, competence) sequence."""
    s = np.asarray(scores, dtype=float).reshape(-1, 2)
    if window < 1:
        raise ValueError("window must be >= 1")
    n = len(s)
    if n == 0:
        return []
    if window > n:
        logger.warning("trajectory window %d exceeds series length %d; using whole series",
                       window, n)
        window = n
    csum = np.vstack([np.zeros(2), np.cumsum(s, axis=0)])
    means = (csum[window:] - csum[:-window]) / window
    return [TrajectoryPoint(i, float(w), float(c)) for i, (w, c) in enumerate(means)]


@dataclass(frozen=True)
class EraStats:
    category: str
    pre: tuple
    covid: tuple

    @property
    def pre_mean(self):
        return float(np.mean(self.pre))

    @property
    def covid_mean(self):
        return float(np.mean(self.covid))

    @property
    def pre_sd(self):
        return float(np.std(self.pre, ddof=1))

    @property
    def covid_sd(self):
        return float(np.std(self.covid, ddof=1))


def era_of(month: str, split: str = DEFAULT_SPLIT) -> str:
    return "pre" if month + "-01" < split else "covid"


def era_compare(bins: Iterable[BinDensity], split: str = DEFAULT_SPLIT) -> dict[str, EraStats]:
    """Split monthly densities at ``split`` (YYYY-MM-DD) and summarise each era."""
    by_cat: dict[str, dict[str, list]] = {}
    for b in bins:
        eras = by_cat.setdefault(b.category, {"pre": [], "covid": []})
        eras[era_of(b.bin, split)].append(b.density)
    out = {}
    for cat, eras in by_cat.items():
        for era, vals in eras.items():
            if len(vals) < 2:
                raise ValueError(f"era {era!r} has {len(vals)} bins for {cat!r}; need at least 2")
        out[cat] = EraStats(cat, tuple(eras["pre"]), tuple(eras["covid"]))
    return out
