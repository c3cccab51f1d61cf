"""Two-sample comparisons: Mann-Whitney U and percent change."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm, rankdata

EXACT_MAX_N = 8


class UndefinedChangeError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    u_statistic: float  # U for the first sample
    p_value: float
    n1: int
    n2: int
    method: str  # "exact" or "normal-approx"
    z: float  # standardized U for the first sample (0 for exact)

    __test__ = False  # keep pytest from collecting this class


def _exact_counts(doubled_ranks: Sequence[int], n1: int) -> dict[int, int]:
    """Number of n1-subsets of the pooled sample for each doubled rank sum."""
    # table[k] maps rank-sum -> number of k-subsets reaching it
    table: list[dict[int, int]] = [dict() for _ in range(n1 + 1)]
    table[0][0] = 1
    for r in doubled_ranks:
        for k in range(n1, 0, -1):
            prev = table[k - 1]
            cur = table[k]
            for s, c in prev.items():
                cur[s + r] = cur.get(s + r, 0) + c
    return table[n1]


def _exact_two_sided(a_ranks2: np.ndarray, pooled_ranks2: np.ndarray, n1: int) -> float:
    counts = _exact_counts([int(r) for r in pooled_ranks2], n1)
    n = len(pooled_ranks2)
    center2 = n1 * (n + 1)  # twice the expected rank sum, doubled ranks
    obs = abs(int(a_ranks2.sum()) - center2)
    extreme = sum(c for s, c in counts.items() if abs(s - center2) >= obs)
    total = math.comb(n, n1)
    return min(1.0, extreme / total)


def mann_whitney(a: Sequence[float], b: Sequence[float], alternative: str = "two-sided",
                 method: str = "auto") -> TestResult:
    """Two-sided Mann-Whitney U test with midranks for ties.

    ``method="auto"`` enumerates the exact permutation distribution when both
    samples have at most 8 values and otherwise uses the normal
    approximation with tie and continuity corrections.
    """
    if alternative != "two-sided":
        raise ValueError("only the two-sided alternative is supported")
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    n1, n2 = len(x), len(y)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    if np.isnan(x).any() or np.isnan(y).any():
        raise ValueError("samples must not contain NaN")
    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled)  # midranks
    ranks2 = np.rint(2 * ranks).astype(np.int64)
    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    mu = n1 * n2 / 2.0

    if method == "auto":
        method = "exact" if max(n1, n2) <= EXACT_MAX_N else "normal-approx"
    if method == "exact":
        p = _exact_two_sided(ranks2[:n1], ranks2, n1)
        return TestResult(u1, p, n1, n2, "exact", 0.0)
    if method not in ("normal", "normal-approx"):
        raise ValueError(f"unknown method {method!r}")

    n = n1 + n2
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float(((tie_counts ** 3) - tie_counts).sum())
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term / (n * (n - 1))) if n > 1 else 0.0
    if var <= 0:
        return TestResult(u1, 1.0, n1, n2, "normal-approx", 0.0)
    sd = math.sqrt(var)
    z = (u1 - mu) / sd
    zc = max(abs(u1 - mu) - 0.5, 0.0) / sd
    p = min(1.0, 2.0 * float(norm.sf(zc)))
    return TestResult(u1, p, n1, n2, "normal-approx", z)


def percent_change(pre_mean: float, covid_mean: float) -> float:
    """Signed change of ``covid_mean`` relative to ``pre_mean``, in percent.

    Exact for exact inputs (``Fraction``, ``Decimal``); floats round as usual.
    """
    if pre_mean == 0:
        raise UndefinedChangeError("percent change undefined for a zero baseline")
    return (covid_mean - pre_mean) / pre_mean * 100


def describe(values: Sequence[float]) -> tuple[float, float]:
    """Mean and sample standard deviation (ddof=1)."""
    v = np.asarray(values, dtype=float)
    if len(v) < 2:
        raise ValueError("need at least two values")
    return float(v.mean()), float(v.std(ddof=1))
