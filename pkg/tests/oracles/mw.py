"""Mann-Whitney oracles: full enumeration and Monte Carlo permutation."""

from itertools import combinations

import numpy as np


def u_by_pairs(a, b):
    # U counts pairs (x in a, y in b) with x > y, ties worth one half
    return sum(1.0 if x > y else 0.5 if x == y else 0.0 for x in a for y in b)


def enumerate_p(a, b):
    """Exact two-sided p over every relabelling of the pooled sample."""
    pooled = list(a) + list(b)
    n1, n = len(a), len(a) + len(b)
    centre = len(a) * len(b) / 2.0
    obs = abs(u_by_pairs(a, b) - centre)
    hits = total = 0
    for idx in combinations(range(n), n1):
        chosen = set(idx)
        x = [pooled[i] for i in idx]
        y = [pooled[i] for i in range(n) if i not in chosen]
        total += 1
        if abs(u_by_pairs(x, y) - centre) >= obs - 1e-9:
            hits += 1
    return hits / total


def _midranks(values):
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v))
    sv = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sv[j + 1] == sv[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def permutation_p(a, b, draws=1_000_000, seed=0, batch=50_000):
    """Two-sided permutation p for the rank-sum statistic by random relabelling."""
    rng = np.random.default_rng(seed)
    n1 = len(a)
    ranks = _midranks(list(a) + list(b))
    centre = n1 * (len(ranks) + 1) / 2.0
    obs = abs(ranks[:n1].sum() - centre)
    hits = 0
    done = 0
    while done < draws:
        k = min(batch, draws - done)
        perm = rng.permuted(np.tile(ranks, (k, 1)), axis=1)
        stat = np.abs(perm[:, :n1].sum(axis=1) - centre)
        hits += int(np.count_nonzero(stat >= obs - 1e-9))
        done += k
    return hits / draws
