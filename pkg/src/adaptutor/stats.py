"""Rank statistics for teacher comparisons.

Self-contained Mann-Whitney U with the normal approximation (tie-corrected,
continuity-corrected), plus the Bonferroni adjustment used when a dataset
yields two comparisons.
"""

from __future__ import annotations

import math
from typing import Sequence


def _fractional_ranks(values: Sequence[float]) -> list[float]:
    """Ranks starting at 1; ties share the mean of their rank block."""
    order = sorted(range(len(values)), key=values.__getitem__)
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def _tie_correction(ranks: Sequence[float]) -> float:
    counts: dict[float, int] = {}
    for r in ranks:
        counts[r] = counts.get(r, 0) + 1
    n = len(ranks)
    if n < 2:
        return 1.0
    return 1.0 - sum(c**3 - c for c in counts.values()) / float(n**3 - n)


def mann_whitney_u(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    """Two-sided Mann-Whitney U test via the normal approximation.

    Returns ``(U, p)`` where U is oriented on the first sample: the number
    of (a, b) pairs with a > b, ties counting one half.  U is 0 when every
    value of ``sample_a`` lies below every value of ``sample_b`` and
    ``n*m`` in the opposite extreme.  The p-value uses the tie-corrected
    variance and a 0.5 continuity correction; with every value identical
    in both samples the variance vanishes and p is 1.
    """
    if not sample_a or not sample_b:
        raise ValueError("both samples must be non-empty")
    n, m = len(sample_a), len(sample_b)
    ranks = _fractional_ranks(list(sample_a) + list(sample_b))
    rank_sum_a = sum(ranks[:n])
    u_a = rank_sum_a - n * (n + 1) / 2.0
    tie = _tie_correction(ranks)
    variance = n * m * (n + m + 1) / 12.0 * tie
    if variance <= 0.0:
        return u_a, 1.0
    z = (abs(u_a - n * m / 2.0) - 0.5) / math.sqrt(variance)
    z = max(z, 0.0)
    p = math.erfc(z / math.sqrt(2.0))
    return u_a, min(1.0, p)


def bonferroni(p: float, comparisons: int) -> float:
    """Family-wise corrected p-value: multiply and clamp at 1."""
    return min(1.0, p * comparisons)


def median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise ValueError("median of an empty sample")
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    """(Q1, median, Q3) with linear interpolation, box-plot style."""
    ordered = sorted(values)
    n = len(ordered)
    if n == 0:
        raise ValueError("quartiles of an empty sample")

    def at(q: float) -> float:
        pos = q * (n - 1)
        lo = int(math.floor(pos))
        hi = int(math.ceil(pos))
        if lo == hi:
            return float(ordered[lo])
        frac = pos - lo
        return ordered[lo] * (1 - frac) + ordered[hi] * frac

    return at(0.25), at(0.5), at(0.75)
