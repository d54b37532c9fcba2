"""Binary segmentation of sorted effect estimates into latent groups.

Positions (i, j, kappa, break points) are 1-based positions in the sorted
sequence, matching the way segments are usually written down; agent
memberships are 1-based group labels ordered by ascending group mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SegmentationResult:
    break_points: tuple
    memberships: np.ndarray
    group_means: np.ndarray
    order: np.ndarray

    @property
    def k(self) -> int:
        return len(self.break_points) + 1

    def groups(self) -> list[np.ndarray]:
        """Agent indices (0-based) in each group."""
        return [np.flatnonzero(self.memberships == g) for g in range(1, self.k + 1)]


def _check_segment(v, i, j):
    if not (1 <= i <= j <= len(v)):
        raise ValueError(f"need 1 <= i <= j <= {len(v)}, got i={i}, j={j}")


def within_variation(sorted_values, i: int, j: int) -> float:
    """Sum of squared deviations from the mean over positions i..j."""
    v = np.asarray(sorted_values, dtype=float)
    _check_segment(v, i, j)
    seg = v[i - 1 : j]
    return float(np.sum((seg - seg.mean()) ** 2))


def split_score(sorted_values, i: int, j: int, kappa: int) -> float:
    """Average within variation of positions i..j with a break after kappa.

    kappa == j means no break.
    """
    v = np.asarray(sorted_values, dtype=float)
    _check_segment(v, i, j)
    if not i <= kappa <= j:
        raise ValueError(f"need i <= kappa <= j, got i={i}, kappa={kappa}, j={j}")
    width = j - i + 1
    if kappa == j:
        return within_variation(v, i, j) / width
    return (within_variation(v, i, kappa) + within_variation(v, kappa + 1, j)) / width


def best_split(sorted_values, i: int, j: int) -> int:
    """argmin over i <= kappa < j of split_score; ties go to the smallest kappa."""
    if j <= i:
        raise ValueError("a segment of one element cannot be split")
    v = np.asarray(sorted_values, dtype=float)
    scores = [split_score(v, i, j, k) for k in range(i, j)]
    return i + int(np.argmin(scores))


def sort_order(values) -> np.ndarray:
    """Agent indices in ascending value order; equal values keep agent order."""
    return np.argsort(np.asarray(values, dtype=float), kind="stable")


def _result(values, order, breaks) -> SegmentationResult:
    v = np.asarray(values, dtype=float)
    n = v.size
    edges = [0, *breaks, n]
    labels_sorted = np.empty(n, dtype=int)
    means = []
    sv = v[order]
    for g in range(len(edges) - 1):
        labels_sorted[edges[g] : edges[g + 1]] = g + 1
        means.append(sv[edges[g] : edges[g + 1]].mean())
    memberships = np.empty(n, dtype=int)
    memberships[order] = labels_sorted
    return SegmentationResult(tuple(int(b) for b in breaks), memberships, np.array(means), order)


def bs_detect(values, K: int) -> SegmentationResult:
    """Greedy binary segmentation into K groups.

    The first break minimises the split score over the whole sorted sequence.
    Each later break goes into the segment with the largest unsplit score;
    when several segments share that score the last one is split.
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    if not np.all(np.isfinite(v)):
        raise ValueError("values must be finite")
    if K < 2:
        raise ValueError("K must be at least 2")
    if K > n:
        raise ValueError(f"K={K} exceeds the number of values n={n}")

    order = sort_order(v)
    sv = v[order]
    breaks = [best_split(sv, 1, n)]
    while len(breaks) < K - 1:
        edges = [0, *sorted(breaks), n]
        best_seg, best_score = None, -np.inf
        for lo, hi in zip(edges[:-1], edges[1:]):
            i, j = lo + 1, hi
            if j == i:
                continue
            s = split_score(sv, i, j, j)
            if s >= best_score:
                best_seg, best_score = (i, j), s
        breaks.append(best_split(sv, *best_seg))
    return _result(v, order, sorted(breaks))


def repartition(values, result: SegmentationResult, iterations: int = 2) -> SegmentationResult:
    """Re-optimise each break between its neighbours, sweeping k = 1..K-1.

    Updated breaks are used immediately within a sweep. Stops after
    ``iterations`` sweeps or once a sweep changes nothing.
    """
    if iterations < 0:
        raise ValueError("iterations must be non-negative")
    v = np.asarray(values, dtype=float)
    order = sort_order(v)
    sv = v[order]
    t = [0, *result.break_points, v.size]
    for _ in range(iterations):
        before = list(t)
        for k in range(1, len(t) - 1):
            t[k] = best_split(sv, t[k - 1] + 1, t[k + 1])
        if t == before:
            break
    return _result(v, order, t[1:-1])


def bs_segment(values, K: int, repartition_iters: int = 0) -> SegmentationResult:
    res = bs_detect(values, K)
    return repartition(values, res, repartition_iters) if repartition_iters else res


def total_within_variation(values, memberships) -> float:
    v = np.asarray(values, dtype=float)
    m = np.asarray(memberships)
    return float(sum(np.sum((v[m == g] - v[m == g].mean()) ** 2) for g in np.unique(m)))


def classification_ratio(estimated, truth) -> float:
    """Share of agents whose estimated label equals the true label.

    Both labelings must order groups by ascending value, so no permutation
    matching is needed.
    """
    estimated = np.asarray(estimated)
    truth = np.asarray(truth)
    if estimated.shape != truth.shape:
        raise ValueError("label vectors differ in length")
    return float(np.mean(estimated == truth))
