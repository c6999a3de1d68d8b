"""Correlation-based feature-subset selection.

Scores a feature subset by the merit

    merit(S) = k * mean|r_cf| / sqrt(k + k*(k-1) * mean|r_ff|)

where r_cf is the feature-class correlation and r_ff the feature-feature
correlation, both taken as absolute values; the k = 1 redundancy term is
0. Feature-class correlation of a continuous feature is the mean over
classes of the absolute point-biserial (Pearson) correlation with each
one-vs-rest class indicator. Constant features correlate 0 by
definition.

Search is forward best-first from the empty set: expand the best open
subset by every single-feature addition, stop after a fixed number of
consecutive expansions that fail to improve the best merit seen. Ties on
merit resolve to the lexicographically smaller subset so runs are
deterministic.

Feature-feature correlations are computed lazily one row at a time and
cached; the full matrix is never materialized.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

DEFAULT_STALL_LIMIT = 5
_IMPROVEMENT_EPS = 1e-12


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    merit: float
    evaluations: int


class CorrelationCache:
    """Feature-class correlations plus a lazily filled |r_ff| row cache."""

    def __init__(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be 2-D (instances x features)")
        labels = np.asarray(y)
        if labels.shape[0] != X.shape[0]:
            raise ValueError("X and y disagree on instance count")
        classes = np.unique(labels)
        if classes.size < 2:
            raise ValueError("need at least 2 classes")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 instances")

        self.n_instances, self.n_features = X.shape
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        self._live = std > 0.0
        denom = np.where(self._live, std, 1.0)
        self._Z = (X - mean) / denom  # standardized columns; constant cols zeroed below
        self._Z[:, ~self._live] = 0.0

        rcf = np.zeros(self.n_features)
        for cls in classes:
            ind = (labels == cls).astype(np.float64)
            istd = ind.std()
            if istd == 0.0:
                continue
            iz = (ind - ind.mean()) / istd
            rcf += np.abs(self._Z.T @ iz) / self.n_instances
        self.feature_class_corr = rcf / classes.size
        self._row_cache: dict[int, np.ndarray] = {}

    def rff_row(self, f: int) -> np.ndarray:
        """|Pearson| of feature f against every feature (diagonal 1)."""
        row = self._row_cache.get(f)
        if row is None:
            if self._live[f]:
                row = np.abs(self._Z.T @ self._Z[:, f]) / self.n_instances
                row[~self._live] = 0.0
                row[f] = 1.0
            else:
                row = np.zeros(self.n_features)
            self._row_cache[f] = row
        return row

    def rff(self, f: int, g: int) -> float:
        if f == g:
            return 1.0
        return float(self.rff_row(f)[g])


def merit_score(subset, cache: CorrelationCache) -> float:
    """CFS merit of a subset; equals r_cf for singletons."""
    idx = tuple(subset)
    if not idx:
        raise ValueError("merit is undefined for the empty subset")
    k = len(idx)
    sum_rcf = float(cache.feature_class_corr[list(idx)].sum())
    pair_sum = 0.0
    for pos, f in enumerate(idx):
        row = cache.rff_row(f)
        for g in idx[pos + 1 :]:
            pair_sum += float(row[g])
    # k*mean_rcf / sqrt(k + k(k-1)*mean_rff) simplifies to this form
    return sum_rcf / np.sqrt(k + 2.0 * pair_sum)


def best_first_select(X, y, stall_limit: int = DEFAULT_STALL_LIMIT) -> SelectionResult:
    """Forward best-first CFS search over all features of X.

    Stops after `stall_limit` consecutive node expansions that do not
    improve the best merit found. Returns the best subset (sorted feature
    indices), its merit, and the number of merit evaluations performed.
    """
    cache = CorrelationCache(X, y)
    rcf = cache.feature_class_corr
    n = cache.n_features

    evaluations = 0
    best_subset: tuple[int, ...] = ()
    best_merit = 0.0

    # heap of (-merit, subset); parallel map subset -> (sum_rcf, pair_sum)
    start: tuple[int, ...] = ()
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, start)]
    node_stats: dict[tuple[int, ...], tuple[float, float]] = {start: (0.0, 0.0)}
    visited: set[tuple[int, ...]] = {start}

    stall = 0
    while heap and stall < stall_limit:
        _, subset = heapq.heappop(heap)
        sum_rcf, pair_sum = node_stats[subset]

        if subset:
            row_sum = cache.rff_row(subset[0]).copy()
            for f in subset[1:]:
                row_sum += cache.rff_row(f)
        else:
            row_sum = np.zeros(n)

        k_child = len(subset) + 1
        child_sum_rcf = sum_rcf + rcf
        child_pair_sum = pair_sum + row_sum
        merits = child_sum_rcf / np.sqrt(k_child + 2.0 * child_pair_sum)

        member = np.zeros(n, dtype=bool)
        member[list(subset)] = True

        improved = False
        order = np.argsort(-merits, kind="stable")
        for f in order:
            if member[f]:
                continue
            child = tuple(sorted(subset + (int(f),)))
            if child in visited:
                continue
            visited.add(child)
            evaluations += 1
            m = float(merits[f])
            node_stats[child] = (float(child_sum_rcf[f]), float(child_pair_sum[f]))
            heapq.heappush(heap, (-m, child))
            if m > best_merit + _IMPROVEMENT_EPS:
                best_merit = m
                best_subset = child
                improved = True
        stall = 0 if improved else stall + 1

    return SelectionResult(
        selected=tuple(sorted(best_subset)), merit=best_merit, evaluations=evaluations
    )


def intersect_fold_selections(fold_sets) -> tuple[int, ...]:
    """Features selected in every fold, in sorted order."""
    sets = [set(s) for s in fold_sets]
    if not sets:
        raise ValueError("need at least one fold selection")
    common = set.intersection(*sets)
    return tuple(sorted(common))
