"""Nonparametric descriptive statistics for annotated corpora.

Implements the analysis toolbox used on laughter annotations: duration
descriptives (in 10 ms frames), Spearman rank correlation, two-tailed
Mann-Whitney U, chi-square goodness of fit, emotion-by-laughter
cross-tabulation, and the 10-bin relative-dialogue-position histogram.

All p-values are two-tailed. The Mann-Whitney test enumerates the exact
U distribution when both samples together hold at most 12 tie-free
observations and otherwise applies the tie-corrected normal
approximation with continuity correction; the method actually used is
recorded on the result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import chi2 as _chi2_dist
from scipy.stats import t as _t_dist

from .corpus import EmotionLabel, LaughterLabel, WordUnit

EXACT_MW_LIMIT = 12


@dataclass(frozen=True)
class DurationStats:
    """Descriptive statistics of a duration sample, in 10 ms frames."""

    n: int
    mean: float
    median: float
    std: float
    skewness: float
    min: float
    max: float


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str


def describe_durations(samples) -> DurationStats:
    """Mean/median/std/skewness/min/max of a duration sample.

    Uses the sample (n-1) standard deviation and the adjusted
    Fisher-Pearson skewness; skewness is 0 for n < 3 or a degenerate
    spread.
    """
    x = np.asarray(samples, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        raise ValueError("empty duration sample")
    mean = float(x.mean())
    if n > 1:
        std = float(x.std(ddof=1))
    else:
        std = 0.0
    skew = 0.0
    if n >= 3 and std > 1e-12:
        m3 = float(np.mean((x - mean) ** 3))
        g1 = m3 / float(np.mean((x - mean) ** 2)) ** 1.5
        skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
    return DurationStats(
        n=n,
        mean=mean,
        median=float(np.median(x)),
        std=std,
        skewness=skew,
        min=float(x.min()),
        max=float(x.max()),
    )


def _rankdata(values: np.ndarray) -> np.ndarray:
    """Mid-ranks (ties share the average rank), 1-based."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def spearman_rho(x, y) -> TestResult:
    """Spearman rank correlation with mid-ranks for ties.

    The p-value uses the t approximation with n-2 degrees of freedom and
    is flagged approximate (crude below n = 10). Constant input has no
    defined correlation and raises ValueError.
    """
    xa = np.asarray(x, dtype=np.float64).ravel()
    ya = np.asarray(y, dtype=np.float64).ravel()
    if xa.size != ya.size:
        raise ValueError("paired samples must have equal length")
    n = xa.size
    if n < 3:
        raise ValueError("need at least 3 pairs")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise ValueError("correlation undefined for a constant sample")
    rx = _rankdata(xa)
    ry = _rankdata(ya)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(np.dot(rx, rx)) * float(np.dot(ry, ry)))
    rho = float(np.dot(rx, ry)) / denom
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) >= 1.0:
        p = 0.0
        method = "t-approximation (degenerate |rho|=1)"
    else:
        t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(_t_dist.sf(abs(t_stat), n - 2))
        method = "t-approximation" + (" (n<10, crude)" if n < 10 else "")
    return TestResult(statistic=rho, p_value=min(1.0, p), method=method)


def _mann_whitney_u(a: np.ndarray, b: np.ndarray) -> float:
    pooled = np.concatenate([a, b])
    ranks = _rankdata(pooled)
    r_a = float(ranks[: a.size].sum())
    return r_a - a.size * (a.size + 1) / 2.0


def _exact_mw_p(u: float, n_a: int, n_b: int) -> float:
    """Two-tailed exact p by enumerating all rank assignments (no ties)."""
    n = n_a + n_b
    mu = n_a * n_b / 2.0
    dev = abs(u - mu)
    hits = 0
    total = 0
    base = n_a * (n_a + 1) / 2.0
    for comb in combinations(range(1, n + 1), n_a):
        u_c = sum(comb) - base
        if abs(u_c - mu) >= dev - 1e-12:
            hits += 1
        total += 1
    return hits / total


def mann_whitney(a, b) -> TestResult:
    """Two-tailed Mann-Whitney U test with mid-rank tie handling.

    U counts pairs won by the first sample (ties half). Exact enumeration
    applies for tie-free data with n_a+n_b <= 12; otherwise the normal
    approximation with tie-corrected variance and continuity correction.
    """
    xa = np.asarray(a, dtype=np.float64).ravel()
    xb = np.asarray(b, dtype=np.float64).ravel()
    if xa.size == 0 or xb.size == 0:
        raise ValueError("both samples must be non-empty")
    u = _mann_whitney_u(xa, xb)
    n_a, n_b = xa.size, xb.size
    n = n_a + n_b

    pooled = np.concatenate([xa, xb])
    has_ties = np.unique(pooled).size < n

    if n <= EXACT_MW_LIMIT and not has_ties:
        return TestResult(statistic=u, p_value=_exact_mw_p(u, n_a, n_b), method="exact")

    mu = n_a * n_b / 2.0
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts**3 - counts))
    var = (n_a * n_b / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if var <= 0:
        return TestResult(statistic=u, p_value=1.0, method="normal approximation (degenerate)")
    z = max(0.0, abs(u - mu) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * _norm_sf(z))
    return TestResult(statistic=u, p_value=p, method="normal approximation")


def chi_square_gof(observed, expected=None) -> TestResult:
    """Chi-square goodness of fit; expected defaults to the uniform split."""
    obs = np.asarray(observed, dtype=np.float64).ravel()
    if obs.size < 2:
        raise ValueError("need at least 2 cells")
    if expected is None:
        exp = np.full(obs.size, obs.sum() / obs.size)
    else:
        exp = np.asarray(expected, dtype=np.float64).ravel()
        if exp.size != obs.size:
            raise ValueError("observed and expected must have equal length")
    if np.any(exp <= 0):
        raise ValueError("expected counts must be positive")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    p = float(_chi2_dist.sf(stat, obs.size - 1))
    return TestResult(statistic=stat, p_value=p, method=f"chi-square df={obs.size - 1}")


@dataclass
class Crosstab:
    row_labels: tuple[EmotionLabel, ...]
    col_labels: tuple[LaughterLabel, ...]
    counts: np.ndarray
    unlabeled: int

    def row(self, emotion: EmotionLabel) -> tuple[int, ...]:
        i = self.row_labels.index(emotion)
        return tuple(int(v) for v in self.counts[i])

    @property
    def row_margins(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_margins(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def crosstab(units, col_labels) -> Crosstab:
    """Cross-tabulate emotion labels against a set of laughter labels.

    Units without an emotion label, or whose laughter label is outside
    col_labels, are excluded and counted in `unlabeled`. Row order fixes
    to the emotion enumeration order restricted to emotions present.
    """
    cols = tuple(col_labels)
    cells: dict[tuple[EmotionLabel, LaughterLabel], int] = {}
    unlabeled = 0
    present: set[EmotionLabel] = set()
    for unit in units:
        if not isinstance(unit, WordUnit):
            raise TypeError("crosstab expects WordUnit instances")
        if unit.laughter not in cols or unit.emotion is None:
            unlabeled += 1
            continue
        present.add(unit.emotion)
        key = (unit.emotion, unit.laughter)
        cells[key] = cells.get(key, 0) + 1
    rows = tuple(e for e in EmotionLabel if e in present)
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for (emo, lab), c in cells.items():
        counts[rows.index(emo), cols.index(lab)] = c
    return Crosstab(row_labels=rows, col_labels=cols, counts=counts, unlabeled=unlabeled)


def dialogue_position_histogram(events) -> np.ndarray:
    """10-bin histogram of relative positions ordinal/length in (0, 1].

    Bin index is min(floor(10*r), 9), so positions at exactly 1.0 clamp
    into the last bin and no event is lost.
    """
    bins = np.zeros(10, dtype=np.int64)
    for ordinal, length in events:
        if length < 1:
            raise ValueError(f"dialogue length must be >= 1, got {length}")
        if not 1 <= ordinal <= length:
            raise ValueError(f"turn ordinal {ordinal} outside 1..{length}")
        r = ordinal / length
        bins[min(int(r * 10.0), 9)] += 1
    return bins


# ---------------------------------------------------------------------------
# Corpus-level report helpers (consumed by the CLI)

_DURATION_GROUPS = ("SLs", "SLw", "SLtot", "Lv", "Lvu", "Lu", "Ltot")


def duration_table(corpus) -> dict[str, DurationStats]:
    """Duration descriptives per laughter type plus the SLtot/Ltot pools."""
    per_label: dict[str, list[int]] = {lab.value: [] for lab in LaughterLabel}
    for turn in corpus.turns:
        for unit in turn.word_units:
            per_label[unit.laughter.value].append(unit.duration_frames)
    pools = {
        "SLs": per_label["SLs"],
        "SLw": per_label["SLw"],
        "SLtot": per_label["SLs"] + per_label["SLw"],
        "Lv": per_label["Lv"],
        "Lvu": per_label["Lvu"],
        "Lu": per_label["Lu"],
        "Ltot": per_label["Lv"] + per_label["Lvu"] + per_label["Lu"],
    }
    return {
        name: describe_durations(vals) for name, vals in pools.items() if len(vals) > 0
    }


def speaker_frequency_correlations(corpus, alpha: float = 0.001):
    """Spearman correlation matrix of speaker-specific frequencies.

    Correlates per-speaker counts of motherese words, angry words, all
    word units, speech-laugh instances and laughter instances; entries
    carry a significance mark at the given alpha.
    """
    names = ("motherese", "angry", "words", "SL", "L")
    counts = {sid: dict.fromkeys(names, 0) for sid in corpus.speaker_ids}
    for turn in corpus.turns:
        row = counts[turn.speaker_id]
        for unit in turn.word_units:
            sup = unit.laughter.superclass
            if sup == "W":
                row["words"] += 1
                if unit.emotion is EmotionLabel.motherese:
                    row["motherese"] += 1
                elif unit.emotion is EmotionLabel.angry:
                    row["angry"] += 1
            elif sup == "SL":
                row["SL"] += 1
            else:
                row["L"] += 1
    vectors = {
        name: np.array([counts[sid][name] for sid in corpus.speaker_ids], dtype=np.float64)
        for name in names
    }
    matrix: dict[tuple[str, str], tuple[float, float, bool]] = {}
    for i, a in enumerate(names):
        for b in names[:i]:
            try:
                res = spearman_rho(vectors[a], vectors[b])
                matrix[(a, b)] = (res.statistic, res.p_value, res.p_value < alpha)
            except ValueError:
                matrix[(a, b)] = (float("nan"), float("nan"), False)
    return names, matrix


def laughter_position_histogram(corpus) -> np.ndarray:
    """Dialogue-position histogram over every laughter instance."""
    events = []
    for turn in corpus.turns:
        n_laughs = sum(1 for u in turn.word_units if u.laughter is not LaughterLabel.W)
        events.extend([(turn.ordinal_in_dialogue, turn.dialogue_length)] * n_laughs)
    return dialogue_position_histogram(events)
