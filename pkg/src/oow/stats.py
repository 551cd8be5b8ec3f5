"""Subject-wise normalization, one-way ANOVA, pairwise group comparisons,
confidence-interval trimming, and trial-order trend aggregation.

The ANOVA p-value comes from the F survival function computed through a
continued-fraction regularized incomplete beta (Lentz's method), so the
statistics stack carries no external dependency; the test suite checks it
against an independent reference implementation.
"""
from __future__ import annotations

from dataclasses import dataclass
import math
import warnings

import numpy as np

Z_95 = 1.96
TREND_METRICS = ("beta_power", "d0", "one_minus_score")


@dataclass(frozen=True)
class MeasureRow:
    subject: str
    trial_index: int
    measure: str
    value: float
    latency: float = 0.0
    time_pressure: bool = False
    label: str | None = None   # five-class label, when known


class MeasureTable:
    """Rows of (subject, trial, measure, value) with uniqueness enforced."""

    def __init__(self, rows: list[MeasureRow] | None = None):
        self.rows: list[MeasureRow] = []
        self._keys: set[tuple[str, int, str]] = set()
        for row in rows or []:
            self.add(row)

    def add(self, row: MeasureRow) -> None:
        key = (row.subject, row.trial_index, row.measure)
        if key in self._keys:
            raise ValueError(f"duplicate measure row {key}")
        self._keys.add(key)
        self.rows.append(row)

    def select(self, measure: str) -> list[MeasureRow]:
        return [r for r in self.rows if r.measure == measure]

    def subjects(self) -> list[str]:
        return sorted({r.subject for r in self.rows})

    def __len__(self) -> int:
        return len(self.rows)


# ----------------------------------------------------------- incomplete beta

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-12:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def f_sf(f: float, dfn: float, dfd: float) -> float:
    """Survival function of the F distribution."""
    if f <= 0.0:
        return 1.0
    x = dfd / (dfd + dfn * f)
    return betainc_reg(dfd / 2.0, dfn / 2.0, x)


# ------------------------------------------------------------------ z-norm

def znorm(values: np.ndarray) -> tuple[np.ndarray, bool]:
    """(x - mean)/sample std; constant input collapses to zeros + flag."""
    values = np.asarray(values, dtype=float)
    mu = values.mean()
    sigma = values.std(ddof=1)
    if sigma == 0.0 or not math.isfinite(sigma):
        return np.zeros_like(values), True
    return (values - mu) / sigma, False


def znorm_per_subject(table: MeasureTable, measure: str) -> MeasureTable:
    """Normalize one measure within each subject."""
    out = MeasureTable()
    for subject in table.subjects():
        rows = [r for r in table.select(measure) if r.subject == subject]
        if len(rows) < 2:
            raise ValueError(
                f"subject {subject!r} has fewer than 2 values for {measure!r}")
        normed, degenerate = znorm(np.array([r.value for r in rows]))
        if degenerate:
            warnings.warn(
                f"constant {measure!r} for subject {subject!r}; z-scores set to 0",
                stacklevel=2)
        for row, v in zip(rows, normed):
            out.add(MeasureRow(row.subject, row.trial_index, row.measure,
                               float(v), row.latency, row.time_pressure,
                               row.label))
    return out


# -------------------------------------------------------------------- ANOVA

def oneway_anova(groups: list[np.ndarray]) -> tuple[float, float]:
    """Classical between/within decomposition; p from the F distribution.

    With two groups this is equivalent to the pooled two-sample t-test
    (F = t^2).
    """
    if len(groups) < 2:
        raise ValueError("ANOVA needs at least 2 groups")
    groups = [np.asarray(g, dtype=float) for g in groups]
    if any(len(g) < 2 for g in groups):
        raise ValueError("every group needs at least 2 values")
    n_total = sum(len(g) for g in groups)
    k = len(groups)
    grand = np.concatenate(groups).mean()
    ss_between = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    ss_within = sum(float(((g - g.mean()) ** 2).sum()) for g in groups)
    df_between = k - 1
    df_within = n_total - k
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    if ms_within == 0.0:
        return (0.0, 1.0) if ms_between == 0.0 else (math.inf, 0.0)
    f = float(ms_between / ms_within)
    return f, f_sf(f, df_between, df_within)


def pairwise_anova(values_by_label: dict[str, np.ndarray]) -> tuple[list[str], np.ndarray]:
    """Symmetric matrix of pairwise one-way ANOVA p-values, unit diagonal."""
    labels = sorted(values_by_label)
    missing = [l for l in labels if len(values_by_label[l]) < 2]
    if missing:
        raise ValueError(f"labels with fewer than 2 values: {missing}")
    n = len(labels)
    p = np.ones((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            _, pv = oneway_anova([values_by_label[labels[i]],
                                  values_by_label[labels[j]]])
            p[i, j] = p[j, i] = pv
    return labels, p


def pairwise_anova_five_class(table: MeasureTable, measure: str) -> tuple[list[str], np.ndarray]:
    from .riemann import FIVE_CLASS_LABELS

    rows = table.select(measure)
    groups: dict[str, list[float]] = {}
    for r in rows:
        if r.label is not None:
            groups.setdefault(r.label, []).append(r.value)
    missing = [l for l in FIVE_CLASS_LABELS if l not in groups]
    if missing:
        raise ValueError(f"missing workload labels: {missing}")
    return pairwise_anova({l: np.array(v) for l, v in groups.items()})


# ----------------------------------------------------------------- trimming

def trim_ci95(values: np.ndarray) -> np.ndarray:
    """Single-pass removal of |z| > 1.96 after within-class normalization."""
    values = np.asarray(values, dtype=float)
    if len(values) < 3:
        raise ValueError("need at least 3 values to trim")
    z, degenerate = znorm(values)
    if degenerate:
        return values.copy()
    return values[np.abs(z) <= Z_95]


# ------------------------------------------------------------------- trends

@dataclass
class TrendPoint:
    trial_index: int
    mean: float
    ci_half_width: float | None
    n: int


def trial_trend(table: MeasureTable, metric: str) -> list[TrendPoint]:
    """Across-subject mean and 95% CI per trial completion index."""
    if metric not in TREND_METRICS:
        raise ValueError(f"unknown trend metric {metric!r}")
    rows = table.select(metric)
    by_index: dict[int, list[float]] = {}
    for r in rows:
        by_index.setdefault(r.trial_index, []).append(r.value)
    out = []
    for idx in sorted(by_index):
        vals = np.array(by_index[idx], dtype=float)
        if len(vals) == 1:
            out.append(TrendPoint(idx, float(vals[0]), None, 1))
        else:
            sem = vals.std(ddof=1) / math.sqrt(len(vals))
            out.append(TrendPoint(idx, float(vals.mean()),
                                  float(Z_95 * sem), len(vals)))
    return out


def one_minus_score(normed_scores: np.ndarray) -> np.ndarray:
    """Inverted normalized score, the paper-style performance trace."""
    return 1.0 - np.asarray(normed_scores, dtype=float)
