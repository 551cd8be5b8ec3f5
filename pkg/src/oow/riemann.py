"""Affine-invariant Riemannian geometry of SPD matrices, MDM workload
classification, the d0 continuous measure, labeling paradigms, and the
leave-one-subject-out evaluation harness.

The metric is d(A,B) = ||log(A^{-1/2} B A^{-1/2})||_F, computed through
symmetric (generalized) eigendecompositions. Class prototypes are Karcher
means obtained by the standard tangent-space fixed-point iteration.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh

from .dsp import Epoch
from .mission import TrialConfig

SHRINKAGE_DEFAULT = 0.01
SPD_FLOOR = 1e-10
KARCHER_TOL = 1e-8
KARCHER_MAX_ITER = 50

FIVE_CLASS_LABELS = ("LW", "TP", "0.5s", "0.5s+TP", "HighLat")
PARADIGMS = ("five_class", "latency", "time_pressure")


class SPDError(ValueError):
    """Matrix failed the symmetric positive-definite contract."""


class ConvergenceError(RuntimeError):
    """Karcher iteration did not reach tolerance; carries the last iterate."""

    def __init__(self, message: str, iterate: np.ndarray, residual: float):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


def check_spd(a: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SPDError("matrix must be square")
    if not np.allclose(a, a.T, atol=tol):
        raise SPDError("matrix not symmetric")
    if np.linalg.eigvalsh(a).min() <= 0:
        raise SPDError("matrix not positive definite")
    return a


def _sym_apply(a: np.ndarray, fn) -> np.ndarray:
    evals, evecs = np.linalg.eigh(a)
    return (evecs * fn(evals)) @ evecs.T


def spd_sqrtm(a: np.ndarray) -> np.ndarray:
    return _sym_apply(a, np.sqrt)


def spd_invsqrtm(a: np.ndarray) -> np.ndarray:
    return _sym_apply(a, lambda v: 1.0 / np.sqrt(v))


def spd_logm(a: np.ndarray) -> np.ndarray:
    return _sym_apply(a, np.log)


def spd_expm(a: np.ndarray) -> np.ndarray:
    return _sym_apply(a, np.exp)


def covariance(epoch: Epoch, shrinkage: float = SHRINKAGE_DEFAULT) -> np.ndarray:
    """Shrunk sample covariance of a row-centered epoch (always SPD)."""
    if not 0.0 <= shrinkage < 1.0:
        raise ValueError("shrinkage must be in [0, 1)")
    x = epoch.data
    if x.shape[0] < 2:
        raise ValueError("epoch needs at least 2 channels")
    if not np.any(x != 0.0):
        raise ValueError("degenerate all-zero epoch")
    xc = x - x.mean(axis=1, keepdims=True)
    c = (xc @ xc.T) / (x.shape[1] - 1)
    d = c.shape[0]
    c = (1.0 - shrinkage) * c + shrinkage * (np.trace(c) / d) * np.eye(d)
    return c + SPD_FLOOR * np.eye(d)


def riemann_dist(a: np.ndarray, b: np.ndarray) -> float:
    """Affine-invariant distance via the generalized symmetric eigenproblem."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    evals = eigh(b, a, eigvals_only=True)
    return float(np.sqrt(np.sum(np.log(evals) ** 2)))


def karcher_mean(mats: list[np.ndarray], tol: float = KARCHER_TOL,
                 max_iter: int = KARCHER_MAX_ITER) -> np.ndarray:
    """Fixed-point Karcher (Frechet) mean from the arithmetic-mean start."""
    if not mats:
        raise ValueError("karcher_mean of empty set")
    mats = [np.asarray(m, dtype=float) for m in mats]
    if len(mats) == 1:
        return mats[0].copy()
    mean = np.mean(mats, axis=0)
    residual = np.inf
    for _ in range(max_iter):
        root = spd_sqrtm(mean)
        inv_root = spd_invsqrtm(mean)
        tangent = np.zeros_like(mean)
        for c in mats:
            tangent += spd_logm(inv_root @ c @ inv_root)
        tangent /= len(mats)
        residual = float(np.linalg.norm(tangent, "fro"))
        if residual < tol:
            return mean
        mean = root @ spd_expm(tangent) @ root
        mean = 0.5 * (mean + mean.T)
    raise ConvergenceError(
        f"Karcher mean did not converge (residual {residual:.3e})",
        mean, residual)


def geodesic(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Point at parameter t on the affine-invariant geodesic from a to b."""
    root = spd_sqrtm(a)
    inv_root = spd_invsqrtm(a)
    mid = _sym_apply(inv_root @ b @ inv_root, lambda v: v ** t)
    return root @ mid @ root


# ------------------------------------------------------------------- MDM

@dataclass
class MDMModel:
    classes: tuple[str, ...]
    means: dict[str, np.ndarray]
    shrinkage: float = SHRINKAGE_DEFAULT

    def __post_init__(self):
        dims = {m.shape for m in self.means.values()}
        if len(dims) != 1:
            raise ValueError("class means must share one dimension")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class labels")


def mdm_fit(epochs: list[Epoch], labels: list[str] | None = None,
            shrinkage: float = SHRINKAGE_DEFAULT,
            classes: tuple[str, ...] | None = None) -> MDMModel:
    """Per-class Karcher mean of epoch covariances.

    ``classes`` pins the expected label set; a named class with no training
    epochs is an error (otherwise classes are inferred from the labels).
    """
    if labels is None:
        labels = [e.label for e in epochs]
    if len(labels) != len(epochs):
        raise ValueError("one label per epoch required")
    if classes is None:
        classes = tuple(sorted(set(labels)))
    means = {}
    for cls in classes:
        covs = [covariance(e, shrinkage) for e, l in zip(epochs, labels)
                if l == cls]
        if not covs:
            raise ValueError(f"class {cls!r} has no training epochs")
        means[cls] = karcher_mean(covs)
    return MDMModel(tuple(classes), means, shrinkage)


def mdm_predict(model: MDMModel, epoch: Epoch) -> tuple[str, dict[str, float]]:
    """Nearest class mean; ties go to the lexicographically first label."""
    cov = covariance(epoch, model.shrinkage)
    distances = {cls: riemann_dist(cov, model.means[cls])
                 for cls in model.classes}
    best = min(sorted(distances), key=lambda cls: distances[cls])
    return best, distances


def d0(epoch: Epoch, model: MDMModel, low_class: str = "LW") -> float:
    """Riemannian distance from the epoch to the low-workload mean."""
    if low_class not in model.means:
        raise ValueError(f"model has no {low_class!r} class")
    return riemann_dist(covariance(epoch, model.shrinkage),
                        model.means[low_class])


# ------------------------------------------------------------- paradigms

def label_for(config: TrialConfig, paradigm: str) -> str:
    """Workload label of a trial under the named paradigm."""
    if paradigm == "five_class":
        if config.latency >= 1.0:
            return "HighLat"
        if config.latency > 0.0:
            return "0.5s+TP" if config.time_pressure else "0.5s"
        return "TP" if config.time_pressure else "LW"
    if paradigm == "latency":
        return "Latency" if config.latency > 0.0 else "NoLatency"
    if paradigm == "time_pressure":
        return "TP" if config.time_pressure else "NoTP"
    raise ValueError(f"unknown paradigm {paradigm!r}; choose from {PARADIGMS}")


# ------------------------------------------------------------------ LOSO

@dataclass
class FoldResult:
    subject: str
    accuracy: float
    macro_f1: float
    confusion: dict[str, dict[str, int]]
    error: str | None = None


@dataclass
class CVReport:
    folds: list[FoldResult]
    mean_accuracy: float
    mean_macro_f1: float

    def to_dict(self) -> dict:
        return {
            "mean_accuracy": self.mean_accuracy,
            "mean_macro_f1": self.mean_macro_f1,
            "folds": [
                {"subject": f.subject, "accuracy": f.accuracy,
                 "macro_f1": f.macro_f1, "confusion": f.confusion,
                 "error": f.error}
                for f in self.folds
            ],
        }


def confusion_matrix(y_true: list[str], y_pred: list[str]) -> dict[str, dict[str, int]]:
    labels = sorted(set(y_true) | set(y_pred))
    out = {t: {p: 0 for p in labels} for t in labels}
    for t, p in zip(y_true, y_pred):
        out[t][p] += 1
    return out


def accuracy_score(y_true: list[str], y_pred: list[str]) -> float:
    return sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)


def macro_f1(y_true: list[str], y_pred: list[str]) -> float:
    """Unweighted mean of per-class F1 over the labels present."""
    labels = sorted(set(y_true) | set(y_pred))
    scores = []
    for cls in labels:
        tp = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p == cls)
        fp = sum(1 for t, p in zip(y_true, y_pred) if t != cls and p == cls)
        fn = sum(1 for t, p in zip(y_true, y_pred) if t == cls and p != cls)
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def loso_cv(epochs_by_subject: dict[str, list[Epoch]],
            shrinkage: float = SHRINKAGE_DEFAULT) -> CVReport:
    """One fold per subject: train on the rest, test on the held-out one.

    A fold whose training set lacks one of its own classes surfaces the fit
    error in that fold's record instead of aborting the whole evaluation.
    """
    subjects = sorted(epochs_by_subject)
    if len(subjects) < 2:
        raise ValueError("LOSO needs at least 2 subjects")
    folds = []
    for held_out in subjects:
        train = [e for s in subjects if s != held_out
                 for e in epochs_by_subject[s]]
        test = epochs_by_subject[held_out]
        try:
            model = mdm_fit(train, shrinkage=shrinkage)
            y_true = [e.label for e in test]
            y_pred = [mdm_predict(model, e)[0] for e in test]
            folds.append(FoldResult(
                held_out, accuracy_score(y_true, y_pred),
                macro_f1(y_true, y_pred), confusion_matrix(y_true, y_pred)))
        except (ValueError, ConvergenceError) as exc:
            folds.append(FoldResult(held_out, float("nan"), float("nan"),
                                    {}, error=str(exc)))
    scored = [f for f in folds if f.error is None]
    if not scored:
        raise ValueError("every LOSO fold failed: " + (folds[0].error or ""))
    return CVReport(
        folds,
        float(np.mean([f.accuracy for f in scored])),
        float(np.mean([f.macro_f1 for f in scored])),
    )


def build_epochs(recordings, method: str, channel_config, paradigm: str,
                 seed: int = 0) -> dict[str, list[Epoch]]:
    """Preprocess, select channels, window, and label a recording set."""
    from . import dsp

    by_subject: dict[str, list[Epoch]] = {}
    for rec in recordings:
        if rec.trial is None:
            raise ValueError("recording carries no trial config")
        label = label_for(rec.trial, paradigm)
        out = dsp.preprocess(rec, method, seed=seed)
        out = dsp.select_channels(out, channel_config)
        by_subject.setdefault(rec.subject, []).extend(dsp.window(out, label=label))
    return by_subject
