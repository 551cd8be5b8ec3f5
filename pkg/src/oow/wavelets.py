"""Multilevel discrete wavelet transform (Daubechies-4, periodized).

Six decomposition levels at fs=250 Hz give detail bands centred near 94,
47, 23, 12, 6, and 3 Hz (nominal edges 125/62.5/31.25/15.6/7.8/3.9/1.95)
plus an approximation below ~2 Hz. Periodic extension keeps the transform
orthonormal and non-expansive (a constant signal lands entirely in the
approximation band); odd lengths are edge-padded per level and the
per-level lengths kept so reconstruction is exact.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# orthonormal db4 scaling filter (reconstruction low-pass)
REC_LO = np.array([
    0.23037781330885523, 0.7148465705525415, 0.6308807679295904,
    -0.02798376941698385, -0.18703481171888114, 0.030841381835986965,
    0.032883011666982945, -0.010597401784997278,
])
DEC_LO = REC_LO[::-1].copy()
REC_HI = np.array([(-1) ** k * DEC_LO[k] for k in range(len(REC_LO))])
DEC_HI = REC_HI[::-1].copy()
FILTER_LEN = len(REC_LO)

DEFAULT_LEVELS = 6


@dataclass
class WaveletCoeffs:
    """approx plus details[0]=finest ... details[-1]=coarsest, with lengths."""

    approx: np.ndarray
    details: list[np.ndarray]
    lengths: list[int]  # input length at each level, outermost first

    @property
    def levels(self) -> int:
        return len(self.details)


def _circular_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    n = len(x)
    full = np.convolve(x, h, mode="full")
    if len(full) % n:
        full = np.concatenate([full, np.zeros(n - len(full) % n)])
    return full.reshape(-1, n).sum(axis=0)  # fold tail mod n


def _dwt_step(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(x) % 2:
        x = np.concatenate([x, x[-1:]])  # edge-pad odd lengths
    ca = _circular_convolve(x, DEC_LO)[1::2]
    cd = _circular_convolve(x, DEC_HI)[1::2]
    return ca, cd


def _idwt_step(ca: np.ndarray, cd: np.ndarray, n: int) -> np.ndarray:
    m = 2 * len(ca)
    up_a = np.zeros(m)
    up_a[::2] = ca
    up_d = np.zeros(m)
    up_d[::2] = cd
    y = _circular_convolve(up_a, REC_LO) + _circular_convolve(up_d, REC_HI)
    return np.roll(y, -(FILTER_LEN - 2))[:n]


def wavedec(x: np.ndarray, levels: int = DEFAULT_LEVELS) -> WaveletCoeffs:
    """Multilevel analysis of a 1-D signal."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("wavedec expects a 1-D signal")
    if len(x) < 2 ** levels:
        raise ValueError(
            f"signal of {len(x)} samples too short for {levels} levels")
    details = []
    lengths = []
    approx = x
    for _ in range(levels):
        lengths.append(len(approx))
        approx, detail = _dwt_step(approx)
        details.append(detail)
    return WaveletCoeffs(approx, details, lengths)


def waverec(coeffs: WaveletCoeffs) -> np.ndarray:
    """Exact inverse of :func:`wavedec`."""
    approx = coeffs.approx
    for detail, n in zip(reversed(coeffs.details), reversed(coeffs.lengths)):
        approx = _idwt_step(approx, detail, n)
    return approx


def reduce_bands(x: np.ndarray, levels: int = DEFAULT_LEVELS,
                 drop_finest: bool = True, drop_approx: bool = True) -> np.ndarray:
    """Reconstruct with the finest detail band and/or final approximation
    zeroed (keeps the middle bands that carry workload-relevant rhythms)."""
    coeffs = wavedec(x, levels)
    if drop_finest:
        coeffs.details[0] = np.zeros_like(coeffs.details[0])
    if drop_approx:
        coeffs.approx = np.zeros_like(coeffs.approx)
    return waverec(coeffs)
