"""Deterministic synthetic multichannel signals with planted covariance.

Each trial is colored Gaussian noise: white noise mixed through the class
target's matrix square root, so the population covariance equals the
target. Optional sinusoidal tones and injectable blink/EMG/line artifacts
support the preprocessing tests. Everything is a pure function of its seed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import CHANNELS_32, FS_DEFAULT, Recording
from .mission import TrialConfig

# label -> (latency, time_pressure) making riemann.label_for invert cleanly
LABEL_CONFIGS = {
    "LW": (0.0, False),
    "TP": (0.0, True),
    "0.5s": (0.5, False),
    "0.5s+TP": (0.5, True),
    "HighLat": (1.5, False),
}


@dataclass
class ClassSpec:
    label: str
    target: np.ndarray                 # SPD covariance to plant
    band_tones: list[tuple[float, float]] = field(default_factory=list)

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        if self.target.ndim != 2 or self.target.shape[0] != self.target.shape[1]:
            raise ValueError("target must be square")
        if not np.allclose(self.target, self.target.T, atol=1e-9):
            raise ValueError("target must be symmetric")
        evals = np.linalg.eigvalsh(self.target)
        if evals.min() <= 0:
            raise ValueError("target must be positive definite")


def config_for_label(label: str, trial_index: int = 0, seed: int = 0) -> TrialConfig:
    latency, tp = LABEL_CONFIGS.get(label, (0.0, False))
    return TrialConfig(latency=latency, time_pressure=tp, obstacles=True,
                       block="tp_block", trial_index=trial_index, seed=seed)


def _sqrtm_spd(a: np.ndarray) -> np.ndarray:
    evals, evecs = np.linalg.eigh(a)
    return (evecs * np.sqrt(np.maximum(evals, 0.0))) @ evecs.T


def gen_trial(spec: ClassSpec, seconds: float, fs: float, rng: np.random.Generator,
              channel_names: tuple[str, ...]) -> np.ndarray:
    d = spec.target.shape[0]
    if d != len(channel_names):
        raise ValueError("target dimension must match channel count")
    n = int(round(seconds * fs))
    data = _sqrtm_spd(spec.target) @ rng.standard_normal((d, n))
    t = np.arange(n) / fs
    for hz, amp in spec.band_tones:
        phase = rng.uniform(0, 2 * np.pi)
        data += amp * np.sin(2 * np.pi * hz * t + phase)
    return data


def gen_subject(specs: list[ClassSpec], trials_per_class: int,
                trial_seconds: float, fs: float = FS_DEFAULT, seed: int = 0,
                subject: str = "S0",
                channel_names: tuple[str, ...] = CHANNELS_32) -> list[Recording]:
    """One subject's session: trials_per_class recordings per class spec."""
    if not specs:
        raise ValueError("need at least one class spec")
    rng = np.random.default_rng(seed)
    out = []
    trial_index = 0
    for rep in range(trials_per_class):
        for spec in specs:
            data = gen_trial(spec, trial_seconds, fs, rng, channel_names)
            cfg = config_for_label(spec.label, trial_index=trial_index, seed=seed)
            out.append(Recording(data, fs=fs, channel_names=channel_names,
                                 subject=subject, trial=cfg))
            trial_index += 1
    return out


def inject_artifacts(rec: Recording, blink_rate: float = 0.0,
                     emg_level: float = 0.0, line_hz: float = 50.0,
                     line_level: float = 0.0, seed: int = 0) -> Recording:
    """Add eye blinks (frontal, ~0.5-4 Hz transients), broadband EMG
    (>30 Hz), and mains sinusoid. Zero rates leave the recording unchanged.
    """
    rng = np.random.default_rng(seed)
    data = rec.data.copy()
    n = rec.n_samples
    t = np.arange(n) / rec.fs

    if blink_rate > 0:
        # frontal topography peaking at FP1
        topo = np.zeros(rec.n_channels)
        for i, name in enumerate(rec.channel_names):
            if name == "FP1":
                topo[i] = 1.0
            elif name in ("FP2", "AF3", "AF4"):
                topo[i] = 0.6
            elif name.startswith("F"):
                topo[i] = 0.3
        if topo.max() == 0.0:
            topo[0] = 1.0
        n_blinks = int(round(blink_rate * (n / rec.fs) / 60.0))
        width = 0.15  # seconds, ~1-3 Hz energy
        for _ in range(n_blinks):
            center = rng.uniform(0.5, n / rec.fs - 0.5)
            pulse = 40.0 * np.exp(-0.5 * ((t - center) / width) ** 2)
            data += topo[:, None] * pulse[None, :]

    if emg_level > 0:
        from scipy import signal as sig
        noise = rng.standard_normal((rec.n_channels, n))
        b, a = sig.butter(4, 30.0, btype="highpass", fs=rec.fs)
        data += emg_level * sig.lfilter(b, a, noise, axis=1)

    if line_level > 0:
        data += line_level * np.sin(2 * np.pi * line_hz * t)[None, :]

    return rec.with_data(data)
