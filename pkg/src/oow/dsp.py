"""Multichannel EEG preprocessing: notch/bandpass IIR filtering, wavelet
band reduction, ICA artifact cleaning, channel selection, 2-s windowing,
and beta-band power.

All filters run forward-backward (zero phase, offline analysis). Every
recording is first notch filtered at 50 and 100 Hz; the named method stages
(ICA / BP / WT) follow in listed order.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import json
from pathlib import Path

import numpy as np
from scipy import signal

from . import wavelets
from .ica import component_correlations, excess_kurtosis, fast_ica
from .mission import TrialConfig

FS_DEFAULT = 250.0
EPOCH_SECONDS = 2.0
BAND_LO_DEFAULT = 2.0
BAND_HI_DEFAULT = 60.0
NOTCH_Q_DEFAULT = 30.0
BETA_BAND = (13.0, 30.0)
ICA_EOG_CORR_THRESHOLD = 0.7
ICA_KURTOSIS_THRESHOLD = 5.0

METHODS = ("ICA", "BP", "WT", "ICA+BP", "ICA+WT", "BP+WT", "ICA+BP+WT")

# g.tec-style 32-channel 10-20 montage used throughout
CHANNELS_32 = (
    "FP1", "FP2", "AF3", "AF4", "F7", "F3", "Fz", "F4", "F8",
    "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz", "C4", "T8",
    "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "P8",
    "PO7", "PO3", "PO4", "PO8", "Oz",
)


class ChannelError(ValueError):
    """Unknown channel or preset name."""


@dataclass
class Recording:
    """channels x samples multichannel signal with acquisition metadata."""

    data: np.ndarray
    fs: float = FS_DEFAULT
    channel_names: tuple[str, ...] = CHANNELS_32
    subject: str = "S0"
    trial: TrialConfig | None = None
    ica_warning: bool = False

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        self.channel_names = tuple(self.channel_names)
        if self.data.ndim != 2:
            raise ValueError("data must be channels x samples")
        if self.data.shape[0] != len(self.channel_names):
            raise ValueError("one name per channel required")
        if len(set(self.channel_names)) != len(self.channel_names):
            raise ValueError("channel names must be unique")
        if self.fs <= 0:
            raise ValueError("fs must be positive")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("data contains NaN or Inf")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    def with_data(self, data: np.ndarray, **kw) -> "Recording":
        return replace(self, data=data, **kw)

    def channel(self, name: str) -> np.ndarray:
        try:
            return self.data[self.channel_names.index(name)]
        except ValueError as exc:
            raise ChannelError(f"unknown channel {name!r}") from exc


@dataclass
class Epoch:
    """One fs*2-sample window with its workload label."""

    data: np.ndarray
    label: str
    subject: str
    trial_index: int
    fs: float = FS_DEFAULT

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        expected = int(round(self.fs * EPOCH_SECONDS))
        if self.data.ndim != 2 or self.data.shape[1] != expected:
            raise ValueError(f"epoch must be channels x {expected} samples")


@dataclass
class ChannelConfig:
    name: str
    channels: tuple[str, ...]

    def __post_init__(self):
        self.channels = tuple(self.channels)
        if len(self.channels) < 2:
            raise ValueError("channel config needs at least 2 channels")


def load_channel_presets(path: str | Path | None = None) -> dict[str, ChannelConfig]:
    """Named configurations from the (editable) presets file."""
    if path is None:
        from importlib.resources import files
        text = files("oow.data").joinpath("channel_presets.json").read_text()
    else:
        text = Path(path).read_text()
    raw = json.loads(text)
    return {name: ChannelConfig(name, tuple(chs)) for name, chs in raw.items()}


def get_channel_config(name: str, channels: list[str] | None = None,
                       presets_path: str | Path | None = None) -> ChannelConfig:
    if name == "custom":
        if not channels:
            raise ChannelError("custom config needs an explicit channel list")
        return ChannelConfig("custom", tuple(channels))
    presets = load_channel_presets(presets_path)
    if name not in presets:
        raise ChannelError(
            f"unknown preset {name!r}; available: {sorted(presets)}")
    return presets[name]


# --------------------------------------------------------------- filters

def _filtfilt(rec: Recording, b: np.ndarray, a: np.ndarray) -> Recording:
    return rec.with_data(signal.filtfilt(b, a, rec.data, axis=1))


def notch(rec: Recording, f0: float, q: float = NOTCH_Q_DEFAULT) -> Recording:
    """Second-order zero-phase notch at f0."""
    if not 0 < f0 < rec.fs / 2:
        raise ValueError(f"notch frequency {f0} outside (0, Nyquist)")
    b, a = signal.iirnotch(f0, q, fs=rec.fs)
    return _filtfilt(rec, b, a)


def bandpass(rec: Recording, lo: float = BAND_LO_DEFAULT,
             hi: float = BAND_HI_DEFAULT) -> Recording:
    """4th-order zero-phase Butterworth bandpass."""
    if not 0 < lo < hi < rec.fs / 2:
        raise ValueError(f"invalid band [{lo}, {hi}] for fs={rec.fs}")
    b, a = signal.butter(4, [lo, hi], btype="bandpass", fs=rec.fs)
    return _filtfilt(rec, b, a)


def wavelet_reduce(rec: Recording) -> Recording:
    """Drop the finest detail (~62.5-125 Hz) and final approximation (<2 Hz)
    from a 6-level Daubechies-4 decomposition, per channel."""
    if rec.n_samples < 2 ** wavelets.DEFAULT_LEVELS:
        raise ValueError("recording too short for 6 wavelet levels")
    out = np.empty_like(rec.data)
    for i in range(rec.n_channels):
        out[i] = wavelets.reduce_bands(rec.data[i])
    return rec.with_data(out)


def ica_clean(rec: Recording, eog_channel: str = "FP1",
              seed: int = 0,
              corr_threshold: float = ICA_EOG_CORR_THRESHOLD,
              kurtosis_threshold: float = ICA_KURTOSIS_THRESHOLD) -> Recording:
    """Remove components tracking the EOG channel or with extreme kurtosis.

    Non-convergence is tolerated: the input comes back unchanged with
    ``ica_warning`` set.
    """
    eog = rec.channel(eog_channel)  # raises ChannelError if absent
    if rec.n_channels < 2:
        raise ValueError("ICA needs at least 2 channels")
    result = fast_ica(rec.data, seed=seed)
    if not result.converged:
        return rec.with_data(rec.data.copy(), ica_warning=True)
    corr = component_correlations(result.sources, eog)
    keep = np.ones(result.sources.shape[0], dtype=bool)
    for i, source in enumerate(result.sources):
        if corr[i] > corr_threshold:
            keep[i] = False
        elif abs(excess_kurtosis(source)) > kurtosis_threshold:
            keep[i] = False
    if keep.all():
        return rec.with_data(rec.data.copy())
    sources = result.sources.copy()
    sources[~keep] = 0.0
    cleaned = result.mixing @ sources + result.mean
    return rec.with_data(cleaned)


def select_channels(rec: Recording, config: ChannelConfig) -> Recording:
    """Row subset in config order."""
    missing = [c for c in config.channels if c not in rec.channel_names]
    if missing:
        raise ChannelError(f"unknown channels: {missing}")
    idx = [rec.channel_names.index(c) for c in config.channels]
    return rec.with_data(rec.data[idx], channel_names=config.channels)


def window(rec: Recording, label: str | None = None) -> list[Epoch]:
    """Consecutive disjoint 2-s epochs; trailing partial window dropped."""
    n = int(round(rec.fs * EPOCH_SECONDS))
    if abs(rec.fs * EPOCH_SECONDS - n) > 1e-9:
        raise ValueError("fs*2 must be an integer sample count")
    count = rec.n_samples // n
    trial_index = rec.trial.trial_index if rec.trial else 0
    if label is None:
        label = ""
    return [Epoch(rec.data[:, k * n:(k + 1) * n].copy(), label,
                  rec.subject, trial_index, rec.fs)
            for k in range(count)]


def beta_power(epoch: Epoch, band: tuple[float, float] = BETA_BAND) -> float:
    """Mean over channels of periodogram power inside the beta band."""
    freqs, pxx = signal.periodogram(epoch.data, fs=epoch.fs, axis=1)
    mask = (freqs >= band[0]) & (freqs <= band[1])
    return float(pxx[:, mask].sum(axis=1).mean())


def preprocess(rec: Recording, method: str, seed: int = 0) -> Recording:
    """Notch at 50 and 100 Hz, then the named stages in listed order."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    out = notch(rec, 50.0)
    out = notch(out, 100.0)
    for stage in method.split("+"):
        if stage == "ICA":
            out = ica_clean(out, seed=seed)
        elif stage == "BP":
            out = bandpass(out)
        elif stage == "WT":
            out = wavelet_reduce(out)
    return out


# ------------------------------------------------------------- recording IO

def save_recording_csv(rec: Recording, path: str | Path) -> None:
    """Header = channel names, one sample per row."""
    header = ",".join(rec.channel_names)
    np.savetxt(path, rec.data.T, delimiter=",", header=header, comments="")


def load_recording_csv(path: str | Path, fs: float = FS_DEFAULT,
                       subject: str = "S0",
                       trial: TrialConfig | None = None) -> Recording:
    with open(path) as fh:
        names = tuple(fh.readline().strip().split(","))
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    if data.ndim == 1:
        data = data[:, None]
    return Recording(data.T, fs=fs, channel_names=names,
                     subject=subject, trial=trial)


def save_recording_bin(rec: Recording, path: str | Path) -> None:
    """Little-endian float32 samples-major binary + JSON sidecar metadata."""
    path = Path(path)
    rec.data.T.astype("<f4").tofile(path)
    meta = {"fs": rec.fs, "channels": list(rec.channel_names),
            "subject": rec.subject,
            "trial": rec.trial.to_dict() if rec.trial else None,
            "dtype": "<f4", "order": "samples_major"}
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(meta, indent=2) + "\n")


def load_recording_bin(path: str | Path) -> Recording:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    raw = np.fromfile(path, dtype="<f4")
    n_ch = len(meta["channels"])
    data = raw.reshape(-1, n_ch).T.astype(float)
    trial = TrialConfig.from_dict(meta["trial"]) if meta.get("trial") else None
    return Recording(data, fs=float(meta["fs"]),
                     channel_names=tuple(meta["channels"]),
                     subject=meta.get("subject", "S0"), trial=trial)
