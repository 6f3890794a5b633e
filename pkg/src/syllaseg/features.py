"""Log-mel spectrogram front end (44.1 kHz, 25 ms window, 10 ms hop, 80 bands)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.io import wavfile

SAMPLE_RATE = 44100
WIN_LENGTH = int(0.025 * SAMPLE_RATE)  # 1102 samples
HOP_LENGTH = int(round(0.010 * SAMPLE_RATE))  # 441 samples
N_FFT = 2048
N_MELS = 80
FMIN = 0.0
FMAX = 11000.0
POWER_FLOOR = 1e-5


class AudioError(ValueError):
    """Unsupported or malformed audio input."""


@dataclass(frozen=True, eq=False)
class LogMelSpectrogram:
    frames: np.ndarray  # (num_frames, band_count)
    hop_s: float = HOP_LENGTH / SAMPLE_RATE

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64)
        if f.ndim != 2 or f.shape[1] != N_MELS:
            raise ValueError(f"expected a (frames, {N_MELS}) matrix, got {f.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("log-mel entries must be finite")
        object.__setattr__(self, "frames", f)

    @property
    def band_count(self) -> int:
        return self.frames.shape[1]

    def __len__(self):
        return self.frames.shape[0]


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_band_edges(n_mels: int = N_MELS, fmin: float = FMIN, fmax: float = FMAX) -> np.ndarray:
    """``n_mels + 2`` edge frequencies in Hz, uniformly spaced on the HTK mel axis.

    Band ``b`` rises from edge ``b`` to a peak at edge ``b + 1`` and falls to
    edge ``b + 2``.
    """
    return mel_to_hz(np.linspace(hz_to_mel(fmin), hz_to_mel(fmax), n_mels + 2))


def mel_filterbank(sr: int = SAMPLE_RATE, n_fft: int = N_FFT, n_mels: int = N_MELS,
                   fmin: float = FMIN, fmax: float = FMAX) -> np.ndarray:
    """Triangular filters of shape ``(n_mels, n_fft // 2 + 1)``, peak weight 1."""
    edges = mel_band_edges(n_mels, fmin, fmax)
    freqs = np.fft.rfftfreq(n_fft, 1.0 / sr)
    lower, center, upper = edges[:-2, None], edges[1:-1, None], edges[2:, None]
    rising = (freqs - lower) / (center - lower)
    falling = (upper - freqs) / (upper - center)
    return np.maximum(0.0, np.minimum(rising, falling))


def frame_count(num_samples: int) -> int:
    return (num_samples - WIN_LENGTH) // HOP_LENGTH + 1


def logmel_spectrogram(audio, sample_rate: int) -> LogMelSpectrogram:
    """Log power mel spectrogram.

    Frames start at sample 0 (no centring): frame ``k`` covers samples
    ``[k * 441, k * 441 + 1102)``, Hann weighted and zero padded to 2048
    points. Power below 1e-5 is floored before the log.
    """
    if sample_rate != SAMPLE_RATE:
        raise AudioError(f"unsupported sample rate {sample_rate} Hz (need {SAMPLE_RATE})")
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim != 1:
        raise AudioError("audio must be mono")
    if x.size < WIN_LENGTH:
        raise AudioError(f"audio shorter than one {WIN_LENGTH}-sample window")

    n = frame_count(x.size)
    idx = np.arange(WIN_LENGTH)[None, :] + HOP_LENGTH * np.arange(n)[:, None]
    frames = x[idx] * np.hanning(WIN_LENGTH)
    power = np.abs(np.fft.rfft(frames, n=N_FFT, axis=1)) ** 2
    mel = power @ mel_filterbank().T
    return LogMelSpectrogram(np.log(np.maximum(mel, POWER_FLOOR)))


def standardize(spec: LogMelSpectrogram) -> LogMelSpectrogram:
    """Zero mean, unit (population) variance per band; constant bands become zeros."""
    f = spec.frames
    if f.shape[0] == 0:
        raise ValueError("cannot standardize an empty spectrogram")
    mean = f.mean(axis=0)
    centered = f - mean
    std = np.sqrt((centered ** 2).mean(axis=0))
    # relative threshold: a band that is constant up to rounding counts as constant
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    out = np.where(constant, 0.0, centered / np.where(constant, 1.0, std))
    return LogMelSpectrogram(out, spec.hop_s)


def read_wav(path) -> tuple[np.ndarray, int]:
    """Load a mono WAV as float64 in [-1, 1]. Stereo files are rejected."""
    try:
        sr, data = wavfile.read(path)
    except (ValueError, OSError) as exc:
        raise AudioError(f"{path}: cannot read WAV: {exc}") from exc
    if data.ndim != 1:
        raise AudioError(f"{path}: expected mono audio, got {data.shape[1]} channels")
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    elif np.issubdtype(data.dtype, np.floating):
        x = data.astype(np.float64)
    else:
        raise AudioError(f"{path}: unsupported sample format {data.dtype}")
    return x, int(sr)


def format_logmel_csv(spec: LogMelSpectrogram) -> str:
    rows = [f"# hop_s={spec.hop_s:.2f} bands={spec.band_count}"]
    rows.extend(",".join(f"{v:.6g}" for v in frame) for frame in spec.frames)
    return "\n".join(rows) + "\n"
