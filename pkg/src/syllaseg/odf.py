"""Onset detection functions: container, smoothing, CSV I/O, synthesis and
a peak-picking baseline."""
from __future__ import annotations

import math
import os
import re
import tempfile
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_HOP_S = 0.01

# 5-point Hann window [0, .5, 1, .5, 0] normalised to unit sum
HANN5 = np.array([0.0, 0.25, 0.5, 0.25, 0.0])

BUMP_STD_S = 0.015
ONSET_AMP_RANGE = (0.6, 1.0)
DISTRACTOR_EXCLUSION_S = 0.1

_HOP_HEADER = re.compile(r"^#\s*hop_s\s*=\s*(\S+)\s*$")


class ODFError(ValueError):
    """Invalid onset detection function data."""


@dataclass(frozen=True, eq=False)
class OnsetDetectionFunction:
    """A uniformly sampled onset probability curve.

    Frame ``k`` sits at time ``k * hop_s``.
    """

    values: np.ndarray
    hop_s: float = DEFAULT_HOP_S

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 1:
            raise ODFError("ODF values must be one-dimensional")
        if v.size < 2:
            raise ODFError(f"ODF needs at least 2 frames, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ODFError("ODF values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ODFError("ODF values must lie in [0, 1]")
        if not (self.hop_s > 0 and math.isfinite(self.hop_s)):
            raise ODFError(f"hop_s must be positive, got {self.hop_s}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "hop_s", float(self.hop_s))

    def __len__(self):
        return self.values.size

    @property
    def duration_s(self) -> float:
        """Time of the last frame, ``(N - 1) * hop_s``."""
        return (self.values.size - 1) * self.hop_s

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.values.size) * self.hop_s


def smooth_odf(odf: OnsetDetectionFunction) -> OnsetDetectionFunction:
    """Convolve with the unit-sum 5-frame Hann window ('same' length, zero padded)."""
    if len(odf) < 5:
        raise ODFError(f"smoothing needs at least 5 frames, got {len(odf)}")
    out = np.convolve(odf.values, HANN5, mode="same")
    return OnsetDetectionFunction(np.clip(out, 0.0, 1.0), odf.hop_s)


def load_odf(path) -> OnsetDetectionFunction:
    """Read an ODF CSV: a ``# hop_s=<value>`` header, then one value per line."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ODFError(f"{path}: empty file, missing hop header")
    m = _HOP_HEADER.match(lines[0].strip())
    if m is None:
        raise ODFError(f"{path}: line 1: missing '# hop_s=<value>' header")
    try:
        hop_s = float(m.group(1))
    except ValueError:
        raise ODFError(f"{path}: line 1: invalid hop_s {m.group(1)!r}") from None

    values = []
    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s:
            continue
        try:
            x = float(s)
        except ValueError:
            raise ODFError(f"{path}: line {lineno}: non-numeric value {s!r}") from None
        if not (0.0 <= x <= 1.0):
            raise ODFError(f"{path}: line {lineno}: value {s} outside [0, 1]")
        values.append(x)
    return OnsetDetectionFunction(np.array(values), hop_s)


def write_atomic(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_odf(odf: OnsetDetectionFunction, path) -> None:
    body = "\n".join(repr(float(x)) for x in odf.values)
    write_atomic(path, f"# hop_s={odf.hop_s!r}\n{body}\n")


@dataclass(frozen=True)
class DistractorSpec:
    """Spurious ODF peaks to scatter over non-onset positions.

    ``region`` restricts placement to a time interval; by default the whole
    signal is eligible.
    """

    count: int = 0
    amp_range: tuple[float, float] = (0.5, 0.9)
    seed: int = 0
    region: tuple[float, float] | None = None


def _bump(times: np.ndarray, center: float, amp: float) -> np.ndarray:
    return amp * np.exp(-0.5 * ((times - center) / BUMP_STD_S) ** 2)


def synth_odf(
    true_onsets: Sequence[float],
    total_duration: float,
    hop_s: float = DEFAULT_HOP_S,
    distractors: DistractorSpec = DistractorSpec(),
    noise_floor: float = 0.0,
) -> OnsetDetectionFunction:
    """Synthesise an ODF with a Gaussian bump at each true onset.

    Frames cover ``0 .. total_duration`` inclusive, so the returned ODF has
    ``round(total_duration / hop_s) + 1`` frames. Onset bumps get amplitudes in
    [0.6, 1.0]; distractor bumps are kept at least 100 ms away from every true
    onset. Uniform noise in ``[0, noise_floor]`` is added last, then the curve
    is clipped to [0, 1]. Output is fully determined by ``distractors.seed``.
    """
    onsets = np.asarray(true_onsets, dtype=np.float64)
    if not (hop_s > 0):
        raise ODFError(f"hop_s must be positive, got {hop_s}")
    if not (total_duration > 0):
        raise ODFError(f"total duration must be positive, got {total_duration}")
    if onsets.ndim != 1:
        raise ODFError("onsets must be a flat list")
    if onsets.size and (onsets[0] < 0 or onsets[-1] >= total_duration):
        raise ODFError(f"onsets must lie within [0, {total_duration})")
    if np.any(np.diff(onsets) <= 0):
        raise ODFError("onsets must be strictly increasing")
    lo, hi = distractors.amp_range
    if not (0 <= lo <= hi <= 1):
        raise ODFError(f"invalid distractor amplitude range {distractors.amp_range}")

    rng = np.random.default_rng(distractors.seed)
    n_frames = int(round(total_duration / hop_s)) + 1
    times = np.arange(n_frames) * hop_s
    values = np.zeros(n_frames)

    for t, amp in zip(onsets, rng.uniform(*ONSET_AMP_RANGE, size=onsets.size)):
        values = np.maximum(values, _bump(times, t, amp))

    r0, r1 = distractors.region if distractors.region is not None else (0.0, total_duration)
    placed: list[float] = []
    attempts = 0
    while len(placed) < distractors.count:
        attempts += 1
        if attempts > 1000 * max(distractors.count, 1):
            raise ODFError("cannot place distractors: region too crowded by true onsets")
        t = rng.uniform(r0, r1)
        if onsets.size and np.min(np.abs(onsets - t)) < DISTRACTOR_EXCLUSION_S:
            continue
        placed.append(t)
    for t, amp in zip(placed, rng.uniform(lo, hi, size=len(placed))):
        values = np.maximum(values, _bump(times, t, amp))

    if noise_floor > 0:
        values = values + rng.uniform(0.0, noise_floor, size=n_frames)
    return OnsetDetectionFunction(np.clip(values, 0.0, 1.0), hop_s)


def peak_pick(
    odf: OnsetDetectionFunction, threshold: float = 0.5, min_separation_s: float = 0.05
) -> list[float]:
    """Threshold-and-peak-pick baseline.

    Local maxima strictly above ``threshold`` are taken in decreasing height
    order; a peak closer than ``min_separation_s`` to an already kept peak is
    dropped. Returns sorted onset times in seconds.
    """
    if not (0.0 <= threshold <= 1.0):
        raise ODFError(f"threshold must lie in [0, 1], got {threshold}")
    v = odf.values
    left = np.concatenate(([-np.inf], v[:-1]))
    right = np.concatenate((v[1:], [-np.inf]))
    # plateaus count once, at their first frame
    cand = np.flatnonzero((v > left) & (v >= right) & (v > threshold))
    order = cand[np.argsort(-v[cand], kind="stable")]
    min_sep = min_separation_s / odf.hop_s - 1e-9
    kept: list[int] = []
    for k in order:
        if all(abs(k - j) >= min_sep for j in kept):
            kept.append(int(k))
    return [k * odf.hop_s for k in sorted(kept)]
