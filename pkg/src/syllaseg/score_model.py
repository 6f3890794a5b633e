"""Score parsing and the a priori syllable duration model.

A score is reduced to an ordered list of syllables with relative durations in
quarter-note units. Tempo is discarded: relative durations are rescaled so
they sum to the duration of the recording, and each syllable gets a Gaussian
duration prior whose standard deviation is proportional to its mean.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

DEFAULT_GAMMA = 0.35

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class ScoreError(ValueError):
    """Raised for malformed score documents or invalid duration inputs."""


@dataclass(frozen=True)
class Syllable:
    label: str
    duration_qn: float


@dataclass(frozen=True)
class Phrase:
    """Ordered syllables of one sung phrase, as written in the score."""

    phrase_id: str
    syllables: tuple[Syllable, ...]

    def __post_init__(self):
        if len(self.syllables) == 0:
            raise ScoreError("phrase has no syllables")
        for k, syl in enumerate(self.syllables):
            if not syl.duration_qn > 0:
                raise ScoreError(f"non-positive duration at index {k}")

    def __len__(self):
        return len(self.syllables)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.syllables]

    @property
    def durations_qn(self) -> list[float]:
        return [s.duration_qn for s in self.syllables]


@dataclass(frozen=True)
class DurationEntry:
    mu_s: float
    sigma_s: float
    # -log(sqrt(2 pi) sigma); cached so every caller shares one rounding
    log_norm: float


@dataclass(frozen=True)
class DurationModel:
    """Per-syllable Gaussian duration priors, in seconds."""

    entries: tuple[DurationEntry, ...]
    gamma: float

    def __len__(self):
        return len(self.entries)

    @property
    def mus(self) -> list[float]:
        return [e.mu_s for e in self.entries]

    @property
    def sigmas(self) -> list[float]:
        return [e.sigma_s for e in self.entries]

    @property
    def total_s(self) -> float:
        return math.fsum(self.mus)


def _parse_duration(value, index: int) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ScoreError(f"invalid duration at index {index}: {value!r}")
    try:
        # strings allow exact rationals such as "1/3"
        dur = float(Fraction(value)) if isinstance(value, str) else float(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScoreError(f"invalid duration at index {index}: {value!r}") from exc
    if not math.isfinite(dur) or dur <= 0:
        raise ScoreError(f"non-positive duration at index {index}")
    return dur


def parse_score(text: str) -> Phrase:
    """Parse a score JSON document into a :class:`Phrase`.

    The document looks like ``{"phrase_id": "...", "syllables": [{"label":
    "...", "duration_qn": 1.0}, ...]}``. Any other top-level keys (tempo,
    composer, ...) are ignored.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScoreError(f"malformed score document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScoreError("malformed score document: expected a JSON object")
    phrase_id = doc.get("phrase_id", "")
    if not isinstance(phrase_id, str):
        raise ScoreError("malformed score document: phrase_id must be a string")
    raw = doc.get("syllables")
    if not isinstance(raw, list):
        raise ScoreError("malformed score document: missing 'syllables' list")
    if not raw:
        raise ScoreError("empty syllable list")

    syllables = []
    for k, item in enumerate(raw):
        if not isinstance(item, dict) or "duration_qn" not in item:
            raise ScoreError(f"malformed syllable at index {k}")
        label = item.get("label")
        if not isinstance(label, str) or not label:
            raise ScoreError(f"missing or empty label at index {k}")
        syllables.append(Syllable(label, _parse_duration(item["duration_qn"], k)))
    return Phrase(phrase_id, tuple(syllables))


def load_score(path) -> Phrase:
    with open(path, encoding="utf-8") as f:
        return parse_score(f.read())


def absolute_durations(phrase: Phrase, audio_duration: float) -> list[float]:
    """Rescale the phrase's relative durations so they sum to ``audio_duration``."""
    if not audio_duration > 0 or not math.isfinite(audio_duration):
        raise ScoreError(f"audio duration must be positive, got {audio_duration}")
    rel = phrase.durations_qn
    total = math.fsum(rel)
    mus = [audio_duration * r / total for r in rel]
    # push the rounding residue into the longest syllable so the sum is exact
    residue = audio_duration - math.fsum(mus)
    k = max(range(len(mus)), key=mus.__getitem__)
    mus[k] += residue
    return mus


def build_duration_model(mus: Sequence[float], gamma: float = DEFAULT_GAMMA) -> DurationModel:
    if not gamma > 0 or not math.isfinite(gamma):
        raise ScoreError(f"gamma must be positive, got {gamma}")
    if len(mus) == 0:
        raise ScoreError("duration model needs at least one syllable")
    entries = []
    for k, mu in enumerate(mus):
        mu = float(mu)
        if not mu > 0 or not math.isfinite(mu):
            raise ScoreError(f"non-positive mean duration at index {k}")
        sigma = gamma * mu
        entries.append(DurationEntry(mu, sigma, -(_LOG_SQRT_2PI + math.log(sigma))))
    return DurationModel(tuple(entries), float(gamma))


def prior_log_density(model: DurationModel, l: int, d: float) -> float:
    """Log of the Gaussian duration prior of syllable ``l`` (1-based) at ``d`` seconds.

    Evaluated directly in log space, so far-tail durations do not underflow.
    """
    if not 1 <= l <= len(model.entries):
        raise IndexError(f"syllable index {l} outside 1..{len(model.entries)}")
    e = model.entries[l - 1]
    diff = d - e.mu_s
    return e.log_norm - diff * diff / (2.0 * e.sigma_s * e.sigma_s)
