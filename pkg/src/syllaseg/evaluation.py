"""Syllable segmentation metrics.

A syllable counts as correctly segmented when its onset is within ``tau`` of
the reference onset, its offset is within ``max(offset_fraction * duration,
tau)`` of the reference offset, and its label matches. The offset of a
syllable is the onset of the next one; the last syllable ends at the final
boundary. Detected and reference syllables are paired by index, which is
valid because score-informed decoding always yields the score's syllable
count.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

# absorbs float noise so a deviation of exactly tau counts as inside
_SLACK = 1e-9


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class EvalConfig:
    tau_s: float = 0.05
    offset_fraction: float = 0.20

    def __post_init__(self):
        if not self.tau_s > 0:
            raise EvaluationError(f"tau must be positive, got {self.tau_s}")
        if not 0 < self.offset_fraction < 1:
            raise EvaluationError(f"offset_fraction must lie in (0, 1), got {self.offset_fraction}")


@dataclass(frozen=True)
class ReferenceAnnotation:
    phrase_id: str
    onsets_s: tuple[float, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "onsets_s", tuple(float(t) for t in self.onsets_s))
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.onsets_s) < 2:
            raise EvaluationError("annotation needs at least one onset and a final offset")
        if any(b <= a for a, b in zip(self.onsets_s, self.onsets_s[1:])):
            raise EvaluationError(f"{self.phrase_id}: annotation times must strictly increase")
        if len(self.labels) != len(self.onsets_s) - 1:
            raise EvaluationError(
                f"{self.phrase_id}: {len(self.labels)} labels for {len(self.onsets_s) - 1} syllables")

    @classmethod
    def from_json(cls, doc: dict) -> "ReferenceAnnotation":
        try:
            return cls(doc.get("phrase_id", ""), doc["onsets_s"], doc["labels"])
        except (KeyError, TypeError) as exc:
            raise EvaluationError(f"malformed annotation document: {exc}") from exc

    def to_json(self) -> dict:
        return {"phrase_id": self.phrase_id, "onsets_s": list(self.onsets_s),
                "labels": list(self.labels)}


def load_annotation(path) -> ReferenceAnnotation:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"{path}: malformed JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise EvaluationError(f"{path}: expected a JSON object")
    return ReferenceAnnotation.from_json(doc)


@dataclass
class SyllableResult:
    onset_ok: bool
    offset_ok: bool
    label_ok: bool
    onset_deviation_s: float

    @property
    def correct(self) -> bool:
        return self.onset_ok and self.offset_ok and self.label_ok


@dataclass
class EvalReport:
    phrase_id: str
    per_syllable: list[SyllableResult]
    n_correct: int
    n_detected: int
    n_reference: int
    precision: float
    recall: float
    f_measure: float
    false_onsets: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _prf(n_correct: int, n_detected: int, n_reference: int) -> tuple[float, float, float]:
    p = n_correct / n_detected if n_detected else 0.0
    r = n_correct / n_reference if n_reference else 0.0
    # equals 2PR / (P + R), without the rounding that breaks P == R == F
    f = 2 * n_correct / (n_detected + n_reference) if n_correct else 0.0
    return p, r, f


def _as_pair(detected, reference: ReferenceAnnotation):
    det_times = list(detected.onsets_s)
    det_labels = detected.labels
    if len(det_times) != len(reference.onsets_s):
        raise EvaluationError(
            f"{reference.phrase_id}: detected {len(det_times) - 1} syllables, "
            f"reference has {len(reference.onsets_s) - 1}")
    return np.asarray(det_times, dtype=float), det_labels


def evaluate(detected, reference: ReferenceAnnotation,
             cfg: EvalConfig = EvalConfig()) -> EvalReport:
    """Score one decoded phrase against its reference annotation.

    ``detected`` is anything with ``onsets_s`` (L + 1 times) and ``labels``
    (a :class:`~syllaseg.decoder.BoundarySequence` or another
    :class:`ReferenceAnnotation`).
    """
    det, det_labels = _as_pair(detected, reference)
    ref = np.asarray(reference.onsets_s)
    n = ref.size - 1
    per = []
    false_onsets = []
    for i in range(n):
        dev = float(det[i] - ref[i])
        onset_ok = abs(dev) <= cfg.tau_s + _SLACK
        ref_dur = ref[i + 1] - ref[i]
        off_tol = max(cfg.offset_fraction * ref_dur, cfg.tau_s)
        offset_ok = abs(det[i + 1] - ref[i + 1]) <= off_tol + _SLACK
        label_ok = det_labels is not None and len(det_labels) == n and det_labels[i] == reference.labels[i]
        per.append(SyllableResult(bool(onset_ok), bool(offset_ok), bool(label_ok), dev))
        if not onset_ok:
            false_onsets.append({"index": i, "deviation_s": dev})
    n_correct = sum(s.correct for s in per)
    p, r, f = _prf(n_correct, n, n)
    return EvalReport(reference.phrase_id, per, n_correct, n, n, p, r, f, false_onsets)


def deviation_report(detected, reference: ReferenceAnnotation,
                     cfg: EvalConfig = EvalConfig()) -> list[dict]:
    """Signed onset deviations (detected minus reference), one entry per syllable."""
    det, _ = _as_pair(detected, reference)
    ref = np.asarray(reference.onsets_s)
    out = []
    for i in range(ref.size - 1):
        dev = float(det[i] - ref[i])
        out.append({"syllable_index": i, "onset_deviation_s": dev,
                    "within_tolerance": abs(dev) <= cfg.tau_s + _SLACK})
    return out


def aggregate(reports: Sequence[EvalReport]) -> EvalReport:
    """Micro-average: pool counts over phrases, then recompute P, R and F."""
    if not reports:
        raise EvaluationError("cannot aggregate an empty list of reports")
    if len(reports) == 1:
        return reports[0]
    n_correct = sum(r.n_correct for r in reports)
    n_detected = sum(r.n_detected for r in reports)
    n_reference = sum(r.n_reference for r in reports)
    p, r, f = _prf(n_correct, n_detected, n_reference)
    per = [s for rep in reports for s in rep.per_syllable]
    false_onsets = [dict(fo, phrase_id=rep.phrase_id) for rep in reports for fo in rep.false_onsets]
    return EvalReport("ALL", per, n_correct, n_detected, n_reference, p, r, f, false_onsets)


def format_table(reports: Sequence[EvalReport], total: EvalReport | None = None) -> str:
    lines = [f"{'phrase':<24} {'correct/total':>13} {'P':>7} {'R':>7} {'F':>7}"]
    rows = list(reports) + ([total] if total is not None else [])
    for rep in rows:
        lines.append(f"{rep.phrase_id[:24]:<24} {f'{rep.n_correct}/{rep.n_reference}':>13} "
                     f"{rep.precision:7.4f} {rep.recall:7.4f} {rep.f_measure:7.4f}")
    return "\n".join(lines)
