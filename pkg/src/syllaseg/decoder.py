"""Score-informed Viterbi decoding of syllable boundaries.

Candidate boundary states are the ODF frames. The first boundary is pinned
to frame 0 and the last (the offset of the final syllable) to frame N - 1;
the L - 1 interior boundaries are chosen to maximise

    sum_l log N(d_l; mu_l, sigma_l^2) + sum_{interior q} log p(q)

where ``d_l`` is the duration of syllable ``l`` in seconds. State indices in
this module are 0-based frame indices, so the state at time ``t`` is frame
``t / hop_s``.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from . import _kernels
from .odf import OnsetDetectionFunction
from .score_model import DurationModel, prior_log_density

ODF_FLOOR = 1e-10
DURATION_WARN_REL = 0.02
DURATION_ERROR_REL = 0.20
BRUTE_FORCE_MAX_PATHS = 10**6


class DecodeError(ValueError):
    pass


class InfeasibleError(DecodeError):
    """No monotone boundary path satisfies the constraints."""


class DurationMismatchError(DecodeError):
    """Score durations do not add up to the ODF's duration."""


@dataclass(frozen=True)
class StateGrid:
    n_states: int
    hop_s: float

    def __post_init__(self):
        if self.n_states < 2:
            raise DecodeError(f"need at least 2 states, got {self.n_states}")
        if not self.hop_s > 0:
            raise DecodeError(f"hop_s must be positive, got {self.hop_s}")

    def state_time(self, i: int) -> float:
        return i * self.hop_s

    def distance(self, i: int, j: int) -> float:
        if j <= i:
            raise DecodeError(f"state {j} does not follow state {i}")
        return (j - i) * self.hop_s


@dataclass(frozen=True, eq=False)
class ViterbiTrellis:
    """Forward tables; row ``l - 1`` belongs to boundary ``q_l``."""

    delta: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class DecodeOptions:
    prune_sigmas: float | None = None
    odf_floor: float = ODF_FLOOR
    backend: str | None = None


@dataclass(eq=False)
class BoundarySequence:
    onsets_s: list[float]
    state_indices: list[int]
    log_prob: float
    labels: list[str] | None = None
    phrase_id: str = ""
    hop_s: float = 0.01
    stats: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.onsets_s)

    def to_json(self) -> dict:
        return {
            "phrase_id": self.phrase_id,
            "hop_s": self.hop_s,
            "onsets_s": list(self.onsets_s),
            "labels": list(self.labels) if self.labels is not None else [],
            "log_prob": self.log_prob,
        }


def log_observations(odf: OnsetDetectionFunction, floor: float = ODF_FLOOR) -> np.ndarray:
    """Natural log of the ODF, floored at ``floor`` first (0 allows -inf)."""
    with np.errstate(divide="ignore"):
        return np.log(np.maximum(odf.values, floor))


def transition_table(model: DurationModel, n_states: int, hop_s: float) -> np.ndarray:
    """``table[l - 1, k]`` = log prior of syllable ``l`` lasting ``k`` frames (k >= 1)."""
    lags = np.arange(n_states) * hop_s
    table = np.empty((len(model), n_states))
    for r, e in enumerate(model.entries):
        diff = lags - e.mu_s
        table[r] = e.log_norm - diff * diff / (2.0 * e.sigma_s * e.sigma_s)
    table[:, 0] = -np.inf
    return table


def check_duration_match(model: DurationModel, n_states: int, hop_s: float) -> float:
    """Relative mismatch between the model's total and the ODF duration.

    Warns above 2 %, raises :class:`DurationMismatchError` above 20 %.
    """
    audio = (n_states - 1) * hop_s
    rel = abs(model.total_s - audio) / audio
    if rel > DURATION_ERROR_REL:
        raise DurationMismatchError(
            f"score durations sum to {model.total_s:.4f} s but the ODF spans {audio:.4f} s "
            f"({rel:.1%} mismatch exceeds the 20% limit)")
    if rel > DURATION_WARN_REL:
        warnings.warn(f"score/ODF duration mismatch of {rel:.1%} (over 2%); "
                      "trim leading and trailing silence", stacklevel=3)
    return rel


def _check_problem(odf: OnsetDetectionFunction, model: DurationModel) -> tuple[int, int]:
    L, N = len(model), len(odf)
    if L < 1:
        raise DecodeError("duration model is empty")
    if N < L + 1:
        raise InfeasibleError(
            f"{L} syllables need at least {L + 1} frames, ODF has {N}")
    check_duration_match(model, N, odf.hop_s)
    return L, N


def _lag_band(model: DurationModel, n_states: int, hop_s: float,
              k_sigmas: float | None) -> tuple[np.ndarray, np.ndarray]:
    L = len(model)
    lo = np.ones(L, dtype=np.int64)
    hi = np.full(L, n_states - 1, dtype=np.int64)
    if k_sigmas is None:
        return lo, hi
    for r, e in enumerate(model.entries):
        lo[r] = max(1, math.ceil((e.mu_s - k_sigmas * e.sigma_s) / hop_s - 1e-9))
        hi[r] = min(n_states - 1, math.floor((e.mu_s + k_sigmas * e.sigma_s) / hop_s + 1e-9))
    return lo, hi


def backtrack(psi: np.ndarray) -> list[int]:
    L, N = psi.shape
    states = [0] * (L + 1)
    states[L] = N - 1
    for r in range(L - 1, 0, -1):
        states[r] = int(psi[r, states[r + 1]])
    return states


def _decode(odf, model, opts: DecodeOptions, labels, phrase_id) -> BoundarySequence:
    L, N = _check_problem(odf, model)
    hop = odf.hop_s
    lo, hi = _lag_band(model, N, hop, opts.prune_sigmas)
    if np.any(lo > hi):
        bad = int(np.flatnonzero(lo > hi)[0]) + 1
        raise InfeasibleError(
            f"pruning band of {opts.prune_sigmas} sigma leaves no admissible duration "
            f"for syllable {bad}")
    lp = transition_table(model, N, hop)
    obs = log_observations(odf, opts.odf_floor)
    forward = _kernels.get_forward(opts.backend)

    t0 = time.perf_counter()
    delta, psi = forward(lp, obs, lo, hi)
    elapsed = time.perf_counter() - t0

    log_prob = float(delta[L - 1, N - 1])
    if log_prob == -np.inf:
        if opts.prune_sigmas is not None:
            raise InfeasibleError(
                f"no boundary path fits within a {opts.prune_sigmas} sigma pruning band")
        raise InfeasibleError(
            "every boundary path has zero probability (ODF zeros with odf_floor=0?)")
    states = backtrack(psi)
    if labels is not None and len(labels) != L:
        raise DecodeError(f"{len(labels)} labels for {L} syllables")
    result = BoundarySequence(
        onsets_s=[s * hop for s in states],
        state_indices=states,
        log_prob=log_prob,
        labels=list(labels) if labels is not None else None,
        phrase_id=phrase_id,
        hop_s=hop,
    )
    result.stats = {"forward_seconds": elapsed, "trellis": ViterbiTrellis(delta, psi)}
    return result


def viterbi_decode(odf: OnsetDetectionFunction, model: DurationModel,
                   opts: DecodeOptions | None = None, labels: Sequence[str] | None = None,
                   phrase_id: str = "") -> BoundarySequence:
    """Most likely boundary sequence for ``odf`` under the duration ``model``.

    Without pruning this is the exact optimum over all monotone sequences.
    Ties go to the smallest predecessor frame at every step.
    """
    return _decode(odf, model, opts or DecodeOptions(), labels, phrase_id)


def decode_with_pruning(odf: OnsetDetectionFunction, model: DurationModel,
                        band_halfwidth_sigmas: float, odf_floor: float = ODF_FLOOR,
                        labels: Sequence[str] | None = None, phrase_id: str = "",
                        backend: str | None = None) -> BoundarySequence:
    """Viterbi decoding restricted to durations within ``mu +/- k sigma``.

    ``result.stats`` reports the number of transitions evaluated with and
    without the band and their ratio (``work_speedup``).
    """
    if not band_halfwidth_sigmas >= 1:
        raise DecodeError(f"band half-width must be >= 1 sigma, got {band_halfwidth_sigmas}")
    opts = DecodeOptions(prune_sigmas=band_halfwidth_sigmas, odf_floor=odf_floor,
                         backend=backend)
    result = _decode(odf, model, opts, labels, phrase_id)
    L, N = len(model), len(odf)
    lo, hi = _lag_band(model, N, odf.hop_s, band_halfwidth_sigmas)
    full = _kernels.work_count(L, N, *_lag_band(model, N, odf.hop_s, None))
    pruned = _kernels.work_count(L, N, lo, hi)
    result.stats.update(transitions_full=full, transitions_pruned=pruned,
                        work_speedup=full / max(pruned, 1))
    return result


def path_score(odf: OnsetDetectionFunction, model: DurationModel,
               onset_state_indices: Sequence[int], odf_floor: float = ODF_FLOOR) -> float:
    """Log probability of one boundary path (frame indices, first 0, last N - 1).

    Terms are accumulated in the same order as the forward pass so that the
    score of a decoded path reproduces its ``log_prob`` exactly.
    """
    q = [int(x) for x in onset_state_indices]
    L, N = len(model), len(odf)
    if len(q) != L + 1:
        raise DecodeError(f"expected {L + 1} boundary states, got {len(q)}")
    if q[0] != 0 or q[-1] != N - 1:
        raise DecodeError(f"path must start at frame 0 and end at frame {N - 1}")
    if any(b <= a for a, b in zip(q, q[1:])):
        raise DecodeError("boundary states must be strictly increasing")
    obs = log_observations(odf, odf_floor)
    score = 0.0
    for l in range(1, L + 1):
        term = prior_log_density(model, l, (q[l] - q[l - 1]) * odf.hop_s)
        score = term if l == 1 else score + term
        if l < L:
            score = score + float(obs[q[l]])
    return score


def _combinations(lo: int, hi: int, k: int) -> np.ndarray:
    """All strictly increasing k-tuples from range(lo, hi), lexicographic order."""
    rows = np.zeros((1, 0), dtype=np.int64)
    for depth in range(k):
        start = rows[:, -1] + 1 if depth else np.full(rows.shape[0], lo)
        # leave room for the remaining k - depth - 1 entries
        stop = hi - (k - depth - 1)
        counts = np.maximum(stop - start, 0)
        rep = np.repeat(np.arange(rows.shape[0]), counts)
        offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        nxt = np.repeat(start, counts) + offsets
        rows = np.column_stack([rows[rep], nxt])
    return rows


def brute_force_decode(odf: OnsetDetectionFunction, model: DurationModel,
                       odf_floor: float = ODF_FLOOR,
                       max_paths: int | None = BRUTE_FORCE_MAX_PATHS) -> BoundarySequence:
    """Exhaustive search over every interior boundary assignment.

    Independent check of :func:`viterbi_decode`: no dynamic programming, each
    path is scored from scratch. Among exactly tied optima the path that is
    smallest when compared from the last boundary backwards wins, which is
    the choice the Viterbi backtrace makes.
    """
    L, N = _check_problem(odf, model)
    n_paths = comb(N - 2, L - 1)
    if max_paths is not None and n_paths > max_paths:
        raise DecodeError(f"{n_paths} candidate paths exceed the limit of {max_paths}")
    hop = odf.hop_s
    obs = log_observations(odf, odf_floor)
    priors = transition_table(model, N, hop)

    best_score = -np.inf
    best_path = None
    # chunk on the first interior boundary to bound memory
    firsts = range(1, N - L + 1) if L > 1 else [None]
    for first in firsts:
        if first is None:
            paths = np.zeros((1, 0), dtype=np.int64)
        else:
            rest = _combinations(first + 1, N - 1, L - 2)
            paths = np.column_stack([np.full(rest.shape[0], first), rest])
        full = np.column_stack([np.zeros(paths.shape[0], dtype=np.int64), paths,
                                np.full(paths.shape[0], N - 1)])
        lags = np.diff(full, axis=1)
        score = priors[0, lags[:, 0]]
        for l in range(1, L + 1):
            if l > 1:
                score = score + priors[l - 1, lags[:, l - 1]]
            if l < L:
                score = score + obs[full[:, l]]
        top = score.max()
        if top == -np.inf or top < best_score:
            continue
        tied = full[score == top]
        # np.lexsort keys: last key is primary, so q_1..q_{L-1} puts q_{L-1} first
        cand = tied[np.lexsort(tied[:, 1:L].T)[0]] if L > 1 else tied[0]
        if top > best_score or _reverse_lex_less(cand, best_path):
            best_score, best_path = float(top), cand

    if best_path is None:
        raise InfeasibleError("every boundary path has zero probability")
    states = [int(s) for s in best_path]
    return BoundarySequence([s * hop for s in states], states, best_score, hop_s=hop)


def _reverse_lex_less(a, b) -> bool:
    for x, y in zip(a[::-1], b[::-1]):
        if x != y:
            return x < y
    return False
