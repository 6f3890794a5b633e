"""Randomised self-checks of the decoder against its brute-force oracle."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .decoder import (
    DecodeError,
    DecodeOptions,
    brute_force_decode,
    decode_with_pruning,
    path_score,
    viterbi_decode,
)
from .odf import OnsetDetectionFunction
from .score_model import build_duration_model


@dataclass
class CheckResult:
    name: str
    passed: int = 0
    failed: int = 0
    messages: list[str] = field(default_factory=list)

    def record(self, ok: bool, message: str = ""):
        if ok:
            self.passed += 1
        else:
            self.failed += 1
            if message and len(self.messages) < 5:
                self.messages.append(message)

    @property
    def ok(self) -> bool:
        return self.failed == 0


def random_instance(rng: np.random.Generator, n_range=(10, 60), l_range=(1, 6),
                    p_range=(0.01, 1.0), gamma=0.35, hop_s=0.01):
    """Random ODF plus a duration model whose total matches the ODF exactly."""
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    l = int(rng.integers(l_range[0], min(l_range[1], n - 1) + 1))
    odf = OnsetDetectionFunction(rng.uniform(*p_range, size=n), hop_s)
    weights = rng.uniform(0.5, 3.0, size=l)
    mus = list(weights / weights.sum() * odf.duration_s)
    mus[-1] = odf.duration_s - math.fsum(mus[:-1])
    return odf, build_duration_model(mus, gamma)


def check_oracle(n_instances: int, seed: int, gamma: float, odf_floor: float,
                 prune_sigmas: float | None) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    oracle = CheckResult("oracle equivalence")
    invariants = CheckResult("invariants")
    pruning = CheckResult(f"pruning equivalence (k={prune_sigmas})") if prune_sigmas else None
    for n in range(n_instances):
        odf, model = random_instance(rng, gamma=gamma)
        opts = DecodeOptions(odf_floor=odf_floor)
        try:
            got = viterbi_decode(odf, model, opts)
            ref = brute_force_decode(odf, model, odf_floor=odf_floor, max_paths=None)
        except DecodeError as exc:
            oracle.record(False, f"instance {n}: {exc}")
            continue
        oracle.record(got.state_indices == ref.state_indices
                      and abs(got.log_prob - ref.log_prob) <= 1e-9,
                      f"instance {n}: {got.state_indices} vs {ref.state_indices}")

        q = got.state_indices
        invariants.record(q[0] == 0 and q[-1] == len(odf) - 1, f"instance {n}: endpoints {q}")
        invariants.record(all(b > a for a, b in zip(q, q[1:])), f"instance {n}: not monotone")
        invariants.record(path_score(odf, model, q, odf_floor) == got.log_prob,
                          f"instance {n}: path_score differs from log_prob")
        inner = np.sort(rng.choice(np.arange(1, len(odf) - 1), size=len(model) - 1, replace=False))
        rand_path = [0, *inner.tolist(), len(odf) - 1]
        invariants.record(path_score(odf, model, rand_path, odf_floor) <= got.log_prob + 1e-12,
                          f"instance {n}: random path beats decoded path")

        if pruning is not None:
            try:
                pr = decode_with_pruning(odf, model, prune_sigmas, odf_floor=odf_floor)
                pruning.record(pr.state_indices == got.state_indices
                               and abs(pr.log_prob - got.log_prob) <= 1e-9,
                               f"instance {n}: pruned path differs")
            except DecodeError as exc:
                pruning.record(False, f"instance {n}: {exc}")
    return [r for r in (oracle, invariants, pruning) if r is not None]


def check_zero_observations(seed: int, gamma: float, odf_floor: float) -> CheckResult:
    """ODFs with exact zeros must still decode (needs a positive odf_floor)."""
    res = CheckResult("zero-valued ODF frames")
    rng = np.random.default_rng(seed + 1)
    for n in range(20):
        odf, model = random_instance(rng, l_range=(2, 5), gamma=gamma)
        values = odf.values.copy()
        values[1:-1] = 0.0 if n % 2 == 0 else values[1:-1] * (rng.random(len(odf) - 2) < 0.5)
        odf = OnsetDetectionFunction(values, odf.hop_s)
        try:
            got = viterbi_decode(odf, model, DecodeOptions(odf_floor=odf_floor))
            ref = brute_force_decode(odf, model, odf_floor=odf_floor, max_paths=None)
            res.record(abs(got.log_prob - ref.log_prob) <= 1e-9 and math.isfinite(got.log_prob),
                       f"case {n}: log_prob mismatch")
        except DecodeError as exc:
            res.record(False, f"case {n}: {exc}")
    return res


def run_selftest(n_instances: int = 200, seed: int = 0, gamma: float = 0.35,
                 odf_floor: float = 1e-10, prune_sigmas: float | None = 8.0) -> list[CheckResult]:
    results = check_oracle(n_instances, seed, gamma, odf_floor, prune_sigmas)
    results.append(check_zero_observations(seed, gamma, odf_floor))
    return results
