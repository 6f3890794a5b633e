import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from syllaseg.decoder import (
    DecodeError,
    DecodeOptions,
    DurationMismatchError,
    InfeasibleError,
    StateGrid,
    brute_force_decode,
    decode_with_pruning,
    path_score,
    viterbi_decode,
)
from syllaseg.odf import OnsetDetectionFunction
from syllaseg.score_model import build_duration_model
from syllaseg.selftest import random_instance


@pytest.fixture
def micro():
    """N = 4 states at t = 0, 1, 2, 3 s, two syllables with mu = 1 s and 2 s."""
    odf = OnsetDetectionFunction([0.5, 0.5, 0.5, 0.5], hop_s=1.0)
    return odf, build_duration_model([1.0, 2.0], 0.35)


def _hand_score(q1):
    # both interior candidates scored straight from the Gaussian pdf
    return (norm.logpdf(q1, 1.0, 0.35) + math.log(0.5)
            + norm.logpdf(3.0 - q1, 2.0, 0.70))


class TestMicroInstance:
    def test_enumeration(self):
        assert _hand_score(1.0) == pytest.approx(-1.12453, abs=1e-5)
        assert _hand_score(2.0) == pytest.approx(-6.22657, abs=1e-5)

    def test_decode(self, micro, backend):
        res = viterbi_decode(*micro, DecodeOptions(backend=backend))
        assert res.state_indices == [0, 1, 3]
        assert res.onsets_s == [0.0, 1.0, 3.0]
        assert res.log_prob == pytest.approx(_hand_score(1.0), abs=1e-12)

    def test_path_scores(self, micro):
        assert path_score(*micro, [0, 1, 3]) == pytest.approx(_hand_score(1.0), abs=1e-12)
        assert path_score(*micro, [0, 2, 3]) == pytest.approx(_hand_score(2.0), abs=1e-12)

    def test_brute_force_agrees(self, micro):
        a = viterbi_decode(*micro)
        b = brute_force_decode(*micro)
        assert a.state_indices == b.state_indices
        assert a.log_prob == b.log_prob


def test_single_syllable():
    odf = OnsetDetectionFunction(np.random.default_rng(0).random(50))
    model = build_duration_model([odf.duration_s])
    res = viterbi_decode(odf, model)
    assert res.onsets_s == [0.0, pytest.approx(0.49)]
    assert res.log_prob == pytest.approx(norm.logpdf(0.49, 0.49, 0.35 * 0.49), abs=1e-12)
    assert brute_force_decode(odf, model).state_indices == [0, 49]


def test_fig5_sized_phrase():
    rng = np.random.default_rng(5)
    odf = OnsetDetectionFunction(rng.uniform(0.01, 1, 558))
    w = rng.uniform(0.5, 2, 8)
    model = build_duration_model(list(w / w.sum() * odf.duration_s))
    res = viterbi_decode(odf, model, labels=[f"s{i}" for i in range(8)])
    assert len(res.onsets_s) == 9
    assert res.state_indices[0] == 0 and res.state_indices[-1] == 557
    assert res.labels == [f"s{i}" for i in range(8)]


def test_state_grid():
    g = StateGrid(5, 0.01)
    assert g.state_time(4) == pytest.approx(0.04)
    assert g.distance(1, 3) == pytest.approx(0.02)
    with pytest.raises(DecodeError):
        g.distance(3, 3)
    with pytest.raises(DecodeError):
        StateGrid(1, 0.01)


class TestErrors:
    def test_too_few_frames(self):
        odf = OnsetDetectionFunction([0.5, 0.5, 0.5])
        with pytest.raises(InfeasibleError, match="at least 4 frames"):
            viterbi_decode(odf, build_duration_model([0.01, 0.005, 0.005]))

    def test_duration_mismatch_error(self):
        odf = OnsetDetectionFunction(np.full(101, 0.5))
        with pytest.raises(DurationMismatchError, match="20%"):
            viterbi_decode(odf, build_duration_model([0.625, 0.625]))  # 25 % over

    def test_duration_mismatch_warning(self):
        odf = OnsetDetectionFunction(np.full(101, 0.5))
        with pytest.warns(UserWarning, match="mismatch"):
            viterbi_decode(odf, build_duration_model([0.55, 0.55]))

    def test_no_warning_when_matched(self):
        odf = OnsetDetectionFunction(np.full(101, 0.5))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            viterbi_decode(odf, build_duration_model([0.5, 0.5]))

    def test_wrong_label_count(self):
        odf = OnsetDetectionFunction(np.full(11, 0.5))
        with pytest.raises(DecodeError, match="labels"):
            viterbi_decode(odf, build_duration_model([0.05, 0.05]), labels=["a"])

    def test_zero_odf_without_floor(self):
        odf = OnsetDetectionFunction(np.r_[0.5, np.zeros(9), 0.5])
        model = build_duration_model([0.05, 0.05])
        assert math.isfinite(viterbi_decode(odf, model).log_prob)
        with pytest.raises(InfeasibleError, match="zero probability"):
            viterbi_decode(odf, model, DecodeOptions(odf_floor=0.0))

    @pytest.mark.parametrize("path", [[0, 5], [1, 5, 10], [0, 5, 9], [0, 6, 5, 10], [0, 5, 5, 10]])
    def test_path_score_rejects_malformed(self, path):
        odf = OnsetDetectionFunction(np.full(11, 0.5))
        model = build_duration_model([0.03, 0.03, 0.04]) if len(path) == 4 else build_duration_model([0.05, 0.05])
        with pytest.raises(DecodeError):
            path_score(odf, model, path)

    def test_brute_force_size_limit(self):
        odf = OnsetDetectionFunction(np.full(200, 0.5))
        with pytest.raises(DecodeError, match="exceed"):
            brute_force_decode(odf, build_duration_model([0.398] * 5))


def _oracle_by_itertools(odf, model):
    """Slow enumeration written independently of the decoder module."""
    n, L = len(odf), len(model)
    logp = np.log(np.maximum(odf.values, 1e-10))
    best = (-math.inf, None)
    for inner in itertools.combinations(range(1, n - 1), L - 1):
        q = (0, *inner, n - 1)
        s = sum(norm.logpdf((q[l] - q[l - 1]) * odf.hop_s, e.mu_s, e.sigma_s)
                for l, e in enumerate(model.entries, start=1))
        s += sum(logp[i] for i in inner)
        if s > best[0]:
            best = (s, list(q))
    return best


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_itertools_enumeration(seed):
    rng = np.random.default_rng(seed)
    odf, model = random_instance(rng, n_range=(6, 18), l_range=(1, 4))
    score, path = _oracle_by_itertools(odf, model)
    res = viterbi_decode(odf, model)
    assert res.state_indices == path
    assert res.log_prob == pytest.approx(score, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    odf, model = random_instance(rng, n_range=(10, 40), l_range=(1, 5))
    a = viterbi_decode(odf, model)
    b = brute_force_decode(odf, model)
    assert a.state_indices == b.state_indices
    assert abs(a.log_prob - b.log_prob) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_invariants(seed):
    rng = np.random.default_rng(seed)
    odf, model = random_instance(rng, n_range=(10, 200), l_range=(1, 10))
    res = viterbi_decode(odf, model)
    q = res.state_indices
    assert len(q) == len(model) + 1
    assert q[0] == 0 and q[-1] == len(odf) - 1
    assert all(b > a for a, b in zip(q, q[1:]))
    assert res.onsets_s[0] == 0.0
    assert res.onsets_s[-1] == pytest.approx(odf.duration_s)
    assert path_score(odf, model, q) == res.log_prob
    for _ in range(20):
        inner = np.sort(rng.choice(np.arange(1, len(odf) - 1), len(model) - 1, replace=False))
        assert path_score(odf, model, [0, *inner, len(odf) - 1]) <= res.log_prob


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_backends_bitwise_equal(seed):
    from syllaseg import _kernels
    if not _kernels.HAVE_COMPILED:
        pytest.skip("compiled kernel not built")
    rng = np.random.default_rng(seed)
    odf, model = random_instance(rng, n_range=(10, 300), l_range=(1, 12))
    a = viterbi_decode(odf, model, DecodeOptions(backend="python"))
    b = viterbi_decode(odf, model, DecodeOptions(backend="cython"))
    ta, tb = a.stats["trellis"], b.stats["trellis"]
    assert np.array_equal(ta.delta, tb.delta) and np.array_equal(ta.psi, tb.psi)
    assert a.state_indices == b.state_indices and a.log_prob == b.log_prob


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_observation_scaling(seed):
    rng = np.random.default_rng(seed)
    odf, model = random_instance(rng, n_range=(10, 120), l_range=(1, 8))
    c = 0.25
    scaled = OnsetDetectionFunction(odf.values * c, odf.hop_s)
    a, b = viterbi_decode(odf, model), viterbi_decode(scaled, model)
    assert a.state_indices == b.state_indices
    assert abs(b.log_prob - a.log_prob - (len(model) - 1) * math.log(c)) <= 1e-9


class TestFlatOdf:
    def test_on_grid_boundaries_recovered_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            frames = rng.integers(5, 80, size=int(rng.integers(1, 9)))
            odf = OnsetDetectionFunction(np.full(frames.sum() + 1, 0.3))
            model = build_duration_model(list(frames * 0.01))
            res = viterbi_decode(odf, model)
            assert res.state_indices == [0, *np.cumsum(frames).tolist()]

    def test_off_grid_optimum_can_drift_past_one_frame(self):
        # three short equal syllables of 9.57 frames: whole-frame durations
        # [10, 10, 10, 37] beat per-boundary rounding [10, 9, 10, 38]
        odf = OnsetDetectionFunction(np.full(68, 0.5))
        mus = [0.0957, 0.0957, 0.0957, 0.3829]
        model = build_duration_model(mus)
        res = viterbi_decode(odf, model)
        ref = brute_force_decode(odf, model)
        assert res.log_prob == pytest.approx(ref.log_prob, abs=1e-12)
        assert res.state_indices == [0, 10, 20, 30, 67]
        cum = np.cumsum([0.0, *mus]) / 0.01
        assert np.max(np.abs(np.array(res.state_indices) - cum)) > 1.0
        assert path_score(odf, model, [0, 10, 19, 29, 67]) < res.log_prob


class TestPruning:
    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_k8_matches_unpruned(self, seed):
        rng = np.random.default_rng(seed)
        odf, model = random_instance(rng, n_range=(10, 150), l_range=(1, 8))
        a = viterbi_decode(odf, model)
        b = decode_with_pruning(odf, model, 8.0)
        assert a.state_indices == b.state_indices
        assert abs(a.log_prob - b.log_prob) <= 1e-9
        assert b.stats["transitions_pruned"] <= b.stats["transitions_full"]

    def test_wide_band_bitwise_identical_trellis(self, backend):
        rng = np.random.default_rng(4)
        odf, model = random_instance(rng, n_range=(60, 60), l_range=(5, 5))
        a = viterbi_decode(odf, model, DecodeOptions(backend=backend))
        b = decode_with_pruning(odf, model, 1e6, backend=backend)
        assert np.array_equal(a.stats["trellis"].delta, b.stats["trellis"].delta)
        assert np.array_equal(a.stats["trellis"].psi, b.stats["trellis"].psi)
        assert b.stats["work_speedup"] == 1.0

    def test_tight_band_infeasible(self):
        # score says 3 x 0.87 s, the performance lasts 3 x 1.0 s: each syllable
        # runs 3 sigma long at gamma = 0.05, outside a 1-sigma band
        odf = OnsetDetectionFunction(np.full(301, 0.5))
        model = build_duration_model([0.87, 0.87, 0.87], gamma=0.05)
        with pytest.warns(UserWarning):
            assert len(viterbi_decode(odf, model).state_indices) == 4
        with pytest.warns(UserWarning), pytest.raises(InfeasibleError, match="pruning band"):
            decode_with_pruning(odf, model, 1.0)

    def test_band_below_one_sigma_rejected(self):
        odf = OnsetDetectionFunction(np.full(11, 0.5))
        with pytest.raises(DecodeError):
            decode_with_pruning(odf, build_duration_model([0.1]), 0.5)

    def test_speedup_reported_on_long_phrase(self):
        rng = np.random.default_rng(9)
        odf = OnsetDetectionFunction(rng.uniform(0.01, 1, 3001))
        model = build_duration_model([3.0] * 10)
        res = decode_with_pruning(odf, model, 6.0)
        assert res.stats["work_speedup"] > 1.0
        assert res.state_indices == viterbi_decode(odf, model).state_indices
