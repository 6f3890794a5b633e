"""Score-informed syllable segmentation of singing phrases."""
from ._kernels import BACKEND
from .decoder import (
    BoundarySequence,
    DecodeError,
    DecodeOptions,
    DurationMismatchError,
    InfeasibleError,
    brute_force_decode,
    decode_with_pruning,
    path_score,
    viterbi_decode,
)
from .evaluation import EvalConfig, EvalReport, ReferenceAnnotation, aggregate, deviation_report, evaluate
from .odf import OnsetDetectionFunction, load_odf, peak_pick, save_odf, smooth_odf, synth_odf
from .score_model import (
    DurationModel,
    Phrase,
    absolute_durations,
    build_duration_model,
    load_score,
    parse_score,
    prior_log_density,
)

__version__ = "0.1.0"
