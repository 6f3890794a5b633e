"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal
failure (including a failed self-test).
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import _kernels
from .config import ConfigError, RunConfig, load_config
from .decoder import DecodeError, DecodeOptions, viterbi_decode
from .evaluation import (
    EvalConfig,
    EvaluationError,
    aggregate,
    evaluate,
    format_table,
    load_annotation,
)
from .features import AudioError, format_logmel_csv, logmel_spectrogram, read_wav, standardize
from .odf import DistractorSpec, ODFError, load_odf, peak_pick, save_odf, smooth_odf, synth_odf, write_atomic
from .score_model import ScoreError, absolute_durations, build_duration_model, load_score

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DATA_ERRORS = (ScoreError, ODFError, DecodeError, EvaluationError, AudioError, ConfigError,
               FileNotFoundError, IsADirectoryError, NotADirectoryError, UnicodeDecodeError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _write_json(path, doc):
    write_atomic(path, json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def _pairs(first: Path, second: Path, first_glob: str, second_suffix: str):
    """Match files in two directories by stem, or pass through a single pair."""
    if first.is_dir() != second.is_dir():
        raise UsageError("inputs must be both files or both directories")
    if not first.is_dir():
        return [(first, second)]
    pairs = []
    for f in sorted(first.glob(first_glob)):
        partner = second / (f.stem + second_suffix)
        if not partner.exists():
            raise FileNotFoundError(f"no counterpart for {f.name}: {partner} missing")
        pairs.append((f, partner))
    if not pairs:
        raise FileNotFoundError(f"no {first_glob} files in {first}")
    return pairs


def _out_path(out, src: Path, suffix: str, batch: bool) -> Path | None:
    if out is None:
        return None
    out = Path(out)
    if batch:
        out.mkdir(parents=True, exist_ok=True)
        return out / (src.stem + suffix)
    return out


def _map(fn, jobs, items):
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# -- features ---------------------------------------------------------------

def _features_one(args):
    audio_path, out_path, raw = args
    x, sr = read_wav(audio_path)
    spec = logmel_spectrogram(x, sr)
    if not raw:
        spec = standardize(spec)
    text = format_logmel_csv(spec)
    if out_path is None:
        sys.stdout.write(text)
    else:
        write_atomic(out_path, text)
    return len(spec)


def cmd_features(ns, cfg: RunConfig) -> int:
    src = Path(ns.audio)
    files = sorted(src.glob("*.wav")) if src.is_dir() else [src]
    if src.is_dir() and not files:
        raise FileNotFoundError(f"no .wav files in {src}")
    items = [(f, _out_path(ns.out, f, ".csv", src.is_dir()), ns.raw) for f in files]
    counts = _map(_features_one, ns.jobs, items)
    if ns.out is not None:
        for f, n in zip(files, counts):
            print(f"{f.name}: {n} frames", file=sys.stderr)
    return EXIT_OK


# -- decode -----------------------------------------------------------------

def decode_files(odf_path, score_path, cfg: RunConfig, smooth: bool = True):
    odf = load_odf(odf_path)
    if smooth:
        odf = smooth_odf(odf)
    phrase = load_score(score_path)
    model = build_duration_model(absolute_durations(phrase, odf.duration_s), cfg.gamma)
    opts = DecodeOptions(prune_sigmas=cfg.prune_sigmas, odf_floor=cfg.odf_floor)
    return viterbi_decode(odf, model, opts, labels=phrase.labels, phrase_id=phrase.phrase_id)


def _decode_one(args):
    odf_path, score_path, out_path, cfg, smooth = args
    result = decode_files(odf_path, score_path, cfg, smooth)
    doc = result.to_json()
    if out_path is None:
        print(json.dumps(doc, ensure_ascii=False))
    else:
        _write_json(out_path, doc)
    return doc


def cmd_decode(ns, cfg: RunConfig) -> int:
    odf_src, score_src = Path(ns.odf), Path(ns.score)
    pairs = _pairs(odf_src, score_src, "*.csv", ".json")
    batch = odf_src.is_dir()
    items = [(o, s, _out_path(ns.out, o, ".json", batch), cfg, not ns.no_smooth) for o, s in pairs]
    _map(_decode_one, ns.jobs, items)
    return EXIT_OK


# -- eval -------------------------------------------------------------------

def cmd_eval(ns, cfg: RunConfig) -> int:
    det_src, ref_src = Path(ns.detected), Path(ns.reference)
    pairs = _pairs(det_src, ref_src, "*.json", ".json")
    ecfg = EvalConfig(tau_s=cfg.tau_s)
    reports = []
    for det_path, ref_path in pairs:
        rep = evaluate(load_annotation(det_path), load_annotation(ref_path), ecfg)
        if not rep.phrase_id:
            rep.phrase_id = det_path.stem
        reports.append(rep)
    total = aggregate(reports) if len(reports) > 1 else None
    print(format_table(reports, total))
    if ns.out is not None:
        doc = {"phrases": [r.to_json() for r in reports],
               "total": (total or reports[0]).to_json(), "tau_s": cfg.tau_s}
        _write_json(ns.out, doc)
    return EXIT_OK


# -- synth ------------------------------------------------------------------

def cmd_synth(ns, cfg: RunConfig) -> int:
    ann = load_annotation(ns.annotation)
    onsets, total = ann.onsets_s[:-1], ann.onsets_s[-1]
    lo, hi = ns.distractor_amp
    spec = DistractorSpec(ns.distractors, (lo, hi), cfg.seed)
    odf = synth_odf(onsets, total, cfg.hop_s, spec, ns.noise)
    if ns.out is None:
        print(f"# hop_s={odf.hop_s!r}")
        print("\n".join(repr(float(x)) for x in odf.values))
    else:
        save_odf(odf, ns.out)
    return EXIT_OK


# -- peaks ------------------------------------------------------------------

def cmd_peaks(ns, cfg: RunConfig) -> int:
    odf = load_odf(ns.odf)
    if not ns.no_smooth:
        odf = smooth_odf(odf)
    times = peak_pick(odf, ns.threshold, ns.min_separation)
    doc = {"threshold": ns.threshold, "min_separation_s": ns.min_separation, "onsets_s": times}
    if ns.out is None:
        print(json.dumps(doc))
    else:
        _write_json(ns.out, doc)
    return EXIT_OK


# -- selftest ---------------------------------------------------------------

def cmd_selftest(ns, cfg: RunConfig) -> int:
    from .selftest import run_selftest

    prune = cfg.prune_sigmas if cfg.prune_sigmas is not None else 8.0
    print(f"kernel backend: {_kernels.BACKEND}")
    results = run_selftest(ns.instances, cfg.seed, cfg.gamma, cfg.odf_floor, prune)
    for r in results:
        status = "PASS" if r.ok else "FAIL"
        print(f"{status} {r.name}: {r.passed} passed, {r.failed} failed")
        for m in r.messages:
            print(f"    {m}")
    return EXIT_OK if all(r.ok for r in results) else EXIT_INTERNAL


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat JSON config file")
    common.add_argument("--gamma", type=float, help="duration prior std/mean ratio (0.35)")
    common.add_argument("--tau", dest="tau_s", type=float, help="onset tolerance in s (0.05)")
    common.add_argument("--hop", dest="hop_s", type=float, help="frame hop in s for synth (0.01)")
    common.add_argument("--prune-sigmas", dest="prune_sigmas", type=float,
                        help="restrict durations to mu +/- k sigma")
    common.add_argument("--odf-floor", dest="odf_floor", type=float,
                        help="floor applied to ODF values before log (1e-10)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output file (or directory in batch mode)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for batch input")

    p = _Parser(prog="syllaseg", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("features", parents=[common], help="WAV -> log-mel CSV")
    s.add_argument("audio", help="mono 44.1 kHz WAV file or directory")
    s.add_argument("--raw", action="store_true", help="skip per-band standardization")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("decode", parents=[common], help="ODF + score -> boundary JSON")
    s.add_argument("odf", help="ODF CSV file or directory")
    s.add_argument("score", help="score JSON file or directory")
    s.add_argument("--no-smooth", action="store_true", help="decode the raw ODF")
    s.set_defaults(func=cmd_decode)

    s = sub.add_parser("eval", parents=[common], help="score detected boundaries")
    s.add_argument("detected", help="boundary JSON file or directory")
    s.add_argument("reference", help="reference annotation JSON file or directory")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", parents=[common], help="annotation -> synthetic ODF CSV")
    s.add_argument("annotation", help="reference annotation JSON")
    s.add_argument("--distractors", type=int, default=0, help="number of spurious peaks")
    s.add_argument("--distractor-amp", type=float, nargs=2, default=(0.5, 0.9),
                   metavar=("LO", "HI"))
    s.add_argument("--noise", type=float, default=0.0, help="uniform noise ceiling")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("peaks", parents=[common], help="peak-picking baseline")
    s.add_argument("odf", help="ODF CSV file")
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--min-separation", type=float, default=0.05, help="seconds")
    s.add_argument("--no-smooth", action="store_true")
    s.set_defaults(func=cmd_peaks)

    s = sub.add_parser("selftest", parents=[common], help="oracle and invariant checks")
    s.add_argument("--instances", type=int, default=200)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    overrides = {k: getattr(ns, k) for k in
                 ("gamma", "tau_s", "hop_s", "prune_sigmas", "odf_floor", "seed")}
    try:
        if ns.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        cfg = load_config(ns.config, overrides)
        return ns.func(ns, cfg)
    except UsageError as exc:
        print(f"syllaseg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"syllaseg: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"syllaseg: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
