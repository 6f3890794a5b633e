"""Compare the compiled and numpy trellis kernels, with and without pruning.

    python benchmarks/bench_trellis.py [--repeat 3] [--sizes 500 1000 3000 6000]
"""
import argparse
import time

import numpy as np

from syllaseg import _kernels
from syllaseg.decoder import DecodeOptions, viterbi_decode
from syllaseg.odf import OnsetDetectionFunction
from syllaseg.score_model import build_duration_model


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 1000, 3000, 6000])
    ap.add_argument("--syllables", type=int, nargs="+", default=[5, 10, 20])
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if _kernels.HAVE_COMPILED else [])
    if not _kernels.HAVE_COMPILED:
        print("compiled kernel unavailable: timing numpy only")
    rng = np.random.default_rng(0)
    header = f"{'N':>6} {'L':>4} " + " ".join(f"{b + ' full':>13} {b + ' k=8':>13}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    for n in args.sizes:
        odf = OnsetDetectionFunction(rng.uniform(0.01, 1.0, n))
        for L in args.syllables:
            if L + 1 > n:
                continue
            w = rng.uniform(0.5, 2.0, L)
            model = build_duration_model(list(w / w.sum() * odf.duration_s))
            row = f"{n:>6} {L:>4} "
            full = {}
            for b in backends:
                full[b] = best_of(lambda: viterbi_decode(odf, model, DecodeOptions(backend=b)), args.repeat)
                pruned = best_of(lambda: viterbi_decode(
                    odf, model, DecodeOptions(prune_sigmas=8.0, backend=b)), args.repeat)
                row += f"{full[b]:>12.4f}s {pruned:>12.4f}s "
            if len(backends) == 2:
                row += f"{full['python'] / full['cython']:>7.1f}x"
            print(row)


if __name__ == "__main__":
    main()
