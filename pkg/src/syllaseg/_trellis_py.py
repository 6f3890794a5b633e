"""Pure numpy forward pass of the duration-informed Viterbi trellis.

Reference for (and fallback of) the compiled ``_trellis`` extension. Inputs:

lp : (L, N) float64
    ``lp[r, k]`` is the log prior of syllable ``r + 1`` lasting ``k`` frames.
obs : (N,) float64
    Log observation probability of each frame.
lo, hi : (L,) int64
    Inclusive lag band allowed for each syllable.

Row ``r < L - 1`` of ``delta`` holds the best log score of a path whose
``r + 1``-th boundary sits on frame ``j``; the last row is only filled at
``j = N - 1`` and carries no observation term. ``psi`` holds predecessor
frames, -1 where unreachable.
"""
import numpy as np


def _level_bounds(r, L, N):
    if r == L - 1:
        return N - 1, N - 1
    return r + 1, N - L + r


def forward(lp, obs, lo, hi):
    L, N = lp.shape
    delta = np.full((L, N), -np.inf)
    psi = np.full((L, N), -1, dtype=np.int64)

    for r in range(L):
        j_lo, j_hi = _level_bounds(r, L, N)
        if r == 0:
            j = np.arange(max(j_lo, lo[0]), min(j_hi, hi[0]) + 1)
            best = lp[0, j]
            if L > 1:
                best = best + obs[j]
            delta[0, j] = best
            psi[0, j] = 0
            continue

        prev = delta[r - 1]
        row = lp[r]
        for j in range(j_lo, j_hi + 1):
            a = max(j - hi[r], r)
            b = min(j - lo[r], j - 1)
            if b < a:
                continue
            # candidates for i = a..b, lag j - i runs from j - a down to j - b
            cand = prev[a:b + 1] + row[j - b:j - a + 1][::-1]
            k = int(np.argmax(cand))
            best = cand[k]
            if best == -np.inf:
                continue
            if r < L - 1:
                best = best + obs[j]
            delta[r, j] = best
            psi[r, j] = a + k
    return delta, psi


def work_count(L, N, lo, hi):
    total = 0
    for r in range(L):
        j_lo, j_hi = _level_bounds(r, L, N)
        if r == 0:
            total += max(0, min(j_hi, hi[0]) - max(j_lo, lo[0]) + 1)
            continue
        for j in range(j_lo, j_hi + 1):
            a = max(j - hi[r], r)
            b = min(j - lo[r], j - 1)
            total += max(0, b - a + 1)
    return total
