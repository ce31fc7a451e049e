"""Exact Heisenberg lattice convolution.

In index form ``x^{-1} y = (j1-i1, j2-i2, l-k-(i1*j2-i2*j1))``, so for fixed
first-layer offsets the center sum is an ordinary 1-D convolution shifted by
an integer twist.  Zero-padded FFTs along the center axis turn each shift
into a phase; the padding is long enough that nothing wraps into the kept
window, so the result equals the direct double sum up to rounding.
"""
from __future__ import annotations

import os

import numba
import numpy as np
import scipy.fft as sfft

if "NUMBA_THREADING_LAYER" not in os.environ:
    # the bundled TBB is too old; OpenMP is also safe under concurrent Python threads
    numba.config.THREADING_LAYER = "omp"


@numba.njit(cache=True, parallel=True)
def _twisted_sum(F, G, A, M, out):
    off = 2 * M * M
    P = F.shape[2]
    for a in numba.prange(2 * M + 1):
        j1 = a - M
        for j2 in range(-M, M + 1):
            o = out[j1 + M, j2 + M]
            for d1 in range(max(-M, j1 - M), min(M, j1 + M) + 1):
                for d2 in range(max(-M, j2 - M), min(M, j2 + M) + 1):
                    t = j1 * d2 - j2 * d1 + off
                    fr = F[j1 - d1 + M, j2 - d2 + M]
                    g = G[d1 + M, d2 + M]
                    ph = A[t]
                    for w in range(P):
                        o[w] += fr[w] * g[w] * ph[w]


def heisenberg_convolve(f: np.ndarray, g: np.ndarray, M: int, K: int) -> np.ndarray:
    """Unweighted sum ``sum_x f(x) g(x^{-1} y)`` on the ``(2M+1, 2M+1, 2K+1)`` box."""
    P = sfft.next_fast_len(3 * K + 2 * M * M + 1)
    F = sfft.fft(np.asarray(f, complex), n=P, axis=2)
    G = sfft.fft(np.asarray(g, complex), n=P, axis=2)
    om = 2 * np.pi * np.fft.fftfreq(P)
    tw = np.arange(-2 * M * M, 2 * M * M + 1)
    A = np.exp(-1j * np.outer(tw, om))
    out = np.zeros_like(F)
    _twisted_sum(F, G, A, M, out)
    return sfft.ifft(out, axis=2)[:, :, K:3 * K + 1]
