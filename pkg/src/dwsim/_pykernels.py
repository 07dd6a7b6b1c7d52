"""NumPy implementations of the inner loops, used when the extension is absent."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def sliding_mean(x, width):
    return sliding_window_view(x, width).sum(axis=1) / width


def block_mean(x, width):
    nblocks = x.shape[0] // width
    return x[: nblocks * width].reshape(nblocks, width).sum(axis=1) / width


def demod_block_mean(x, fs, freq, phase, t0, width):
    nblocks = x.shape[0] // width
    idx = np.arange(nblocks * width)
    t = t0 + idx / fs
    prod = 2.0 * x[: nblocks * width] * np.sin(2.0 * np.pi * freq * t + phase)
    return prod.reshape(nblocks, width).sum(axis=1) / width


def window_moments(s, r):
    if r.shape[0] != s.shape[0]:
        raise ValueError("length mismatch")
    return (
        float(s.sum()),
        float(r.sum()),
        float(np.dot(s, r)),
        float(np.dot(r, r)),
        float(np.dot(s, s)),
    )
