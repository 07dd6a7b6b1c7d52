"""Kernel backend selection.

The compiled module ``dwsim._ckernels`` is used when it was built; otherwise
the NumPy versions in ``dwsim._pykernels`` are loaded. Set ``DWSIM_KERNELS``
to ``python`` to force the fallback (e.g. for benchmarking).
"""

import os

import numpy as np

from . import _pykernels

_forced = os.environ.get("DWSIM_KERNELS", "").lower()

if _forced == "python":
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _pykernels
        BACKEND = "python"


def available_backends():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names


def get_backend(name):
    """Return the kernel module for ``name`` ('cython' or 'python')."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")


def _as_f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def sliding_mean(x, width):
    """Causal boxcar: ``out[i] = mean(x[i:i+width])``; length ``len(x)-width+1``."""
    x = _as_f64(x)
    if not 1 <= int(width) <= x.shape[0]:
        raise ValueError(f"width {width} outside [1, {x.shape[0]}]")
    return _impl.sliding_mean(x, int(width))


def block_mean(x, width):
    """Means of consecutive non-overlapping blocks; a trailing partial block is dropped."""
    if int(width) < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    return _impl.block_mean(_as_f64(x), int(width))


def demod_block_mean(x, fs, freq, phase, t0, width):
    """Block means of ``2*x*sin(2*pi*freq*t + phase)`` without materializing the product."""
    if int(width) < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    return _impl.demod_block_mean(
        _as_f64(x), float(fs), float(freq), float(phase), float(t0), int(width)
    )


def window_moments(s, r):
    """One-pass sums (s, r, s*r, r*r, s*s) used by the detectors."""
    return _impl.window_moments(_as_f64(s), _as_f64(r))


def set_backend(name):
    """Switch the active backend for this process (benchmarks, tests)."""
    global _impl, BACKEND
    _impl = get_backend(name)
    BACKEND = name
