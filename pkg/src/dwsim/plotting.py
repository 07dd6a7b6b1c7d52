"""PNG renderings of traces. Documentation only; tests never read them."""

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_KILO = {"V": ("kV", 1e-3)}
_MAX_POINTS = 4000


def _minmax_decimate(t, y, buckets=_MAX_POINTS // 2):
    # keeps the visual envelope of carrier-rate traces with few vertices
    if len(y) <= _MAX_POINTS:
        return t, y
    n = len(y) // buckets * buckets
    tb = t[:n].reshape(buckets, -1)
    yb = y[:n].reshape(buckets, -1)
    tt = np.repeat(tb[:, 0], 2)
    yy = np.column_stack((yb.min(axis=1), yb.max(axis=1))).ravel()
    return tt, yy


def plot_trace(trace, path):
    unit, scale = _KILO.get(trace.ylabel, (trace.ylabel, 1.0))
    t, y = _minmax_decimate(np.asarray(trace.times), np.asarray(trace.values) * scale)
    fig, ax = plt.subplots(figsize=(8, 3.2), layout="constrained")
    ax.plot(t, y, lw=0.6)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(trace.header[1] if unit == "-" else f"{trace.header[1]} [{unit}]")
    ax.set_title(trace.title)
    ax.grid(True, alpha=0.3)
    fig.savefig(path, dpi=100)
    plt.close(fig)
    return path
