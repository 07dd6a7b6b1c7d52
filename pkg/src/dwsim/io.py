"""Flat-file formats: two-column trace CSVs and the verdict CSV.

Floats are written with ``repr`` (shortest round-trip form, at least as
precise as 17 significant digits), so reading a file back is lossless and
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import ParameterError

SIGNAL_HEADER = ("t_s", "value")
PSD_HEADER = ("f_hz", "psd")
ENVELOPE_HEADER = ("t_s", "envelope_v")
ENVELOPE_NORM_HEADER = ("t_s", "envelope_norm")
VERDICT_HEADER = (
    "t0_s",
    "d_w",
    "reported_mean_ratio",
    "variance_ratio",
    "decision",
    "fault_flag",
    "classification",
)


def format_columns(header, *columns) -> str:
    cols = [np.asarray(c, dtype=np.float64).tolist() for c in columns]
    if len({len(c) for c in cols}) > 1:
        raise ParameterError("columns differ in length")
    fmt = ",".join(["{!r}"] * len(cols))
    rows = map(fmt.format, *cols)
    return ",".join(header) + "\n" + "".join(r + "\n" for r in rows)


def write_columns(path, header, *columns):
    path = Path(path)
    path.write_text(format_columns(header, *columns), encoding="ascii")
    return path


def read_columns(path):
    """Return ``(header, [column arrays])`` from a numeric CSV."""
    path = Path(path)
    with path.open(newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise ParameterError(f"{path}: empty file") from None
        rows = [row for row in reader if row]
    if not rows:
        return header, [np.empty(0) for _ in header]
    try:
        data = np.array(rows, dtype=np.float64)
    except ValueError as exc:
        raise ParameterError(f"{path}: non-numeric data ({exc})") from None
    if data.shape[1] != len(header):
        raise ParameterError(f"{path}: {data.shape[1]} columns but header has {len(header)}")
    return header, [data[:, i] for i in range(data.shape[1])]


def read_trace(path):
    """Read a two-column ``t_s,<value>`` CSV; returns ``(times, values, sample_rate_hz)``."""
    header, cols = read_columns(path)
    if len(cols) != 2 or header[0] != "t_s":
        raise ParameterError(f"{path}: expected a 't_s,<value>' trace, got header {header}")
    t, v = cols
    if len(t) < 2:
        raise ParameterError(f"{path}: need at least two samples")
    dt = np.diff(t)
    step = float(np.median(dt))
    if step <= 0 or np.max(np.abs(dt - step)) > 1e-6 * step:
        raise ParameterError(f"{path}: samples are not uniformly spaced")
    return t, v, 1.0 / step


def write_verdict(path, t0_s, verdict):
    from .controller import classify

    fields = (
        repr(float(t0_s)),
        repr(verdict.d_w),
        repr(verdict.reported_mean_ratio),
        repr(verdict.variance_ratio),
        verdict.decision.value,
        "true" if verdict.fault_flag else "false",
        classify(verdict).value,
    )
    text = ",".join(VERDICT_HEADER) + "\n" + ",".join(fields) + "\n"
    path = Path(path)
    path.write_text(text, encoding="ascii")
    return path
