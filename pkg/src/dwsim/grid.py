"""Line voltage synthesis, watermark modulation and operating-constraint checks."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .signals import NoiseSpec, SampledSignal, sample_count, time_axis

GRID_FREQ_BAND_HZ = (59.7, 60.3)
MAX_WATERMARK_BANDWIDTH_HZ = 0.3
DEFAULT_DEPTH_LIMIT = 0.01


@dataclass(frozen=True)
class GridParams:
    """Ideal single-phase line: ``a0 * sin(2*pi*f_g*t + phi0)``, ``a0`` in peak volts."""

    a0_peak_v: float
    f_g_hz: float = 60.0
    phi0_rad: float = 0.0
    strict: bool = True

    def __post_init__(self):
        if not self.a0_peak_v > 0:
            raise ParameterError(f"a0_peak_v must be > 0, got {self.a0_peak_v}")
        lo, hi = GRID_FREQ_BAND_HZ
        if not lo <= self.f_g_hz <= hi:
            msg = f"grid frequency {self.f_g_hz} Hz outside allowable band [{lo}, {hi}] Hz"
            if self.strict:
                raise ParameterError(msg)
            warnings.warn(msg, stacklevel=3)

    @classmethod
    def from_rms(cls, a0_rms_v, f_g_hz=60.0, phi0_rad=0.0, strict=True):
        return cls(a0_rms_v * math.sqrt(2.0), f_g_hz, phi0_rad, strict)

    @property
    def a0_rms_v(self):
        return self.a0_peak_v / math.sqrt(2.0)

    def phase(self, t):
        return 2.0 * np.pi * self.f_g_hz * t + self.phi0_rad


def _check_rate(g, fs):
    if not fs > 2 * g.f_g_hz:
        raise ParameterError(f"sample rate {fs} Hz is below Nyquist for {g.f_g_hz} Hz")


def synth_line_voltage(g: GridParams, duration_s: float, fs: float) -> SampledSignal:
    if not duration_s > 0:
        raise ParameterError(f"duration must be > 0, got {duration_s}")
    _check_rate(g, fs)
    n = sample_count(duration_s, fs)
    return SampledSignal(g.a0_peak_v * np.sin(g.phase(time_axis(n, fs))), fs)


def apply_watermark_modulation(g, n_w, n_p, duration_s, fs) -> SampledSignal:
    """``a0 * (1 + n_w + n_p) * sin(...)``; ``n_p=None`` is the parasitic-free case."""
    if not duration_s > 0:
        raise ParameterError(f"duration must be > 0, got {duration_s}")
    _check_rate(g, fs)
    n = sample_count(duration_s, fs)
    for name, x in (("n_w", n_w), ("n_p", n_p)):
        if x is None:
            continue
        if len(x) != n or x.sample_rate_hz != fs:
            raise ParameterError(
                f"{name} has {len(x)} samples at {x.sample_rate_hz} Hz; expected {n} at {fs} Hz"
            )
    envelope = 1.0 + n_w.samples
    if n_p is not None:
        envelope = envelope + n_p.samples
    return SampledSignal(g.a0_peak_v * envelope * np.sin(g.phase(time_axis(n, fs))), fs)


def check_modulation_depth(n_w, n_p=None, limit=DEFAULT_DEPTH_LIMIT) -> bool:
    """True iff the mean square of the total modulation is within ``limit``."""
    total = n_w.samples if n_p is None else n_w.samples + n_p.samples
    return bool(np.mean(total * total) <= limit)


def check_bandwidth_rule(spec: NoiseSpec, max_bandwidth_hz=MAX_WATERMARK_BANDWIDTH_HZ) -> bool:
    return spec.bandwidth_hz <= max_bandwidth_hz
