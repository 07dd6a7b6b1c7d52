"""Controller-side watermark checks.

The cross-correlation statistic subtracts the reference level ``R`` from the
report before correlating with the private watermark, and normalizes by
``R * <N_w^2>``::

    D_w = <(S - R) * N_w>_T0 / (R * <N_w^2>)

so a report carrying the watermark scores 1 and a watermark-free report 0.
``R`` is the nominal ``a0`` or the mean of the report over the window.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegenerateInputError, ParameterError
from .sensor import EnvelopeSeries
from .signals import SampledSignal


class Normalization(str, enum.Enum):
    NOMINAL_A0 = "nominal_a0"
    REPORTED_MEAN = "reported_mean"


class Decision(str, enum.Enum):
    WATERMARK_PRESENT = "WATERMARK_PRESENT"
    ATTACK_SUSPECTED = "ATTACK_SUSPECTED"


class Classification(str, enum.Enum):
    NO_ATTACK = "NO_ATTACK"
    ATTACK = "ATTACK"
    FAULT_SUSPECTED = "FAULT_SUSPECTED"


@dataclass(frozen=True)
class DetectorConfig:
    t0_s: float = 60.0
    threshold: float = 0.5
    normalization: Normalization = Normalization.REPORTED_MEAN
    expected_nw_ms: float = 0.09
    fault_band: tuple = (0.95, 1.05)
    # <(N_w + N_p)^2> the variance test expects; None skips the test in verdicts.
    expected_total_ms: float | None = None
    variance_band: tuple = (0.6, 1.4)

    def __post_init__(self):
        if not self.t0_s > 0:
            raise ParameterError(f"t0_s must be > 0, got {self.t0_s}")
        if not 0 < self.threshold < 1:
            raise ParameterError(f"threshold must be in (0, 1), got {self.threshold}")
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        lo, hi = self.fault_band
        if not lo < hi:
            raise ParameterError(f"fault_band must be increasing, got {self.fault_band}")
        lo, hi = self.variance_band
        if not 0 <= lo < hi:
            raise ParameterError(f"variance_band must be increasing, got {self.variance_band}")


@dataclass(frozen=True)
class DetectorVerdict:
    d_w: float
    reported_mean_ratio: float
    decision: Decision
    fault_flag: bool
    variance_ratio: float = math.nan

    @property
    def classification(self):
        return classify(self)


def _window(n_total, rate_hz, t0_s):
    n = int(round(t0_s * rate_hz))
    if n < 2:
        raise ParameterError(f"averaging time {t0_s} s spans fewer than 2 reports")
    if n > n_total:
        raise ParameterError(
            f"averaging time {t0_s} s needs {n} reports, only {n_total} available"
        )
    return slice(n_total - n, n_total)


def _reference_level(mean_s, cfg, a0):
    r = a0 if cfg.normalization is Normalization.NOMINAL_A0 else mean_s
    if r == 0:
        raise DegenerateInputError("reference level is zero")
    return r


def crosscorr_detect(s: EnvelopeSeries, n_w_ref: SampledSignal, cfg: DetectorConfig, a0: float) -> DetectorVerdict:
    """Correlate the last ``cfg.t0_s`` seconds of the report with the private watermark.

    ``n_w_ref`` must already be on the report grid (same rate and length), e.g.
    from :func:`dwsim.sensor.matched_reference`.
    """
    if len(n_w_ref) != len(s) or n_w_ref.sample_rate_hz != s.rate_hz:
        raise ParameterError("reference must share the report's rate and length")
    if not cfg.expected_nw_ms > 0:
        raise DegenerateInputError(f"expected_nw_ms must be > 0, got {cfg.expected_nw_ms}")
    w = _window(len(s), s.rate_hz, cfg.t0_s)
    sv = s.values_v[w]
    rv = n_w_ref.samples[w]
    n = sv.shape[0]
    sum_s, sum_r, sum_sr, _, sum_ss = kernels.window_moments(sv, rv)
    mean_s = sum_s / n
    r_hat = _reference_level(mean_s, cfg, a0)
    d_w = (sum_sr / n - r_hat * sum_r / n) / (r_hat * cfg.expected_nw_ms)
    ratio = mean_s / a0
    if cfg.expected_total_ms is None:
        var_ratio = math.nan
    else:
        var_ratio = _variance_ratio(sum_s, sum_ss, n, r_hat, cfg.expected_total_ms)
    lo, hi = cfg.fault_band
    return DetectorVerdict(
        d_w=float(d_w),
        reported_mean_ratio=float(ratio),
        decision=Decision.ATTACK_SUSPECTED if d_w < cfg.threshold else Decision.WATERMARK_PRESENT,
        fault_flag=not lo <= ratio <= hi,
        variance_ratio=var_ratio,
    )


def _variance_ratio(sum_s, sum_ss, n, r_hat, expected_total_ms):
    mean = sum_s / n
    var = max(sum_ss / n - mean * mean, 0.0)
    return float(var / (r_hat * r_hat) / expected_total_ms)


def variance_detect(s: EnvelopeSeries, cfg: DetectorConfig, a0: float, expected_total_ms: float) -> float:
    """``var(S / R) / expected_total_ms`` over the last ``cfg.t0_s`` seconds."""
    if not expected_total_ms > 0:
        raise DegenerateInputError(
            f"expected_total_ms must be > 0, got {expected_total_ms}"
        )
    sv = s.values_v[_window(len(s), s.rate_hz, cfg.t0_s)]
    mean = float(sv.mean())
    r_hat = _reference_level(mean, cfg, a0)
    return float(np.var(sv / r_hat) / expected_total_ms)


def variance_alarm(ratio: float, cfg: DetectorConfig) -> bool:
    """True when the variance ratio leaves the configured acceptance band."""
    lo, hi = cfg.variance_band
    return not lo <= ratio <= hi


def classify(v: DetectorVerdict) -> Classification:
    if v.decision is Decision.ATTACK_SUSPECTED:
        return Classification.ATTACK
    if v.fault_flag:
        return Classification.FAULT_SUSPECTED
    return Classification.NO_ATTACK
