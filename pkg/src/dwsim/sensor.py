"""Voltage sensor: synchronous demodulation and envelope extraction.

Demodulation multiplies by ``2*sin(2*pi*f*t + phase)`` so that the DC term of
the product is the envelope itself. Extraction then either averages over one
period of the second harmonic (boxcar, the default) or applies a linear-phase
FIR low-pass, and samples the result at the report rate.

In boxcar mode, report ``k`` (``k >= 1``) is the mean over ``[t_k - tau, t_k)``
with ``t_k = k / report_rate``; the slot at ``t = 0`` has no full window and is
dropped, so a record of ``D`` seconds yields ``floor(D * report_rate)`` values
when ``tau`` equals the report period.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from . import kernels
from .errors import ParameterError
from .signals import SampledSignal, _readonly, integer_ratio, time_axis


class FilterMode(str, enum.Enum):
    BOXCAR = "boxcar_average"
    LOWPASS = "lowpass"


@dataclass(frozen=True)
class SensorConfig:
    carrier_freq_hz: float = 60.0
    carrier_phase_rad: float = 0.0
    avg_window_s: float | None = None
    report_rate_hz: float | None = None
    filter_mode: FilterMode = FilterMode.BOXCAR
    # Assumed watermark bandwidth; sets the low-pass stopband edge at 2f - B.
    lowpass_bandwidth_hz: float = 1.0
    lowpass_stopband_db: float = 80.0

    def __post_init__(self):
        f = self.carrier_freq_hz
        if not f > 0:
            raise ParameterError(f"carrier_freq_hz must be > 0, got {f}")
        object.__setattr__(self, "filter_mode", FilterMode(self.filter_mode))
        if self.avg_window_s is None:
            object.__setattr__(self, "avg_window_s", 1.0 / (2.0 * f))
        if self.report_rate_hz is None:
            object.__setattr__(self, "report_rate_hz", 2.0 * f)
        if self.filter_mode is FilterMode.BOXCAR and not np.isclose(
            self.avg_window_s, 1.0 / (2.0 * f), rtol=1e-12, atol=0
        ):
            raise ParameterError(
                f"boxcar averaging window must be one second-harmonic period 1/{2 * f} s"
            )
        if not 0 < self.report_rate_hz <= 2.0 * f * (1 + 1e-12):
            raise ParameterError(f"report_rate_hz must be in (0, {2 * f}]")
        if not 0 < self.lowpass_bandwidth_hz < f:
            raise ParameterError("lowpass_bandwidth_hz must be in (0, carrier frequency)")

    @property
    def reference_window_s(self):
        """Averaging window a matched reference should use (None: point samples)."""
        return self.avg_window_s if self.filter_mode is FilterMode.BOXCAR else None


@dataclass(frozen=True)
class EnvelopeSeries:
    """Detected envelope in volts, sampled at ``rate_hz`` starting at ``t0_s``."""

    values_v: np.ndarray
    rate_hz: float = 120.0
    t0_s: float = 0.0

    def __post_init__(self):
        v = _readonly(self.values_v)
        if v.ndim != 1:
            raise ParameterError("values_v must be one-dimensional")
        if not np.all(np.isfinite(v)):
            raise ParameterError("envelope values must be finite")
        if not self.rate_hz > 0:
            raise ParameterError(f"rate_hz must be > 0, got {self.rate_hz}")
        object.__setattr__(self, "values_v", v)
        object.__setattr__(self, "rate_hz", float(self.rate_hz))
        object.__setattr__(self, "t0_s", float(self.t0_s))

    def __len__(self):
        return self.values_v.shape[0]

    @property
    def times(self):
        return time_axis(len(self), self.rate_hz, self.t0_s)

    def normalized(self, a0):
        return self.values_v / a0

    def as_signal(self):
        return SampledSignal(self.values_v, self.rate_hz, self.t0_s)


def _check_line_rate(x, cfg):
    if x.sample_rate_hz < 10 * cfg.carrier_freq_hz:
        raise ParameterError(
            f"sample rate {x.sample_rate_hz} Hz is below 10x the carrier {cfg.carrier_freq_hz} Hz"
        )


def synchronous_demodulate(line: SampledSignal, cfg: SensorConfig) -> SampledSignal:
    _check_line_rate(line, cfg)
    t = line.times
    ref = np.sin(2.0 * np.pi * cfg.carrier_freq_hz * t + cfg.carrier_phase_rad)
    return line.with_samples(2.0 * line.samples * ref)


def _report_geometry(fs, cfg):
    step = integer_ratio(fs, cfg.report_rate_hz, "samples per report")
    width = integer_ratio(cfg.avg_window_s * fs, 1.0, "samples per averaging window")
    return step, width


def _lowpass_taps(fs, cfg):
    stop = 2.0 * cfg.carrier_freq_hz - cfg.lowpass_bandwidth_hz
    passband = cfg.lowpass_bandwidth_hz
    nyq = fs / 2.0
    numtaps, beta = sps.kaiserord(cfg.lowpass_stopband_db, (stop - passband) / nyq)
    numtaps |= 1  # odd length: integer group delay
    return sps.firwin(numtaps, (stop + passband) / 2.0, window=("kaiser", beta), fs=fs)


def extract_envelope(demod: SampledSignal, cfg: SensorConfig) -> EnvelopeSeries:
    fs = demod.sample_rate_hz
    x = demod.samples
    if cfg.filter_mode is FilterMode.BOXCAR:
        step, width = _report_geometry(fs, cfg)
        if width > len(x):
            raise ParameterError("signal shorter than one averaging window")
        if step == width:
            return EnvelopeSeries(
                kernels.block_mean(x, width), cfg.report_rate_hz, demod.t0_s + width / fs
            )
        # report at sample m averages x[m-width:m]; first m is the first full window
        first = -(-width // step) * step
        means = kernels.sliding_mean(x, width)
        return EnvelopeSeries(
            means[first - width :: step], cfg.report_rate_hz, demod.t0_s + first / fs
        )

    step = integer_ratio(fs, cfg.report_rate_hz, "samples per report")
    taps = _lowpass_taps(fs, cfg)
    delay = (len(taps) - 1) // 2
    if len(taps) > len(x):
        raise ParameterError("signal shorter than the low-pass filter")
    y = np.convolve(x, taps, mode="valid")  # y[i] is centred on sample i + delay
    first = -(-delay // step) * step
    idx = np.arange(first, len(x) - delay, step)
    return EnvelopeSeries(y[idx - delay], cfg.report_rate_hz, demod.t0_s + first / fs)


def measure(line: SampledSignal, cfg: SensorConfig) -> EnvelopeSeries:
    """Demodulate and extract in one call; boxcar mode fuses both into one pass."""
    _check_line_rate(line, cfg)
    if cfg.filter_mode is FilterMode.BOXCAR:
        step, width = _report_geometry(line.sample_rate_hz, cfg)
        if step == width:
            values = kernels.demod_block_mean(
                line.samples,
                line.sample_rate_hz,
                cfg.carrier_freq_hz,
                cfg.carrier_phase_rad,
                line.t0_s,
                width,
            )
            return EnvelopeSeries(
                values, cfg.report_rate_hz, line.t0_s + width / line.sample_rate_hz
            )
    return extract_envelope(synchronous_demodulate(line, cfg), cfg)


def sensor_report(env: EnvelopeSeries) -> EnvelopeSeries:
    """The wire-bound sensor signal; numerically the detected envelope itself."""
    return EnvelopeSeries(env.values_v, env.rate_hz, env.t0_s)


def matched_reference(noise: SampledSignal, env: EnvelopeSeries, window_s=None) -> SampledSignal:
    """Resample a high-rate noise onto the envelope's report instants.

    With ``window_s`` each value is the mean over ``[t - window_s, t)``, the same
    averaging the boxcar sensor applies; otherwise the noise is point-sampled.
    """
    fs = noise.sample_rate_hz
    ends = np.rint((env.times - noise.t0_s) * fs).astype(np.int64)
    if window_s is None:
        if ends[0] < 0 or ends[-1] >= len(noise):
            raise ParameterError("envelope instants fall outside the noise record")
        return SampledSignal(noise.samples[ends], env.rate_hz, env.t0_s)
    width = integer_ratio(window_s * fs, 1.0, "reference window samples")
    if ends[0] < width or ends[-1] > len(noise):
        raise ParameterError("envelope windows fall outside the noise record")
    means = kernels.sliding_mean(noise.samples, width)
    return SampledSignal(means[ends - width], env.rate_hz, env.t0_s)
