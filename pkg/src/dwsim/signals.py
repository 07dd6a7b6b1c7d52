"""Sampled signals, seeded band-limited Gaussian noise, statistics and PSDs.

Noise is synthesized in the frequency domain with NumPy's PCG64 generator:
complex Gaussian coefficients fill the FFT bins in ``(0, B)``, every other
bin is zero, and the inverse transform is rescaled so the realization has
exactly the requested rms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from . import kernels
from .errors import DegenerateInputError, ParameterError

_INT_TOL = 1e-9


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def sample_count(duration_s, sample_rate_hz):
    """Number of samples in ``duration_s``; the product must be (nearly) integral."""
    n = duration_s * sample_rate_hz
    k = int(round(n))
    if abs(n - k) > _INT_TOL * max(1.0, n):
        raise ParameterError(
            f"duration {duration_s} s is not a whole number of samples at {sample_rate_hz} Hz"
        )
    return k


def integer_ratio(a, b, what):
    """``a / b`` as an int, or ParameterError if it is not integral."""
    r = a / b
    k = int(round(r))
    if k < 1 or abs(r - k) > _INT_TOL * max(1.0, r):
        raise ParameterError(f"{what}: {a} / {b} = {r} is not a positive integer")
    return k


@dataclass(frozen=True)
class SampledSignal:
    """Uniformly sampled real series starting at ``t0_s``."""

    samples: np.ndarray
    sample_rate_hz: float
    t0_s: float = 0.0

    def __post_init__(self):
        if not self.sample_rate_hz > 0:
            raise ParameterError(f"sample_rate_hz must be > 0, got {self.sample_rate_hz}")
        x = _readonly(self.samples)
        if x.ndim != 1:
            raise ParameterError("samples must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise ParameterError("samples must be finite")
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate_hz", float(self.sample_rate_hz))
        object.__setattr__(self, "t0_s", float(self.t0_s))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration_s(self):
        return len(self) / self.sample_rate_hz

    @property
    def times(self):
        return time_axis(len(self), self.sample_rate_hz, self.t0_s)

    def with_samples(self, samples):
        return SampledSignal(samples, self.sample_rate_hz, self.t0_s)


def time_axis(n, sample_rate_hz, t0_s=0.0):
    return t0_s + np.arange(n) / sample_rate_hz


@dataclass(frozen=True)
class NoiseSpec:
    """Band-limited Gaussian process: exact rms, brick-wall bandwidth, 64-bit seed."""

    rms: float
    bandwidth_hz: float
    seed: int = 0

    def __post_init__(self):
        if not self.rms >= 0:
            raise ParameterError(f"rms must be >= 0, got {self.rms}")
        if not self.bandwidth_hz > 0:
            raise ParameterError(f"bandwidth_hz must be > 0, got {self.bandwidth_hz}")
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must fit in 64 bits, got {self.seed}")

    @property
    def mean_square(self):
        return self.rms**2


def gen_bandlimited_gaussian(spec: NoiseSpec, duration_s: float, sample_rate_hz: float) -> SampledSignal:
    """Zero-mean Gaussian noise, flat on ``(0, B)`` and zero above, rms exactly ``spec.rms``."""
    if not duration_s > 0:
        raise ParameterError(f"duration must be > 0, got {duration_s}")
    if not spec.bandwidth_hz < sample_rate_hz / 2:
        raise ParameterError(
            f"bandwidth {spec.bandwidth_hz} Hz must be below Nyquist {sample_rate_hz / 2} Hz"
        )
    n = sample_count(duration_s, sample_rate_hz)
    if spec.rms == 0:
        return SampledSignal(np.zeros(n), sample_rate_hz)
    df = sample_rate_hz / n
    # bins strictly below B: a bin sitting on the edge would straddle it
    nbins = int(np.ceil(spec.bandwidth_hz / df - _INT_TOL)) - 1
    if nbins < 1:
        raise ParameterError(
            f"bandwidth {spec.bandwidth_hz} Hz is below the frequency resolution {df} Hz"
        )
    rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
    coeffs = rng.standard_normal(nbins) + 1j * rng.standard_normal(nbins)
    spectrum = np.zeros(n // 2 + 1, dtype=np.complex128)
    spectrum[1 : nbins + 1] = coeffs
    x = np.fft.irfft(spectrum, n=n)
    x *= spec.rms / np.sqrt(np.mean(x * x))
    return SampledSignal(x, sample_rate_hz)


def rms(x: SampledSignal) -> float:
    if len(x) == 0:
        raise ParameterError("rms of an empty signal")
    s = x.samples
    return float(np.sqrt(np.mean(s * s)))


def mean_square(x: SampledSignal) -> float:
    return rms(x) ** 2


def pearson_corr(x: SampledSignal, y: SampledSignal) -> float:
    """Zero-lag Pearson correlation coefficient."""
    if len(x) != len(y):
        raise ParameterError(f"length mismatch: {len(x)} vs {len(y)}")
    if x.sample_rate_hz != y.sample_rate_hz:
        raise ParameterError("sample rate mismatch")
    a = x.samples - x.samples.mean()
    b = y.samples - y.samples.mean()
    saa = float(np.dot(a, a))
    sbb = float(np.dot(b, b))
    if saa == 0 or sbb == 0:
        raise DegenerateInputError("correlation of a constant signal is undefined")
    r = float(np.dot(a, b)) / np.sqrt(saa * sbb)
    return float(np.clip(r, -1.0, 1.0))


@dataclass(frozen=True)
class PsdEstimate:
    """One-sided power spectral density (power per Hz)."""

    freqs_hz: np.ndarray
    psd: np.ndarray
    resolution_hz: float
    sample_rate_hz: float = field(default=0.0)

    def __post_init__(self):
        f = _readonly(self.freqs_hz)
        p = _readonly(self.psd)
        if f.shape != p.shape:
            raise ParameterError("freqs_hz and psd lengths differ")
        if np.any(p < 0):
            raise ParameterError("psd must be non-negative")
        object.__setattr__(self, "freqs_hz", f)
        object.__setattr__(self, "psd", p)

    @property
    def total_power(self):
        """``sum(psd) * df``: the mean square of the analyzed signal."""
        return float(self.psd.sum() * self.resolution_hz)

    def _density_nodes(self):
        # Bins at DC and Nyquist hold half of their one-sided density.
        d = np.array(self.psd, dtype=np.float64)
        d[0] *= 2.0
        if self.sample_rate_hz and np.isclose(self.freqs_hz[-1], self.sample_rate_hz / 2):
            d[-1] *= 2.0
        return d


def psd_welch(
    x: SampledSignal, segment_len: int, overlap_fraction: float = 0.75, circular: bool = True
) -> PsdEstimate:
    """Welch averaged periodogram with a periodic Hann window and no detrending.

    With ``circular`` the record is treated as one period: segments wrap past
    the end so that every sample lies under the same number of windows. When
    the hop divides the record and Hann^2 overlap-adds to a constant (overlap
    3/4 or 2/3), ``sum(psd) * df`` equals the mean square exactly. All signals
    this package synthesizes are periodic over their record, so wrapping adds
    no discontinuity for them.
    """
    segment_len = int(segment_len)
    if segment_len < 2 or segment_len > len(x):
        raise ParameterError(f"segment_len {segment_len} must be in [2, {len(x)}]")
    if not 0 <= overlap_fraction < 1:
        raise ParameterError(f"overlap_fraction must be in [0, 1), got {overlap_fraction}")
    noverlap = min(int(round(overlap_fraction * segment_len)), segment_len - 1)
    data = x.samples
    if circular:
        data = np.concatenate((data, data[:noverlap]))
    f, p = sps.welch(
        data,
        fs=x.sample_rate_hz,
        window="hann",
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        scaling="density",
        return_onesided=True,
    )
    return PsdEstimate(f, np.maximum(p, 0.0), x.sample_rate_hz / segment_len, x.sample_rate_hz)


def band_power(p: PsdEstimate, f_lo: float, f_hi: float) -> float:
    """Trapezoid integral of the PSD over ``[f_lo, f_hi]``.

    The DC and Nyquist nodes use the one-sided limit of the density (twice the
    stored bin value), which makes the full-band integral equal ``sum(psd)*df``.
    """
    f = p.freqs_hz
    if f_lo > f_hi:
        raise ParameterError(f"inverted band [{f_lo}, {f_hi}]")
    if f_lo < 0 or f_hi > f[-1] * (1 + 1e-12):
        raise ParameterError(f"band [{f_lo}, {f_hi}] outside [0, {f[-1]}]")
    if f_lo == f_hi:
        return 0.0
    f_hi = min(f_hi, f[-1])
    d = p._density_nodes()
    inner = (f > f_lo) & (f < f_hi)
    xs = np.concatenate(([f_lo], f[inner], [f_hi]))
    ys = np.concatenate(([np.interp(f_lo, f, d)], d[inner], [np.interp(f_hi, f, d)]))
    return float(np.trapezoid(ys, xs))


def moving_average(x: SampledSignal, window_s: float) -> SampledSignal:
    """Causal boxcar mean over ``window_s``.

    Output sample ``i`` averages ``x[i:i+W]`` and is stamped at the end of that
    window, so the first output sits at ``x.t0_s + window_s``.
    """
    width = integer_ratio(window_s * x.sample_rate_hz, 1.0, "window sample count")
    if width < 2:
        raise ParameterError("window must span at least 2 samples")
    if width > len(x):
        raise ParameterError(f"window of {width} samples exceeds signal length {len(x)}")
    y = kernels.sliding_mean(x.samples, width)
    return SampledSignal(y, x.sample_rate_hz, x.t0_s + width / x.sample_rate_hz)
