import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from dwsim.errors import DegenerateInputError, ParameterError
from dwsim.signals import (
    NoiseSpec,
    PsdEstimate,
    SampledSignal,
    band_power,
    gen_bandlimited_gaussian,
    moving_average,
    pearson_corr,
    psd_welch,
    rms,
)

FS = 6000.0


def sine(freq, amp, duration, fs=FS, phase=0.0):
    t = np.arange(int(round(duration * fs))) / fs
    return SampledSignal(amp * np.sin(2 * np.pi * freq * t + phase), fs)


# -- containers ---------------------------------------------------------------


def test_sampled_signal_rejects_bad_input():
    with pytest.raises(ParameterError):
        SampledSignal([1.0, np.nan], 10.0)
    with pytest.raises(ParameterError):
        SampledSignal([1.0], 0.0)
    x = SampledSignal([1.0, 2.0], 4.0)
    assert x.duration_s == 0.5
    with pytest.raises(ValueError):
        x.samples[0] = 3.0  # immutable


def test_noise_spec_invariants():
    with pytest.raises(ParameterError):
        NoiseSpec(-0.1, 1.0)
    with pytest.raises(ParameterError):
        NoiseSpec(0.1, 0.0)
    with pytest.raises(ParameterError):
        NoiseSpec(0.1, 1.0, seed=2**64)


# -- noise generation -----------------------------------------------------------


def test_watermark_noise_rms_and_band():
    x = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, seed=1), 60.0, FS)
    assert 0.297 <= rms(x) <= 0.303
    p = psd_welch(x, len(x))
    assert band_power(p, 0.0, 1.0) / p.total_power > 0.99


def test_zero_rms_is_all_zero():
    x = gen_bandlimited_gaussian(NoiseSpec(0.0, 0.5, seed=123), 10.0, FS)
    assert len(x) == 60000
    assert not np.any(x.samples)


def test_parasitic_noise_confined_below_bandwidth():
    x = gen_bandlimited_gaussian(NoiseSpec(0.2, 0.5, seed=7), 60.0, FS)
    p = psd_welch(x, len(x))
    assert band_power(p, 0.5, FS / 2) < 0.01 * p.total_power


def test_generation_is_deterministic():
    spec = NoiseSpec(0.3, 1.0, seed=2**63 + 5)
    a = gen_bandlimited_gaussian(spec, 10.0, FS)
    b = gen_bandlimited_gaussian(spec, 10.0, FS)
    assert a.samples.tobytes() == b.samples.tobytes()
    c = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, seed=2**63 + 6), 10.0, FS)
    assert a.samples.tobytes() != c.samples.tobytes()


def test_generation_errors():
    with pytest.raises(ParameterError):
        gen_bandlimited_gaussian(NoiseSpec(0.3, 3000.0), 1.0, FS)
    with pytest.raises(ParameterError):
        gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0), 0.0, FS)
    with pytest.raises(ParameterError):  # no FFT bin below B
        gen_bandlimited_gaussian(NoiseSpec(0.3, 0.05), 10.0, FS)


def test_generated_noise_is_gaussian_and_zero_mean():
    x = gen_bandlimited_gaussian(NoiseSpec(1.0, 200.0, seed=11), 100.0, 1200.0)
    assert len(x) >= 1e5
    assert -0.2 <= stats.kurtosis(x.samples) <= 0.2
    assert abs(x.samples.mean()) < 1e-12


@given(
    rms_=st.floats(0.01, 2.0),
    bw=st.sampled_from([0.3, 0.5, 1.0, 2.0]),
    seed=st.integers(0, 2**64 - 1),
)
@settings(max_examples=25, deadline=None)
def test_spectral_confinement_and_parseval(rms_, bw, seed):
    # at least ~120 bins under B keeps Hann leakage at the edge well below 1 %
    duration = max(60.0, 120.0 / bw)
    x = gen_bandlimited_gaussian(NoiseSpec(rms_, bw, seed), duration, 600.0)
    assert rms(x) == pytest.approx(rms_, rel=1e-12)
    spectrum = np.abs(np.fft.rfft(x.samples)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1 / 600.0)
    assert spectrum[freqs >= bw].sum() <= 1e-20 * spectrum.sum()
    p = psd_welch(x, len(x))
    total = p.total_power
    assert total == pytest.approx(np.mean(x.samples**2), rel=0.02)
    assert band_power(p, bw, 300.0) < 0.01 * total


# -- statistics ----------------------------------------------------------------


def test_rms_examples():
    assert rms(SampledSignal(np.full(17, 2.0), 10.0)) == 2.0
    assert rms(sine(60.0, 1.0, 1.0)) == pytest.approx(1 / math.sqrt(2), abs=1e-9)
    with pytest.raises(ParameterError):
        rms(SampledSignal([], 10.0))


def test_pearson_corr_examples():
    x = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, 1), 60.0, FS)
    assert pearson_corr(x, x) == pytest.approx(1.0)
    assert pearson_corr(x, x.with_samples(-x.samples)) == pytest.approx(-1.0)
    y = gen_bandlimited_gaussian(NoiseSpec(0.2, 0.5, 2), 60.0, FS)
    assert abs(pearson_corr(x, y)) < 0.15


def test_pearson_corr_errors():
    x = SampledSignal([1.0, 2.0, 3.0], 10.0)
    with pytest.raises(ParameterError):
        pearson_corr(x, SampledSignal([1.0, 2.0], 10.0))
    with pytest.raises(DegenerateInputError):
        pearson_corr(x, SampledSignal([1.0, 1.0, 1.0], 10.0))


def test_independent_noise_correlation_population_bound():
    # 200 seed pairs put the 99th percentile of |r| near 0.22 (max 0.235);
    # the bound below is that oracle value rounded up.
    r = []
    for s in range(100):
        a = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, 2 * s + 1), 60.0, 600.0)
        b = gen_bandlimited_gaussian(NoiseSpec(0.2, 0.5, 2 * s + 2), 60.0, 600.0)
        r.append(abs(pearson_corr(a, b)))
    assert np.percentile(r, 99) < 0.25
    assert np.median(r) < 0.1


# -- PSD -----------------------------------------------------------------------


def brute_circular_welch(x, fs, seg, hop):
    """Independent circular Welch: explicit periodic Hann, FFT per wrapped segment."""
    n = len(x)
    w = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(seg) / seg)
    acc = np.zeros(seg // 2 + 1)
    starts = range(0, n, hop)
    for s in starts:
        idx = (s + np.arange(seg)) % n
        acc += np.abs(np.fft.rfft(x[idx] * w)) ** 2
    p = acc / len(starts) / (fs * np.sum(w**2))
    p[1:-1] *= 2
    return p


def test_psd_matches_brute_force_circular_welch():
    x = np.random.default_rng(9).normal(size=800)
    got = psd_welch(SampledSignal(x, 100.0), 200, 0.75)
    np.testing.assert_allclose(got.psd, brute_circular_welch(x, 100.0, 200, 50), rtol=1e-10)
    assert got.resolution_hz == 0.5


def test_psd_of_sinusoid_concentrates_at_carrier():
    a0 = 1.5
    x = sine(60.0, a0, 10.0)
    p = psd_welch(x, len(x))
    assert p.total_power == pytest.approx(a0**2 / 2, rel=1e-9)
    assert band_power(p, 59.0, 61.0) >= 0.99 * a0**2 / 2
    assert p.freqs_hz[np.argmax(p.psd)] == pytest.approx(60.0)


def test_psd_of_zero_signal_is_zero():
    p = psd_welch(SampledSignal(np.zeros(1000), 100.0), 100)
    assert not np.any(p.psd)


def test_psd_errors():
    x = SampledSignal(np.ones(10), 10.0)
    with pytest.raises(ParameterError):
        psd_welch(x, 11)
    with pytest.raises(ParameterError):
        psd_welch(x, 5, 1.0)


def test_psd_estimate_invariants():
    with pytest.raises(ParameterError):
        PsdEstimate([0.0, 1.0], [1.0], 1.0)
    with pytest.raises(ParameterError):
        PsdEstimate([0.0, 1.0], [1.0, -1.0], 1.0)


def test_parseval_holds_for_constant_and_tone_mixture():
    t = np.arange(12000) / FS
    x = SampledSignal(3.0 + np.sin(2 * np.pi * 120 * t) + 0.5 * np.cos(2 * np.pi * 3000 * t), FS)
    p = psd_welch(x, 3000)
    ms = np.mean(x.samples**2)
    assert p.total_power == pytest.approx(ms, rel=1e-9)
    assert band_power(p, 0.0, FS / 2) == pytest.approx(ms, rel=1e-9)


def test_band_power_edge_cases():
    p = psd_welch(sine(60.0, 1.0, 2.0), 6000)
    assert band_power(p, 30.0, 30.0) == 0.0
    with pytest.raises(ParameterError):
        band_power(p, 61.0, 59.0)
    with pytest.raises(ParameterError):
        band_power(p, 0.0, 4000.0)


def test_watermarked_voltage_sideband_ratio():
    nw = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, 3), 60.0, FS)
    carrier = sine(60.0, 1.0, 60.0)
    x = carrier.with_samples((1 + nw.samples) * carrier.samples)
    p = psd_welch(x, len(x))
    df = p.resolution_hz
    side = (band_power(p, 59.0, 61.0) - band_power(p, 60 - 2 * df, 60 + 2 * df)) * 2.0 / (2.0 - 4 * df)
    # carrier power 1/2, sideband <N_w^2>/2 -> ratio 0.09
    assert side / 0.5 == pytest.approx(0.09, rel=0.10)


# -- moving average ------------------------------------------------------------


def test_moving_average_constant_and_alignment():
    x = SampledSignal(np.full(600, 0.1), FS)
    y = moving_average(x, 1 / 120)
    assert len(y) == 600 - 50 + 1
    assert y.t0_s == pytest.approx(1 / 120)
    np.testing.assert_allclose(y.samples, 0.1, rtol=4 * np.finfo(float).eps)


def test_moving_average_cancels_full_period():
    y = moving_average(sine(120.0, 1.0, 1.0, phase=np.pi / 2), 1 / 120)
    assert np.max(np.abs(y.samples)) < 1e-9


def test_moving_average_recovers_demodulated_envelope():
    fs, a0 = FS, 10.0
    nw = gen_bandlimited_gaussian(NoiseSpec(0.3, 1.0, 5), 10.0, fs)
    t = nw.times
    prod = SampledSignal(a0 * (1 + nw.samples) * (1 - np.cos(2 * np.pi * 120 * t)), fs)
    y = moving_average(prod, 1 / 120)
    # oracle: direct window mean of a0 (1 + N_w)
    oracle = np.convolve(a0 * (1 + nw.samples), np.ones(50) / 50, mode="valid")
    # residual of the 120 Hz term is about a0 * |N_w'| * tau / (2 pi)
    np.testing.assert_allclose(y.samples, oracle, atol=5e-3 * a0)


def test_moving_average_errors():
    x = SampledSignal(np.ones(100), 1000.0)
    with pytest.raises(ParameterError):
        moving_average(x, 0.0025)  # 2.5 samples
    with pytest.raises(ParameterError):
        moving_average(x, 0.001)  # one sample


@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(0, 1000))
@settings(max_examples=30, deadline=None)
def test_moving_average_is_linear(a, b, seed):
    rng = np.random.default_rng(seed)
    x, y = rng.normal(size=300), rng.normal(size=300)
    lhs = moving_average(SampledSignal(a * x + b * y, 1200.0), 1 / 120).samples
    rhs = a * moving_average(SampledSignal(x, 1200.0), 1 / 120).samples + b * moving_average(
        SampledSignal(y, 1200.0), 1 / 120
    ).samples
    scale = max(1.0, np.max(np.abs(rhs)))
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale * 10
