import math

import pytest

from dwsim import kernels
from dwsim.grid import GridParams

NOMINAL_A0 = 100e3 * math.sqrt(2.0)

# acceptance lines collected by tests/test_acceptance.py
ACCEPTANCE = []


@pytest.fixture
def grid():
    return GridParams.from_rms(100e3)


@pytest.fixture(params=kernels.available_backends())
def backend(request):
    return kernels.get_backend(request.param)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)


def watermarked_chain(nw_seed, np_seed, duration=60.0, fs=6000.0, nw_bw=1.0, np_rms=0.2):
    """Watermarked line through the sensor; returns (a0, nw, np, env, ref)."""
    from dwsim.grid import apply_watermark_modulation
    from dwsim.sensor import SensorConfig, matched_reference, measure, sensor_report
    from dwsim.signals import NoiseSpec, gen_bandlimited_gaussian

    g = GridParams.from_rms(100e3)
    nw = gen_bandlimited_gaussian(NoiseSpec(0.3, nw_bw, nw_seed), duration, fs)
    np_ = gen_bandlimited_gaussian(NoiseSpec(np_rms, 0.5, np_seed), duration, fs) if np_rms else None
    line = apply_watermark_modulation(g, nw, np_, duration, fs)
    cfg = SensorConfig()
    env = sensor_report(measure(line, cfg))
    return g.a0_peak_v, nw, np_, env, matched_reference(nw, env, cfg.reference_window_s)
