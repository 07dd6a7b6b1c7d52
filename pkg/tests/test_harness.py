import json
import warnings

import numpy as np
import pytest

from dwsim import io
from dwsim.config import ScenarioConfig
from dwsim.controller import Classification
from dwsim.errors import ParameterError
from dwsim.harness import (
    ScenarioResult,
    calibrate_threshold,
    emit_outputs,
    parse_arm,
    parse_arms,
    run_monte_carlo,
    run_scenario,
)

FAST = {"duration_s": 10.0, "detector.t0_s": 10.0, "sample_rate_hz": 1200.0, "master_seed": 11}


@pytest.fixture(scope="module")
def suite():
    return run_scenario(ScenarioConfig.preset("figure_suite"), plots=False)


@pytest.fixture(scope="module")
def attacked():
    return run_scenario(ScenarioConfig.preset("figure12_attack"), plots=False)


def trace(result, name):
    return next(t for t in result.traces if t.name == name)


def test_figure_suite(suite):
    assert [t.name for t in suite.traces] == [
        "fig05_line_voltage", "fig06_nw", "fig07_np", "fig08_noise_sum",
        "fig09_watermarked_voltage", "fig10_demod_product", "fig11_envelope", "fig11_envelope_norm",
    ]
    assert suite.classification is Classification.NO_ATTACK
    assert suite.seeds == (1, 2)
    assert np.std(trace(suite, "fig06_nw").values) == pytest.approx(0.3, rel=1e-12)
    assert np.std(trace(suite, "fig07_np").values) == pytest.approx(0.2, rel=1e-12)


def test_figure12_attack(attacked, suite):
    fake = trace(attacked, "fig12_fake_envelope")
    genuine = trace(suite, "fig11_envelope")
    a0 = 100e3 * 2**0.5
    assert fake.values.mean() == pytest.approx(0.5 * genuine.values.mean(), rel=1e-9)
    assert fake.values.mean() == pytest.approx(0.5 * a0, rel=0.01)
    assert attacked.classification is Classification.FAULT_SUSPECTED


def test_zero_noise_run_completes_with_warning():
    cfg = ScenarioConfig({**FAST, "nw_rms": 0.0, "np_rms": 0.0})
    with pytest.warns(UserWarning, match="detector skipped"):
        r = run_scenario(cfg)
    assert r.verdict is None and r.classification is None
    assert len(r.warnings) == 1
    np.testing.assert_allclose(trace(r, "fig11_envelope").values, cfg.grid().a0_peak_v, rtol=1e-9)


def test_emit_outputs_manifest(tmp_path, suite):
    m = emit_outputs(suite, tmp_path, plots=True)
    assert len(m["traces"]) == 8 and len(m["plots"]) == 8 and m["verdict"]["file"] == "verdict.csv"
    on_disk = json.loads((tmp_path / "manifest.json").read_text())
    assert on_disk == m
    assert m["config"]["nw_seed"] == 1
    for entry in m["traces"]:
        header, cols = io.read_columns(tmp_path / entry["file"])
        assert list(header) == entry["columns"] and len(cols[0]) == entry["rows"]
    for name in m["plots"]:
        assert (tmp_path / name).stat().st_size > 0
    lines = (tmp_path / "verdict.csv").read_text().splitlines()
    assert lines[0] == ",".join(io.VERDICT_HEADER) and lines[1].endswith("NO_ATTACK")


def test_empty_bundle_manifest(tmp_path):
    m = emit_outputs(ScenarioResult(ScenarioConfig()), tmp_path)
    assert m["traces"] == [] and m["plots"] == [] and m["verdict"] is None
    assert m["config"] == ScenarioConfig().to_dict()


def test_rerun_is_byte_identical(tmp_path):
    cfg = ScenarioConfig({**FAST, "attack.enabled": True})
    a = emit_outputs(run_scenario(cfg), tmp_path / "a", plots=False)
    b = emit_outputs(run_scenario(cfg), tmp_path / "b", plots=False)
    assert a == b
    for entry in a["traces"]:
        assert (tmp_path / "a" / entry["file"]).read_bytes() == (tmp_path / "b" / entry["file"]).read_bytes()


def test_emit_reports_io_errors(tmp_path, suite):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="writing outputs"):
        emit_outputs(suite, blocker / "sub", plots=False)


def test_arm_parsing():
    assert parse_arm("none").kind == "none"
    assert parse_arm("naive").alpha == 1.0
    assert parse_arm("naive:0.5").alpha == 0.5
    p = parse_arm("proportional:0.5").params
    assert (p.alpha, p.beta, p.gamma) == (0.5, 0.5, 0.5)
    p = parse_arm("beta:0.25").params
    assert (p.alpha, p.beta, p.gamma) == (1.0, 0.25, 0.25)
    assert parse_arm("split:1:1:0.3").params.gamma == 0.3
    for bad in ("wat", "proportional", "naive:x", "split:1:2"):
        with pytest.raises(ParameterError):
            parse_arm(bad)
    with pytest.raises(ParameterError):
        parse_arms("")
    with pytest.raises(ParameterError):
        parse_arms("none,none")


def test_single_trial_equals_scenario():
    cfg = ScenarioConfig(FAST)
    s = run_monte_carlo(cfg, trials=1, arms=["none"])
    r = run_scenario(cfg)
    a = s.arm("none")
    assert a.d_w == (r.verdict.d_w,)
    assert a.d_w_mean == r.verdict.d_w and a.d_w_std == 0.0
    assert a.variance_ratio == (r.verdict.variance_ratio,)
    assert s.false_alarm_rate == float(r.verdict.d_w < 0.5)


def test_monte_carlo_errors():
    cfg = ScenarioConfig(FAST)
    with pytest.raises(ParameterError):
        run_monte_carlo(cfg, trials=0)
    with pytest.raises(ParameterError):
        run_monte_carlo(cfg, trials=1, arms=[])
    assert run_monte_carlo(cfg, trials=2, arms=["naive"]).false_alarm_rate is None


def test_summary_independent_of_order_and_workers():
    cfg = ScenarioConfig(FAST)
    a = run_monte_carlo(cfg, trials=6, arms=["none", "naive:1.0", "proportional:0.5"])
    b = run_monte_carlo(cfg, trials=6, arms=["proportional:0.5", "none", "naive:1.0"], workers=2)
    for name in ("none", "naive:1.0", "proportional:0.5"):
        assert a.arm(name) == b.arm(name)
    c = run_monte_carlo(cfg, trials=6, arms=["none", "naive:1.0", "proportional:0.5"], workers=3)
    assert a.digest() == c.digest()
    d = run_monte_carlo(cfg.with_overrides({"master_seed": 12}), trials=6,
                        arms=["none", "naive:1.0", "proportional:0.5"])
    assert d.digest() != a.digest()


def test_summary_rates_are_probabilities():
    s = run_monte_carlo(ScenarioConfig(FAST), trials=5)
    d = s.to_dict()
    assert d["trials"] == 5
    for arm in d["arms"]:
        for k in ("detection_rate", "variance_detection_rate", "fault_rate"):
            assert 0.0 <= arm[k] <= 1.0
        assert sum(arm["classifications"].values()) == 5


def test_calibrate_separated():
    h0 = np.linspace(0.9, 1.1, 100)
    h1 = np.linspace(-0.1, 0.1, 100)
    c = calibrate_threshold(h0, h1, 0.05)
    assert 0.1 < c.threshold < 0.9
    assert c.false_alarm_rate <= 0.05 and c.miss_rate == 0.0 and c.warning is None


def test_calibrate_identical():
    x = np.random.default_rng(0).normal(size=200)
    with pytest.warns(UserWarning, match="overlap"):
        c = calibrate_threshold(x, x, 0.05)
    assert c.warning
    assert c.false_alarm_rate <= 0.05
    assert c.miss_rate == pytest.approx(0.95, abs=0.01)


def test_calibrate_errors():
    with pytest.raises(ParameterError):
        calibrate_threshold([], [1.0], 0.05)
    with pytest.raises(ParameterError):
        calibrate_threshold([1.0], [0.0], 0.0)


def test_calibrate_default_scenario():
    s = run_monte_carlo(ScenarioConfig({"master_seed": 3}), trials=100, arms=["none", "naive:1.0"])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        c = calibrate_threshold(s.arm("none").d_w, s.arm("naive:1.0").d_w, 0.05)
    assert 0.15 < c.threshold < 0.85
    assert c.miss_rate < 0.01
    assert c.false_alarm_rate <= 0.05
