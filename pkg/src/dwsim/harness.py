"""Scenario runs, Monte-Carlo experiments, threshold calibration, output files."""

from __future__ import annotations

import hashlib
import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io
from .attacker import AttackMode, AttackParams, extract_noise, naive_attack, synthesize_fake
from .controller import Decision, DetectorVerdict, classify, crosscorr_detect, variance_alarm
from .errors import DegenerateInputError, ParameterError
from .grid import apply_watermark_modulation, synth_line_voltage
from .sensor import matched_reference, measure, sensor_report, synchronous_demodulate
from .signals import gen_bandlimited_gaussian

SCHEMA_VERSION = 1


# -- attack arms -------------------------------------------------------------


@dataclass(frozen=True)
class Arm:
    """One Monte-Carlo arm: no attack, a naive constant fake, or an extracted-noise fake."""

    name: str
    kind: str  # "none" | "naive" | "fake"
    alpha: float = 1.0
    params: AttackParams | None = None


def parse_arm(spec):
    """Parse an arm spec.

    ``none``, ``naive[:alpha]``, ``proportional:k`` (alpha = beta = gamma = k),
    ``beta:b`` (alpha = 1, beta = gamma = b), ``scaled:alpha:b`` and
    ``split:alpha:beta:gamma`` (split_noise mode).
    """
    spec = spec.strip()
    head, *args = spec.split(":")
    try:
        nums = [float(a) for a in args]
    except ValueError:
        raise ParameterError(f"bad numbers in arm {spec!r}") from None
    expected = {"none": (0,), "naive": (0, 1), "proportional": (1,), "beta": (1,), "scaled": (2,), "split": (3,)}
    if head not in expected:
        raise ParameterError(f"unknown arm kind {head!r} in {spec!r}")
    if len(nums) not in expected[head]:
        raise ParameterError(f"arm {spec!r} takes {expected[head]} numeric arguments")
    if head == "none":
        return Arm(spec, "none")
    if head == "naive":
        return Arm(spec, "naive", alpha=nums[0] if nums else 1.0)
    if head == "proportional":
        return Arm(spec, "fake", params=AttackParams.proportional(nums[0]))
    if head == "beta":
        return Arm(spec, "fake", params=AttackParams(1.0, nums[0], nums[0]))
    if head == "scaled":
        return Arm(spec, "fake", params=AttackParams(nums[0], nums[1], nums[1]))
    return Arm(spec, "fake", params=AttackParams(*nums, mode=AttackMode.SPLIT_NOISE))


def parse_arms(text):
    arms = [parse_arm(s) for s in str(text).split(",") if s.strip()]
    if not arms:
        raise ParameterError("empty arm list")
    names = [a.name for a in arms]
    if len(set(names)) != len(names):
        raise ParameterError(f"duplicate arms in {text!r}")
    return arms


def config_arm(cfg):
    """The arm described by the ``attack.*`` keys (``none`` when disabled)."""
    if not cfg["attack.enabled"]:
        return Arm("none", "none")
    if cfg["attack.mode"] == "naive":
        return Arm("naive", "naive", alpha=cfg["attack.alpha"])
    return Arm("configured", "fake", params=cfg.attack())


# -- one pass through the signal chain --------------------------------------


@dataclass
class _Chain:
    a0: float
    nw: object
    np_: object
    line: object
    env: object
    ref: object


def _run_chain(cfg, nw_seed, np_seed):
    g = cfg.grid()
    fs, dur = cfg["sample_rate_hz"], cfg["duration_s"]
    nw_spec, np_spec = cfg.noise_specs(nw_seed, np_seed)
    nw = gen_bandlimited_gaussian(nw_spec, dur, fs)
    np_ = gen_bandlimited_gaussian(np_spec, dur, fs)
    line = apply_watermark_modulation(g, nw, np_, dur, fs)
    sensor = cfg.sensor()
    env = sensor_report(measure(line, sensor))
    ref = matched_reference(nw, env, sensor.reference_window_s)
    return _Chain(g.a0_peak_v, nw, np_, line, env, ref)


def _reported(arm, chain, cfg):
    """Series the controller receives under ``arm``."""
    if arm.kind == "none":
        return chain.env
    env = chain.env
    if arm.kind == "naive":
        return naive_attack(chain.a0, arm.alpha, len(env) / env.rate_hz, env.rate_hz, env.t0_s)
    p = arm.params
    if cfg["attack.delay_samples"] and p.delay_samples != cfg["attack.delay_samples"]:
        p = AttackParams(p.alpha, p.beta, p.gamma, p.mode, cfg["attack.delay_samples"])
    extracted = extract_noise(env, chain.a0, cfg.noise_reference)
    split = None
    if p.mode is AttackMode.SPLIT_NOISE:
        window = cfg.sensor().reference_window_s
        split = (chain.ref.samples, matched_reference(chain.np_, env, window).samples)
    return synthesize_fake(extracted, p, chain.a0, split)


# -- run_scenario --------------------------------------------------------------


@dataclass(frozen=True)
class Trace:
    name: str
    header: tuple
    times: np.ndarray
    values: np.ndarray
    title: str
    ylabel: str


@dataclass
class ScenarioResult:
    config: object
    traces: list = field(default_factory=list)
    verdict: DetectorVerdict | None = None
    seeds: tuple = ()
    warnings: list = field(default_factory=list)

    @property
    def classification(self):
        return None if self.verdict is None else classify(self.verdict)


def _detect(reported, chain, cfg):
    return crosscorr_detect(reported, chain.ref, cfg.detector(), chain.a0)


def run_scenario(cfg, out_dir=None, plots=None) -> ScenarioResult:
    """Generate, modulate, demodulate, extract, optionally attack, detect.

    Every intermediate series is kept as a :class:`Trace`. When ``out_dir`` is
    given, :func:`emit_outputs` writes them. A detector that cannot run
    (e.g. zero watermark power) leaves ``verdict`` as None and records a warning.
    """
    nw_seed, np_seed = cfg.seeds(0)
    chain = _run_chain(cfg, nw_seed, np_seed)
    g = cfg.grid()
    a0 = chain.a0
    fs, dur = cfg["sample_rate_hz"], cfg["duration_s"]
    ideal = synth_line_voltage(g, dur, fs)
    demod = synchronous_demodulate(chain.line, cfg.sensor())
    t = chain.nw.times
    env = chain.env
    traces = [
        Trace("fig05_line_voltage", io.SIGNAL_HEADER, t, ideal.samples, "Line voltage", "V"),
        Trace("fig06_nw", io.SIGNAL_HEADER, t, chain.nw.samples, "Watermark noise N_w", "-"),
        Trace("fig07_np", io.SIGNAL_HEADER, t, chain.np_.samples, "Parasitic noise N_p", "-"),
        Trace("fig08_noise_sum", io.SIGNAL_HEADER, t, chain.nw.samples + chain.np_.samples,
              "N_w + N_p", "-"),
        Trace("fig09_watermarked_voltage", io.SIGNAL_HEADER, t, chain.line.samples,
              "Watermarked line voltage", "V"),
        Trace("fig10_demod_product", io.SIGNAL_HEADER, t, demod.samples,
              "Demodulated product before averaging", "V"),
        Trace("fig11_envelope", io.ENVELOPE_HEADER, env.times, env.values_v, "Sensor envelope", "V"),
        Trace("fig11_envelope_norm", io.ENVELOPE_NORM_HEADER, env.times, env.normalized(a0),
              "Sensor output normalized by a0", "-"),
    ]
    arm = config_arm(cfg)
    reported = _reported(arm, chain, cfg)
    if arm.kind != "none":
        traces.append(Trace("fig12_fake_envelope", io.ENVELOPE_HEADER, reported.times,
                            reported.values_v, "Fake sensor signal", "V"))
    result = ScenarioResult(cfg, traces, seeds=(nw_seed, np_seed))
    try:
        result.verdict = _detect(reported, chain, cfg)
    except DegenerateInputError as exc:
        msg = f"detector skipped: {exc}"
        warnings.warn(msg, stacklevel=2)
        result.warnings.append(msg)
    if out_dir is not None:
        emit_outputs(result, out_dir, plots=cfg["output.plots"] if plots is None else plots)
    return result


# -- outputs -------------------------------------------------------------------


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def emit_outputs(result: ScenarioResult, out_dir, plots=True):
    """Write trace CSVs, plots, the verdict CSV and ``manifest.json``; return the manifest."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "config": result.config.to_dict(),
            "seeds": list(result.seeds),
            "traces": [],
            "plots": [],
            "verdict": None,
            "warnings": list(result.warnings),
        }
        for tr in result.traces:
            path = io.write_columns(out / f"{tr.name}.csv", tr.header, tr.times, tr.values)
            manifest["traces"].append(
                {"file": path.name, "columns": list(tr.header), "rows": len(tr.values),
                 "sha256": _sha256(path)}
            )
        if plots and result.traces:
            from .plotting import plot_trace

            for tr in result.traces:
                manifest["plots"].append(plot_trace(tr, out / f"{tr.name}.png").name)
        if result.verdict is not None:
            path = io.write_verdict(out / "verdict.csv", result.config["detector.t0_s"], result.verdict)
            manifest["verdict"] = {"file": path.name, "columns": list(io.VERDICT_HEADER),
                                   "sha256": _sha256(path)}
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"writing outputs to {out}: {exc}") from exc
    return manifest


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    d_w: float
    variance_ratio: float
    reported_mean_ratio: float
    decision: Decision
    fault_flag: bool
    variance_alarm: bool


def evaluate_trial(cfg, trial, arms):
    """Outcomes of every arm for one trial; all arms share the trial's noises."""
    chain = _run_chain(cfg, *cfg.seeds(trial))
    det = cfg.detector()
    out = []
    for arm in arms:
        v = crosscorr_detect(_reported(arm, chain, cfg), chain.ref, det, chain.a0)
        out.append(TrialOutcome(v.d_w, v.variance_ratio, v.reported_mean_ratio, v.decision,
                                v.fault_flag, variance_alarm(v.variance_ratio, det)))
    return out


def _evaluate_packed(args):
    values, trial, arms = args
    from .config import ScenarioConfig

    return evaluate_trial(ScenarioConfig(values), trial, arms)


@dataclass(frozen=True)
class ArmStats:
    name: str
    d_w: tuple
    variance_ratio: tuple
    detection_rate: float
    variance_detection_rate: float
    fault_rate: float
    classifications: dict

    @property
    def d_w_mean(self):
        return float(np.mean(self.d_w))

    @property
    def d_w_std(self):
        return float(np.std(self.d_w, ddof=1)) if len(self.d_w) > 1 else 0.0

    def quantiles(self, qs=(0.05, 0.5, 0.95)):
        return {f"q{int(round(q * 100)):02d}": float(np.quantile(self.d_w, q)) for q in qs}

    def to_dict(self):
        return {
            "name": self.name,
            "d_w_mean": self.d_w_mean,
            "d_w_std": self.d_w_std,
            "d_w_min": float(np.min(self.d_w)),
            "d_w_max": float(np.max(self.d_w)),
            **{f"d_w_{k}": v for k, v in self.quantiles().items()},
            "variance_ratio_mean": float(np.mean(self.variance_ratio)),
            "detection_rate": self.detection_rate,
            "variance_detection_rate": self.variance_detection_rate,
            "fault_rate": self.fault_rate,
            "classifications": dict(self.classifications),
        }


@dataclass(frozen=True)
class ExperimentSummary:
    trials: int
    arms: tuple
    false_alarm_rate: float | None
    threshold_used: float
    master_seed: int
    runtime_s: float = 0.0

    def arm(self, name):
        for a in self.arms:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self, include_samples=False):
        d = {
            "trials": self.trials,
            "master_seed": self.master_seed,
            "threshold_used": self.threshold_used,
            "false_alarm_rate": self.false_alarm_rate,
            "runtime_s": self.runtime_s,
            "arms": [a.to_dict() for a in self.arms],
        }
        if include_samples:
            for ad, a in zip(d["arms"], self.arms):
                ad["d_w_samples"] = list(a.d_w)
                ad["variance_ratio_samples"] = list(a.variance_ratio)
        return d

    def digest(self):
        """SHA-256 over every number except the runtime."""
        d = self.to_dict(include_samples=True)
        d.pop("runtime_s")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def _aggregate(arm, outcomes):
    n = len(outcomes)
    counts = {}
    for o in outcomes:
        c = classify(DetectorVerdict(o.d_w, o.reported_mean_ratio, o.decision, o.fault_flag)).value
        counts[c] = counts.get(c, 0) + 1
    return ArmStats(
        name=arm.name,
        d_w=tuple(o.d_w for o in outcomes),
        variance_ratio=tuple(o.variance_ratio for o in outcomes),
        detection_rate=sum(o.decision is Decision.ATTACK_SUSPECTED for o in outcomes) / n,
        variance_detection_rate=sum(o.variance_alarm for o in outcomes) / n,
        fault_rate=sum(o.fault_flag for o in outcomes) / n,
        classifications=dict(sorted(counts.items())),
    )


def run_monte_carlo(cfg, trials=None, arms=None, workers=None) -> ExperimentSummary:
    """Independent end-to-end trials per arm, seeded by (master_seed, trial index)."""
    trials = cfg["montecarlo.trials"] if trials is None else int(trials)
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if arms is None:
        arms = parse_arms(cfg["montecarlo.arms"])
    arms = [parse_arm(a) if isinstance(a, str) else a for a in arms]
    if not arms:
        raise ParameterError("empty arm list")
    workers = cfg["montecarlo.workers"] if workers is None else int(workers)
    start = time.perf_counter()
    if workers > 1:
        jobs = [(cfg.to_dict(), i, arms) for i in range(trials)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(_evaluate_packed, jobs))
    else:
        per_trial = [evaluate_trial(cfg, i, arms) for i in range(trials)]
    stats = tuple(_aggregate(arm, [row[j] for row in per_trial]) for j, arm in enumerate(arms))
    far = next((s.detection_rate for s in stats if s.name == "none"), None)
    return ExperimentSummary(
        trials=trials,
        arms=stats,
        false_alarm_rate=far,
        threshold_used=cfg["detector.threshold"],
        master_seed=cfg["master_seed"],
        runtime_s=time.perf_counter() - start,
    )


# -- threshold calibration -----------------------------------------------------


@dataclass(frozen=True)
class Calibration:
    threshold: float
    false_alarm_rate: float
    miss_rate: float
    warning: str | None = None


def calibrate_threshold(no_attack_dw, attack_dw, target_far) -> Calibration:
    """Pick a D_w threshold with empirical false-alarm rate at most ``target_far``.

    Thresholds up to the ``target_far`` lower quantile of the no-attack sample
    meet the false-alarm bound; among those, the miss rate on ``attack_dw`` is
    lowest on an interval whose midpoint is returned, leaving the widest
    margin to both samples. A warning is attached (and issued) when more than
    half of the attack sample would still pass.
    """
    h0 = np.sort(np.asarray(no_attack_dw, dtype=np.float64))
    h1 = np.sort(np.asarray(attack_dw, dtype=np.float64))
    if h0.size == 0 or h1.size == 0:
        raise ParameterError("both samples must be non-empty")
    if not 0 < target_far < 1:
        raise ParameterError(f"target_far must be in (0, 1), got {target_far}")
    k = int(math.floor(target_far * h0.size + 1e-9))
    upper = h0[k]  # at most k no-attack values lie strictly below this
    below = h1[h1 < upper]
    theta = upper if below.size == 0 else 0.5 * (below[-1] + upper)
    far = float(np.mean(h0 < theta))
    miss = float(np.mean(h1 >= theta))
    warning = None
    if miss > 0.5:
        warning = (
            f"attack and no-attack D_w overlap: best threshold {theta:.4g} misses "
            f"{miss:.1%} of attacks at false-alarm rate {far:.1%}"
        )
        warnings.warn(warning, stacklevel=2)
    return Calibration(float(theta), far, miss, warning)
