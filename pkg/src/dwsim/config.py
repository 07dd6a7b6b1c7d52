"""Scenario configuration: a flat ``key = value`` file with dotted keys.

Every parameter the pipeline consumes is listed in :data:`SCHEMA` together
with its type and default; unknown keys are rejected. Blank lines and text
after ``#`` are ignored. ``none`` (or an empty value) is accepted for the
optional seed keys, meaning "derive from ``master_seed``".
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .attacker import AttackMode, AttackParams, NoiseReference
from .controller import DetectorConfig, Normalization
from .errors import ConfigError, ParameterError
from .grid import GridParams
from .sensor import FilterMode, SensorConfig
from .signals import NoiseSpec


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _seed(text):
    if text is None or str(text).strip().lower() in ("", "none"):
        return None
    v = int(str(text).strip(), 0)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in 64 bits")
    return v


def _u64(text):
    v = _seed(text)
    if v is None:
        raise ValueError("a seed value is required")
    return v


def _choice(*options):
    def parse(text):
        t = str(text).strip()
        if t not in options:
            raise ValueError(f"expected one of {', '.join(options)}; got {t!r}")
        return t

    return parse


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


# key -> (parser, default, description)
SCHEMA = {
    "a0_rms_v": (_float, 100e3, "nominal line voltage, rms volts (peak = rms * sqrt 2)"),
    "f_g_hz": (_float, 60.0, "grid frequency"),
    "phi0_rad": (_float, 0.0, "grid phase"),
    "grid.strict_frequency": (_bool, True, "reject (true) or warn (false) off-band f_g"),
    "nw_rms": (_float, 0.3, "watermark rms (dimensionless)"),
    "nw_bandwidth_hz": (_float, 1.0, "watermark bandwidth"),
    "nw_seed": (_seed, None, "watermark seed; none derives it from master_seed"),
    "np_rms": (_float, 0.2, "parasitic noise rms (dimensionless)"),
    "np_bandwidth_hz": (_float, 0.5, "parasitic noise bandwidth"),
    "np_seed": (_seed, None, "parasitic seed; none derives it from master_seed"),
    "duration_s": (_float, 60.0, "record length"),
    "sample_rate_hz": (_float, 6000.0, "simulation sample rate"),
    "master_seed": (_u64, 0, "root of all derived seeds"),
    "sensor.phase_error_rad": (_float, 0.0, "static phase error of the sensor reference"),
    "sensor.filter_mode": (_choice("boxcar_average", "lowpass"), "boxcar_average", "envelope filter"),
    "sensor.report_rate_hz": (_float, 120.0, "sensor report rate"),
    "detector.t0_s": (_float, 60.0, "correlation averaging time"),
    "detector.threshold": (_float, 0.5, "D_w decision threshold"),
    "detector.normalization": (_choice("nominal_a0", "reported_mean"), "reported_mean", "reference level"),
    "detector.fault_band_lo": (_float, 0.95, "lowest acceptable mean(S)/a0"),
    "detector.fault_band_hi": (_float, 1.05, "highest acceptable mean(S)/a0"),
    "detector.variance_band_lo": (_float, 0.6, "lowest acceptable variance ratio"),
    "detector.variance_band_hi": (_float, 1.4, "highest acceptable variance ratio"),
    "attack.enabled": (_bool, False, "replace the sensor report by a fake"),
    "attack.alpha": (_float, 0.5, "level scale"),
    "attack.beta": (_float, 0.5, "watermark-noise scale"),
    "attack.gamma": (_float, 0.5, "parasitic-noise scale"),
    "attack.mode": (_choice("proportional", "split_noise", "naive"), "proportional", "fake synthesis"),
    "attack.delay_samples": (int, 0, "fake noise delay, in reports"),
    "attack.noise_reference": (_choice("nominal", "estimated_mean"), "nominal", "level subtracted by the attacker"),
    "montecarlo.trials": (int, 100, "trials per arm"),
    "montecarlo.arms": (str, "none,naive:1.0,proportional:0.5", "comma-separated arm specs"),
    "montecarlo.workers": (int, 1, "worker processes"),
    "calibrate.target_far": (_float, 0.05, "target false-alarm rate"),
    "output.plots": (_bool, True, "render PNG plots next to the CSVs"),
    "out_dir": (str, "out", "output directory"),
}

PRESETS = ("figure_suite", "figure12_attack")


def parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(key, "unknown configuration key")
    parser = SCHEMA[key][0]
    try:
        return parser(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(key, f"invalid value {text!r} ({exc})") from None


def parse_text(text, source="<config>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}", f"expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        values[key] = parse_value(key, value.strip())
    return values


def parse_override(item):
    """Parse one ``key=value`` command-line override."""
    if "=" not in item:
        raise ConfigError(item, "override must be key=value")
    key, _, value = item.partition("=")
    return key.strip(), parse_value(key.strip(), value.strip())


def read_values(path):
    """Keys set explicitly in a config file (no defaults filled in)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from exc
    return parse_text(text, str(path))


def _format(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def derive_seeds(master_seed, trial):
    """Watermark and parasitic seeds for one trial; depends only on the two inputs."""
    state = np.random.SeedSequence([int(master_seed), int(trial)]).generate_state(2, dtype=np.uint64)
    return int(state[0]), int(state[1])


@dataclass(frozen=True)
class ScenarioConfig:
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = {k: spec[1] for k, spec in SCHEMA.items()}
        for k, v in self.values.items():
            if k not in SCHEMA:
                raise ConfigError(k, "unknown configuration key")
            merged[k] = v
        object.__setattr__(self, "values", merged)
        self.validate()

    def __getitem__(self, key):
        return self.values[key]

    @classmethod
    def from_text(cls, text, source="<config>"):
        return cls(parse_text(text, source))

    @classmethod
    def from_file(cls, path):
        return cls(read_values(path))

    @classmethod
    def preset(cls, name):
        if name not in PRESETS:
            raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
        text = resources.files("dwsim").joinpath("presets", f"{name}.cfg").read_text(encoding="utf-8")
        return cls.from_text(text, f"preset:{name}")

    def with_overrides(self, overrides):
        return ScenarioConfig({**self.values, **dict(overrides)})

    def to_text(self):
        return "".join(f"{k} = {_format(self.values[k])}\n" for k in SCHEMA)

    def to_dict(self):
        return {k: self.values[k] for k in SCHEMA}

    # builders -----------------------------------------------------------

    def grid(self):
        with _keyed("a0_rms_v"):
            return GridParams.from_rms(
                self["a0_rms_v"], self["f_g_hz"], self["phi0_rad"], self["grid.strict_frequency"]
            )

    def seeds(self, trial=0):
        """Noise seeds: pinned values when set, otherwise derived per trial."""
        nw, np_ = derive_seeds(self["master_seed"], trial)
        return (
            nw if self["nw_seed"] is None else self["nw_seed"],
            np_ if self["np_seed"] is None else self["np_seed"],
        )

    def noise_specs(self, nw_seed, np_seed):
        with _keyed("nw_rms"):
            nw = NoiseSpec(self["nw_rms"], self["nw_bandwidth_hz"], nw_seed)
        with _keyed("np_rms"):
            np_ = NoiseSpec(self["np_rms"], self["np_bandwidth_hz"], np_seed)
        return nw, np_

    def sensor(self):
        with _keyed("sensor.filter_mode"):
            return SensorConfig(
                carrier_freq_hz=self["f_g_hz"],
                carrier_phase_rad=self["phi0_rad"] + self["sensor.phase_error_rad"],
                report_rate_hz=self["sensor.report_rate_hz"],
                filter_mode=FilterMode(self["sensor.filter_mode"]),
                lowpass_bandwidth_hz=max(self["nw_bandwidth_hz"], self["np_bandwidth_hz"]),
            )

    def detector(self):
        with _keyed("detector.threshold"):
            return DetectorConfig(
                t0_s=self["detector.t0_s"],
                threshold=self["detector.threshold"],
                normalization=Normalization(self["detector.normalization"]),
                expected_nw_ms=self["nw_rms"] ** 2,
                fault_band=(self["detector.fault_band_lo"], self["detector.fault_band_hi"]),
                expected_total_ms=self["nw_rms"] ** 2 + self["np_rms"] ** 2,
                variance_band=(self["detector.variance_band_lo"], self["detector.variance_band_hi"]),
            )

    def attack(self):
        """AttackParams for the configured fake, or None for the naive mode."""
        if self["attack.mode"] == "naive":
            return None
        with _keyed("attack.mode"):
            return AttackParams(
                self["attack.alpha"],
                self["attack.beta"],
                self["attack.gamma"],
                AttackMode(self["attack.mode"]),
                self["attack.delay_samples"],
            )

    @property
    def noise_reference(self):
        return NoiseReference(self["attack.noise_reference"])

    def validate(self):
        for key, check in (
            ("duration_s", self["duration_s"] > 0),
            ("sample_rate_hz", self["sample_rate_hz"] > 0),
            ("montecarlo.trials", self["montecarlo.trials"] >= 1),
            ("montecarlo.workers", self["montecarlo.workers"] >= 1),
            ("calibrate.target_far", 0 < self["calibrate.target_far"] < 1),
            ("detector.t0_s", self["detector.t0_s"] <= self["duration_s"]),
        ):
            if not check:
                raise ConfigError(key, f"invalid value {self[key]!r}")
        self.grid()
        self.noise_specs(0, 0)
        self.sensor()
        self.detector()
        self.attack()
        from .harness import parse_arms

        with _keyed("montecarlo.arms"):
            parse_arms(self["montecarlo.arms"])


class _keyed:
    """Re-raise ParameterError from a builder as ConfigError naming ``key``."""

    def __init__(self, key):
        self.key = key

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None and issubclass(exc_type, ParameterError):
            raise ConfigError(self.key, str(exc)) from exc
        return False
