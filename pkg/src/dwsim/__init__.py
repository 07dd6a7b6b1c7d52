"""Simulator for dynamic watermarking on an AC grid voltage sensor.

The signal chain runs from a watermarked 60 Hz line voltage through a
synchronous-detection sensor to a controller that correlates the reported
envelope with its private watermark. An attacker on the sensor line can
replay the extracted noise at any scale.

Typical entry points::

    from dwsim import ScenarioConfig, run_scenario, run_monte_carlo

    result = run_scenario(ScenarioConfig.preset("figure12_attack"))
    result.classification          # Classification.FAULT_SUSPECTED
"""

from .config import ScenarioConfig
from .controller import Classification, Decision, DetectorConfig, crosscorr_detect, variance_detect
from .errors import ConfigError, DegenerateInputError, ParameterError
from .harness import calibrate_threshold, emit_outputs, run_monte_carlo, run_scenario
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "Classification",
    "ConfigError",
    "Decision",
    "DegenerateInputError",
    "DetectorConfig",
    "KERNEL_BACKEND",
    "ParameterError",
    "ScenarioConfig",
    "calibrate_threshold",
    "crosscorr_detect",
    "emit_outputs",
    "run_monte_carlo",
    "run_scenario",
    "variance_detect",
]
