"""Attacker on the sensor line.

The proportional attack needs only the intercepted report and the public
nominal peak voltage: subtracting ``a0`` leaves ``a0 * (N_wd + N_pd)``, which
is rescaled and added to a rescaled level. ``split_noise`` mode scales the two
noises independently and therefore needs the separate noise arrays, which
only a simulation can supply.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .sensor import EnvelopeSeries
from .signals import SampledSignal


class AttackMode(str, enum.Enum):
    PROPORTIONAL = "proportional"
    SPLIT_NOISE = "split_noise"


class NoiseReference(str, enum.Enum):
    NOMINAL = "nominal"
    ESTIMATED_MEAN = "estimated_mean"


@dataclass(frozen=True)
class AttackParams:
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    mode: AttackMode = AttackMode.PROPORTIONAL
    delay_samples: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", AttackMode(self.mode))
        for name in ("alpha", "beta", "gamma"):
            if not getattr(self, name) >= 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.mode is AttackMode.PROPORTIONAL and self.beta != self.gamma:
            raise ParameterError(
                "proportional mode needs beta == gamma: the extracted noise is the sum "
                "N_wd + N_pd and cannot be split"
            )
        if self.delay_samples < 0:
            raise ParameterError("delay_samples must be >= 0")

    @classmethod
    def proportional(cls, k, delay_samples=0):
        return cls(k, k, k, AttackMode.PROPORTIONAL, delay_samples)


def extract_noise(s: EnvelopeSeries, a0_nominal: float, reference=NoiseReference.NOMINAL) -> SampledSignal:
    """``S - a0``: the combined noise in volts at the report rate."""
    if not a0_nominal > 0:
        raise ParameterError(f"a0_nominal must be > 0, got {a0_nominal}")
    level = a0_nominal if NoiseReference(reference) is NoiseReference.NOMINAL else s.values_v.mean()
    return SampledSignal(s.values_v - level, s.rate_hz, s.t0_s)


def _delayed(x, d):
    if d == 0:
        return x
    out = np.zeros_like(x)
    out[d:] = x[: len(x) - d]
    return out


def synthesize_fake(extracted: SampledSignal, p: AttackParams, a0_nominal: float, split_noises=None) -> EnvelopeSeries:
    """Fake report ``alpha*a0 + beta*N_wd + gamma*N_pd`` (noises in volts).

    Proportional mode uses ``extracted`` for the summed noise. ``split_noises``
    is the ``(n_wd, n_pd)`` pair of dimensionless arrays on the report grid,
    required in split_noise mode. The noise part is delayed by
    ``p.delay_samples`` reports; the first reports carry the level only.
    """
    if p.mode is AttackMode.PROPORTIONAL:
        noise = p.beta * extracted.samples
    else:
        if split_noises is None:
            raise ParameterError("split_noise mode needs the separate (n_wd, n_pd) arrays")
        n_wd, n_pd = (np.asarray(a, dtype=np.float64) for a in split_noises)
        if n_wd.shape != extracted.samples.shape or n_pd.shape != extracted.samples.shape:
            raise ParameterError("split noises must match the extracted series length")
        noise = p.beta * a0_nominal * n_wd + p.gamma * a0_nominal * n_pd
    values = p.alpha * a0_nominal + _delayed(noise, p.delay_samples)
    return EnvelopeSeries(values, extracted.sample_rate_hz, extracted.t0_s)


def naive_attack(a0_nominal: float, alpha: float, duration_s: float, rate_hz: float, t0_s: float | None = None) -> EnvelopeSeries:
    """Constant ``alpha*a0`` report with no noise, on the sensor's report grid."""
    if not alpha >= 0:
        raise ParameterError(f"alpha must be >= 0, got {alpha}")
    n = int(round(duration_s * rate_hz))
    if n < 1:
        raise ParameterError("duration shorter than one report")
    return EnvelopeSeries(
        np.full(n, alpha * a0_nominal), rate_hz, 1.0 / rate_hz if t0_s is None else t0_s
    )
