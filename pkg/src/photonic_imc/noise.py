"""Random sources: programming noise, detector noise, pump fluctuation, seeding.

Every stochastic call takes an explicit ``numpy.random.Generator``. Streams
are built from integer seeds with :func:`make_rng`; child streams for
independent cells come from :func:`derive_seed`, which is a SplitMix64
mix of the parent seed and the child index, so the derivation is easy to
reproduce in any language.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


@dataclass(frozen=True)
class NoiseModel:
    """Stochastic parameters of the cell and the measurement chain.

    Attributes:
        write_sd: SD of the programmed level, as a fraction of the full
            programmable range ``t_prog_max``.
        detector_sd: SD of additive detector noise on output energies, pJ.
        pump_fluctuation_sd: relative SD of every delivered pulse energy.
    """

    write_sd: float = 0.0035
    detector_sd: float = 0.0
    pump_fluctuation_sd: float = 0.0

    def __post_init__(self):
        for name in ("write_sd", "detector_sd", "pump_fluctuation_sd"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")

    @classmethod
    def off(cls) -> "NoiseModel":
        return cls(write_sd=0.0, detector_sd=0.0, pump_fluctuation_sd=0.0)

    @property
    def is_zero(self) -> bool:
        return self.write_sd == 0 and self.detector_sd == 0 and self.pump_fluctuation_sd == 0


def splitmix64(value: int) -> int:
    """One SplitMix64 output step applied to ``value`` (64-bit wraparound)."""
    z = (value + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(parent: int, index: int) -> int:
    """Child seed for stream ``index`` under ``parent``.

    ``splitmix64(splitmix64(parent) ^ index)``, all arithmetic mod 2**64.
    """
    if index < 0:
        raise ValueError("index must be >= 0")
    return splitmix64(splitmix64(parent & _MASK64) ^ (index & _MASK64))


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & _MASK64))


def child_rng(parent_seed: int, index: int) -> np.random.Generator:
    return make_rng(derive_seed(parent_seed, index))


def sample_write_noise(model: NoiseModel, rng: np.random.Generator, t_prog_max: float, size=None):
    """Gaussian perturbation of a programmed level, SD ``write_sd * t_prog_max``.

    Returns exactly 0 (and draws nothing) when ``write_sd`` is 0.
    """
    if model.write_sd == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, model.write_sd * t_prog_max, size=size)


def sample_pump_factor(model: NoiseModel, rng: np.random.Generator, size=None):
    """Multiplicative factor applied to a nominal pulse energy."""
    if model.pump_fluctuation_sd == 0:
        return 1.0 if size is None else np.ones(size)
    factor = 1.0 + rng.normal(0.0, model.pump_fluctuation_sd, size=size)
    return np.maximum(factor, 0.0)


def sample_detector_noise(model: NoiseModel, rng: np.random.Generator, size=None):
    if model.detector_sd == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, model.detector_sd, size=size)
