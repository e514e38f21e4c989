"""Seedable Wiener increments and exact Ornstein-Uhlenbeck trajectories.

Randomness is organized as counter-keyed streams: a (master_seed,
trial_index, role) triple maps to a fixed Philox key, so every trial of an
ensemble draws from its own statistically independent stream and results
never depend on execution order or thread scheduling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.signal import lfilter

from .errors import ParameterError

__all__ = [
    "Role",
    "NoiseStream",
    "ProcessParams",
    "SimGrid",
    "wiener_increments",
    "simulate_ou",
]

_MAX_SEED = 2**64


class Role(enum.IntEnum):
    """Which physical noise source a stream feeds."""

    PHASE_NOISE = 0          # drives the phase random walk
    MEASUREMENT_NOISE = 1    # shot noise of the (first) detector
    MEASUREMENT_NOISE_2 = 2  # shot noise of the second dual-homodyne arm


@dataclass(frozen=True)
class NoiseStream:
    """Identity of one reproducible Gaussian noise stream.

    ``scale`` multiplies every draw; ``scale=0.0`` yields a deterministic
    zero stream, which is how noise-free runs are configured in tests.
    """

    master_seed: int
    trial_index: int = 0
    role: Role = Role.PHASE_NOISE
    scale: float = 1.0

    def __post_init__(self):
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < _MAX_SEED:
            raise ParameterError("master_seed must be an integer in [0, 2**64)")
        if not isinstance(self.trial_index, int) or self.trial_index < 0:
            raise ParameterError("trial_index must be a non-negative integer")
        object.__setattr__(self, "role", Role(self.role))
        if not (math.isfinite(self.scale) and self.scale >= 0.0):
            raise ParameterError("scale must be finite and >= 0")

    @property
    def key(self) -> tuple[int, int]:
        return (self.master_seed, self.trial_index * 8 + int(self.role))

    def generator(self) -> Generator:
        """Fresh generator for this stream; identical identity, identical draws."""
        return Generator(Philox(key=np.array(self.key, dtype=np.uint64)))

    def normals(self, n: int) -> np.ndarray:
        """First ``n`` standard-normal draws of the stream, times ``scale``."""
        if not isinstance(n, int) or n < 0:
            raise ParameterError("n must be a non-negative integer")
        z = self.generator().standard_normal(n)
        if self.scale != 1.0:
            z *= self.scale
        return z


@dataclass(frozen=True)
class ProcessParams:
    """Physical triple defining the signal and the measurement strength.

    kappa : phase diffusion rate [rad^2/s]
    lam   : mean-reversion rate of the phase [1/s]; 0 gives pure diffusion
    flux  : photon flux of the probe beam [1/s]
    """

    kappa: float
    lam: float
    flux: float

    def __post_init__(self):
        for name in ("kappa", "lam", "flux"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v)):
                raise ParameterError(f"{name} must be finite")
        if self.kappa <= 0:
            raise ParameterError("kappa must be > 0")
        if self.flux <= 0:
            raise ParameterError("flux must be > 0")
        if self.lam < 0:
            raise ParameterError("lam must be >= 0")

    @property
    def stationary_variance(self) -> float:
        if self.lam == 0:
            raise ParameterError("pure diffusion (lam = 0) has no stationary variance")
        return self.kappa / (2.0 * self.lam)


@dataclass(frozen=True)
class SimGrid:
    """Uniform time grid: step dt, total duration, and a warm-up span that
    is discarded before any statistics are taken."""

    dt: float
    duration: float
    warmup: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ParameterError("dt must be finite and > 0")
        if not (math.isfinite(self.duration) and self.duration > 0):
            raise ParameterError("duration must be finite and > 0")
        if not (math.isfinite(self.warmup) and 0 <= self.warmup < self.duration):
            raise ParameterError("warmup must satisfy 0 <= warmup < duration")
        if self.n_steps < 2:
            raise ParameterError("grid must contain at least 2 steps")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps) * self.dt


def wiener_increments(stream: NoiseStream, n: int, dt: float) -> np.ndarray:
    """``n`` independent Gaussian increments of mean 0 and variance ``dt``.

    Pure function of the stream identity: calling twice returns
    bit-identical arrays. ``dt = 0`` returns exact zeros.
    """
    if not (isinstance(dt, (int, float)) and math.isfinite(dt) and dt >= 0):
        raise ParameterError("dt must be finite and >= 0")
    return stream.normals(n) * math.sqrt(dt)


def simulate_ou(
    params: ProcessParams,
    grid: SimGrid,
    stream: NoiseStream,
    init: float | str = "stationary",
) -> np.ndarray:
    """Phase trajectory of the mean-reverting diffusion on the grid.

    Uses the exact one-step transition
        phi[k+1] = phi[k] * exp(-lam*dt) + sqrt(kappa*(1 - exp(-2*lam*dt))/(2*lam)) * z[k]
    so the sampled law has no discretization bias at any dt. For lam = 0 the
    degenerate pure-diffusion update phi[k+1] = phi[k] + sqrt(kappa)*dV[k]
    is used and only a fixed initial value is allowed.

    ``init`` is either the string "stationary" (draw phi[0] from the
    stationary Gaussian of variance kappa/(2*lam)) or a number.
    """
    n, dt = grid.n_steps, grid.dt
    stationary = isinstance(init, str)
    if stationary:
        if init != "stationary":
            raise ParameterError(f"unknown init mode: {init!r}")
        if params.lam == 0:
            raise ParameterError("stationary init undefined for lam = 0")
    else:
        if not math.isfinite(float(init)):
            raise ParameterError("fixed init must be finite")

    z = stream.normals(n)  # z[0] seeds the initial condition in stationary mode

    if params.lam == 0:
        phi = np.empty(n)
        phi[0] = float(init)
        np.cumsum(math.sqrt(params.kappa * dt) * z[1:], out=phi[1:])
        phi[1:] += phi[0]
        return phi

    decay = math.exp(-params.lam * dt)
    step_sd = math.sqrt(params.kappa * (1.0 - math.exp(-2.0 * params.lam * dt)) / (2.0 * params.lam))
    x = step_sd * z
    x[0] = math.sqrt(params.stationary_variance) * z[0] if stationary else float(init)
    return lfilter([1.0], [1.0, -decay], x)
