"""Offline phase estimators: causal, anticausal and time-symmetric averaging.

The estimators are exponential-kernel weighted averages of an instantaneous
estimate series. The causal branch uses only past samples (filtering), the
anticausal branch only future samples (retrodiction), and their affine
combination is the time-symmetric (smoothed) estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import ConfigurationError, ParameterError, StatisticsError
from .stochastic import SimGrid

__all__ = [
    "EstimatorParams",
    "EstimateSeries",
    "MseStats",
    "causal_exponential_average",
    "anticausal_exponential_average",
    "combine_smoothed",
    "apply_estimators",
    "empirical_mse",
]

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class EstimatorParams:
    """Averaging rates (1/s) and combination weights of the final estimators.

    ``source`` selects which series of the trajectory is averaged: the
    instantaneous estimate ("theta") or the feedback loop's running estimate
    ("phihat"). ``edge_discard`` (seconds, both ends) is the span excluded
    from statistics; None selects the default policy of the experiment module.
    """

    chi_minus: float
    chi_plus: float
    w_minus: float = 0.5
    w_plus: float = 0.5
    source: str = "theta"
    edge_discard: float | None = None

    def __post_init__(self):
        for name in ("chi_minus", "chi_plus"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0")
        if not (math.isfinite(self.w_minus) and math.isfinite(self.w_plus)):
            raise ParameterError("weights must be finite")
        if abs(self.w_minus + self.w_plus - 1.0) > WEIGHT_SUM_TOL:
            raise ParameterError("w_minus + w_plus must sum to 1")
        if self.source not in ("theta", "phihat"):
            raise ParameterError(f"unknown estimator source: {self.source!r}")
        if self.edge_discard is not None and not (
            math.isfinite(self.edge_discard) and self.edge_discard >= 0
        ):
            raise ParameterError("edge_discard must be finite and >= 0")


@dataclass(frozen=True)
class EstimateSeries:
    """Forward, backward and smoothed estimate series on a common grid.

    ``smoothed == w_minus*forward + w_plus*backward`` by construction.
    """

    grid: SimGrid
    forward: np.ndarray
    backward: np.ndarray
    smoothed: np.ndarray


@dataclass(frozen=True)
class MseStats:
    """Mean-square error with a batch-means standard error over n_eff batches."""

    mse: float
    std_error: float
    n_eff: int


def _check_rate(chi: float, dt: float):
    if not (math.isfinite(chi) and chi > 0):
        raise ParameterError("chi must be finite and > 0")
    if not (math.isfinite(dt) and dt > 0):
        raise ParameterError("dt must be finite and > 0")
    if chi * dt >= 0.5:
        raise ConfigurationError(
            f"chi*dt = {chi * dt:.3g} >= 0.5: grid too coarse for this averaging rate"
        )


def causal_exponential_average(series, chi: float, dt: float) -> np.ndarray:
    """Exponentially weighted average over past samples.

    Discrete realization of chi * integral of exp(-chi*(t-s)) x(s) ds over
    s <= t, via the exact-decay recursion

        y[k] = a*y[k-1] + (1-a)*x[k],   a = exp(-chi*dt),   y[0] = x[0].

    The (1-a) input weight makes the DC gain exactly 1 at any chi*dt.
    """
    _check_rate(chi, dt)
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        return x.copy()
    a = math.exp(-chi * dt)
    return lfilter([1.0 - a], [1.0, -a], x, zi=[a * x[0]])[0]


def anticausal_exponential_average(series, chi: float, dt: float) -> np.ndarray:
    """Mirror image of the causal average: weights future samples.

    Defined as reverse -> causal -> reverse, which makes the identity
    ``anticausal(x) == reverse(causal(reverse(x)))`` hold bit-exactly.
    """
    x = np.asarray(series, dtype=float)
    return causal_exponential_average(x[::-1], chi, dt)[::-1]


def combine_smoothed(forward, backward, params: EstimatorParams) -> np.ndarray:
    """Pointwise affine combination w_minus*forward + w_plus*backward."""
    f = np.asarray(forward, dtype=float)
    b = np.asarray(backward, dtype=float)
    if f.shape != b.shape:
        raise ParameterError("forward and backward series must have equal length")
    if abs(params.w_minus + params.w_plus - 1.0) > WEIGHT_SUM_TOL:
        raise ParameterError("w_minus + w_plus must sum to 1")
    return params.w_minus * f + params.w_plus * b


def apply_estimators(series, params: EstimatorParams, grid: SimGrid) -> EstimateSeries:
    """Run all three estimators over one input series."""
    forward = causal_exponential_average(series, params.chi_minus, grid.dt)
    backward = anticausal_exponential_average(series, params.chi_plus, grid.dt)
    smoothed = combine_smoothed(forward, backward, params)
    return EstimateSeries(grid=grid, forward=forward, backward=backward, smoothed=smoothed)


def retained_window(grid: SimGrid, edge_discard: float) -> tuple[int, int]:
    """Index window [i0, i1) after dropping warmup and the edge spans."""
    if not (math.isfinite(edge_discard) and edge_discard >= 0):
        raise ParameterError("edge_discard must be finite and >= 0")
    if 2.0 * edge_discard >= grid.duration - grid.warmup:
        raise ParameterError(
            "edge_discard too large: 2*edge_discard must be < duration - warmup"
        )
    i0 = int(round((grid.warmup + edge_discard) / grid.dt))
    i1 = grid.n_steps - int(round(edge_discard / grid.dt))
    if i1 - i0 < 2:
        raise ParameterError("retained window is empty")
    return i0, i1


def empirical_mse(
    estimate,
    truth,
    grid: SimGrid,
    edge_discard: float,
    batch_time: float | None = None,
) -> MseStats:
    """Mean-square deviation over the retained window, with batch-means errors.

    The standard error comes from batch means so that autocorrelation of the
    deviation (timescales 1/chi and 1/lam for these estimators) is accounted
    for; pass ``batch_time`` of at least 10 correlation times. The default
    splits the retained window into 30 batches. Fewer than 10 batches raises
    StatisticsError.
    """
    e = np.asarray(estimate, dtype=float)
    t = np.asarray(truth, dtype=float)
    if e.shape != t.shape:
        raise ParameterError("estimate and truth must have equal length")
    if len(e) != grid.n_steps:
        raise ParameterError("series length must equal grid.n_steps")

    i0, i1 = retained_window(grid, edge_discard)
    sq = np.square(e[i0:i1] - t[i0:i1])
    mse = float(sq.mean())

    span = len(sq) * grid.dt
    if batch_time is None:
        batch_time = span / 30.0
    if not (math.isfinite(batch_time) and batch_time > 0):
        raise ParameterError("batch_time must be finite and > 0")
    n_batches = int(span / batch_time)
    if n_batches < 10:
        raise StatisticsError(
            f"only {n_batches} batches of {batch_time:.3g} s fit in {span:.3g} s; "
            "need >= 10 (run too short)"
        )
    batch_len = len(sq) // n_batches
    means = sq[: n_batches * batch_len].reshape(n_batches, batch_len).mean(axis=1)
    std_error = float(means.std(ddof=1) / math.sqrt(n_batches))
    return MseStats(mse=mse, std_error=std_error, n_eff=n_batches)
