"""Monte Carlo orchestration: trials, ensembles, parameter sweeps and the
four-technique scheme comparison.

A trial is a pure function of (config, trial_index): per-trial noise streams
make ensembles independent of execution order and degree of parallelism.
Error bars follow the across-trial convention: each trial yields one MSE
sample, the ensemble reports their mean and standard error.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from . import analytics
from .detection import FeedbackParams, run_adaptive_loop, run_dual_homodyne
from .errors import ConfigurationError, ParameterError, StatisticsError
from .estimators import EstimatorParams, apply_estimators, retained_window
from .stochastic import NoiseStream, ProcessParams, Role, SimGrid, simulate_ou

__all__ = [
    "ExperimentConfig",
    "TrialResult",
    "Condition",
    "VarianceReport",
    "GainComparison",
    "run_trial",
    "run_ensemble",
    "sweep",
    "compare_schemes",
    "default_edge_discard",
]

MIN_TRIALS_FOR_STDERR = 30


@dataclass(frozen=True)
class ExperimentConfig:
    """Complete description of one ensemble.

    ``beta`` is "auto" (resolve to sqrt(8*chi*N), adaptive scheme only), a
    positive number, or None for the dual scheme where no feedback runs.
    ``noise_scale`` scales all noise streams and exists for deterministic
    noise-free runs in tests; production runs leave it at 1.
    """

    params: ProcessParams
    grid: SimGrid
    estimator: EstimatorParams
    scheme: str = "adaptive"
    beta: float | str | None = "auto"
    omega0: float = 100.0
    phihat0: float = 0.0
    trials: int = 200
    master_seed: int = 424242
    noise_scale: float = 1.0
    dual_mode: str = "linearized"

    def __post_init__(self):
        if self.scheme not in analytics.SCHEMES:
            raise ParameterError(f"unknown scheme: {self.scheme!r}")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise ParameterError("trials must be an integer >= 1")
        if not isinstance(self.master_seed, int) or not 0 <= self.master_seed < 2**64:
            raise ParameterError("master_seed must be an integer in [0, 2**64)")
        if not (math.isfinite(self.noise_scale) and self.noise_scale >= 0):
            raise ParameterError("noise_scale must be finite and >= 0")
        if self.dual_mode not in ("linearized", "arg"):
            raise ParameterError(f"unknown dual_mode: {self.dual_mode!r}")
        if isinstance(self.beta, str):
            if self.beta != "auto":
                raise ParameterError(f"beta must be a number, 'auto' or None, got {self.beta!r}")
            if self.scheme != "adaptive":
                raise ParameterError("beta='auto' requires scheme='adaptive'")
        elif self.beta is None:
            if self.scheme == "adaptive":
                raise ParameterError("adaptive scheme requires a feedback gain beta")
        elif not (math.isfinite(self.beta) and self.beta > 0):
            raise ParameterError("beta must be finite and > 0")
        if self.scheme != "adaptive" and self.estimator.source == "phihat":
            raise ParameterError("source='phihat' requires the adaptive scheme")
        # fail early on an unstable loop or an over-long edge discard
        self.resolved_beta()
        self.resolved_edge_discard()

    def resolved_beta(self) -> float | None:
        if self.scheme != "adaptive":
            return None
        if self.beta == "auto":
            chi_ref = max(self.estimator.chi_minus, self.estimator.chi_plus)
            beta = analytics.optimal_beta(chi_ref, self.params.flux)
        else:
            beta = float(self.beta)
        if beta * self.grid.dt >= 0.5:
            raise ConfigurationError(
                f"resolved beta*dt = {beta * self.grid.dt:.3g} >= 0.5 (unstable loop)"
            )
        return beta

    def resolved_edge_discard(self) -> float:
        span = self.grid.duration - self.grid.warmup
        chi_min = min(self.estimator.chi_minus, self.estimator.chi_plus)
        if self.estimator.edge_discard is not None:
            edge = self.estimator.edge_discard
            if edge < 5.0 / chi_min:
                raise ParameterError(
                    "edge_discard must be >= 5/min(chi_minus, chi_plus) "
                    "when statistics are requested"
                )
        else:
            edge = default_edge_discard(
                chi_min, self.resolved_beta() if self.scheme == "adaptive" else None,
                self.params.lam, span,
            )
        if 2.0 * edge >= span:
            raise ConfigurationError(
                f"edge discard 2*{edge:.3g} s leaves no data in a {span:.3g} s window"
            )
        return edge


def default_edge_discard(chi_min: float, beta: float | None, lam: float, span: float) -> float:
    """Default symmetric discard: max(5/chi, 5/beta, 3/lam).

    The 3/lam term removes spans correlated with the trajectory ends; it only
    applies when it fits within a quarter of the retained span per side,
    otherwise the run is shorter than the phase coherence time (effectively
    pure diffusion) and the term is meaningless.
    """
    edge = 5.0 / chi_min
    if beta is not None:
        edge = max(edge, 5.0 / beta)
    if lam > 0 and 3.0 / lam <= span / 4.0:
        edge = max(edge, 3.0 / lam)
    return edge


@dataclass(frozen=True)
class TrialResult:
    """Per-trial mean-square errors over the retained window."""

    filtered_mse: float
    smoothed_mse: float
    backward_mse: float


def _trial_streams(config: ExperimentConfig, trial_index: int):
    mk = lambda role: NoiseStream(
        master_seed=config.master_seed,
        trial_index=trial_index,
        role=role,
        scale=config.noise_scale,
    )
    return mk(Role.PHASE_NOISE), mk(Role.MEASUREMENT_NOISE), mk(Role.MEASUREMENT_NOISE_2)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialResult:
    """Simulate one trial and return its three MSE samples.

    Deterministic in (config.master_seed, trial_index); trials of an ensemble
    may run in any order or in parallel without changing any result.
    """
    phase, meas1, meas2 = _trial_streams(config, trial_index)
    init = "stationary" if config.params.lam > 0 else 0.0
    phi = simulate_ou(config.params, config.grid, phase, init=init)

    if config.scheme == "adaptive":
        fb = FeedbackParams(
            beta=config.resolved_beta(), omega0=config.omega0, phihat0=config.phihat0
        )
        traj = run_adaptive_loop(phi, config.params, fb, config.grid, meas1)
        source = traj.theta if config.estimator.source == "theta" else traj.phihat
    else:
        traj = run_dual_homodyne(
            phi, config.params, config.grid, (meas1, meas2), mode=config.dual_mode
        )
        source = traj.theta

    est = apply_estimators(source, config.estimator, config.grid)
    i0, i1 = retained_window(config.grid, config.resolved_edge_discard())
    truth = phi[i0:i1]

    def mse(series):
        d = series[i0:i1] - truth
        return float(d @ d / d.size)

    return TrialResult(
        filtered_mse=mse(est.forward),
        smoothed_mse=mse(est.smoothed),
        backward_mse=mse(est.backward),
    )


@dataclass(frozen=True)
class Condition:
    """One (scheme, mode) cell of a report: MC estimate against theory."""

    scheme: str
    mode: str
    chi: float
    flux: float
    trials: int
    mc_mse: float
    mc_stderr: float
    analytic_mse: float
    z_score: float


@dataclass(frozen=True)
class VarianceReport:
    """Ensemble result: filtered and smoothed conditions plus the backward
    (retrodiction) condition kept separately for symmetry checks."""

    config: ExperimentConfig
    conditions: tuple[Condition, ...]
    backward: Condition

    def condition(self, mode: str) -> Condition:
        for c in self.conditions + (self.backward,):
            if c.mode == mode:
                return c
        raise ParameterError(f"report has no condition with mode {mode!r}")


def _condition(config, mode, chi, samples, analytic) -> Condition:
    mc = float(np.mean(samples))
    stderr = float(np.std(samples, ddof=1) / math.sqrt(len(samples)))
    if stderr == 0.0:
        raise StatisticsError("degenerate ensemble: no variation across trials")
    return Condition(
        scheme=config.scheme,
        mode=mode,
        chi=chi,
        flux=config.params.flux,
        trials=config.trials,
        mc_mse=mc,
        mc_stderr=stderr,
        analytic_mse=analytic,
        z_score=(mc - analytic) / stderr,
    )


def run_ensemble(config: ExperimentConfig, workers: int = 1) -> VarianceReport:
    """Aggregate ``config.trials`` independent trials into a VarianceReport.

    ``workers > 1`` distributes trials over processes; results are identical
    to a serial run because aggregation folds in trial-index order.
    """
    if config.trials < MIN_TRIALS_FOR_STDERR:
        raise StatisticsError(
            f"{config.trials} trials < {MIN_TRIALS_FOR_STDERR}: too few for error bars"
        )
    indices = range(config.trials)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(partial(run_trial, config), indices, chunksize=8))
    else:
        results = [run_trial(config, i) for i in indices]

    filt = np.array([r.filtered_mse for r in results])
    smth = np.array([r.smoothed_mse for r in results])
    back = np.array([r.backward_mse for r in results])

    p, e = config.params, config.estimator
    analytic_f = analytics.filtered_mse(p, e.chi_minus, config.scheme)
    analytic_b = analytics.filtered_mse(p, e.chi_plus, config.scheme)
    analytic_s = analytics.combined_mse(
        analytics.TheoryPoint(
            params=p, chi_minus=e.chi_minus, chi_plus=e.chi_plus,
            w_minus=e.w_minus, w_plus=e.w_plus, scheme=config.scheme,
        )
    )
    return VarianceReport(
        config=config,
        conditions=(
            _condition(config, "filtered", e.chi_minus, filt, analytic_f),
            _condition(config, "smoothed", e.chi_minus, smth, analytic_s),
        ),
        backward=_condition(config, "backward", e.chi_plus, back, analytic_b),
    )


def _check_sweep_values(values) -> np.ndarray:
    vals = np.asarray(values, dtype=float)
    if vals.ndim != 1 or vals.size == 0:
        raise ParameterError("sweep values must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise ParameterError("sweep values must be positive and finite")
    if np.any(np.diff(vals) <= 0):
        raise ParameterError("sweep values must be strictly ascending")
    return vals


def sweep(
    config: ExperimentConfig, axis: str, values, workers: int = 1
) -> list[VarianceReport]:
    """One ensemble per value of the swept axis.

    axis="chi": both averaging rates are set to the value and, for the
    adaptive scheme, beta follows sqrt(8*chi*N) per point. axis="flux": chi is
    re-optimized per point and per mode (each mode is measured at its own
    exact optimal rate), beta likewise, so the sweep traces the optimal MSEs.
    """
    vals = _check_sweep_values(values)
    reports = []
    if axis == "chi":
        for chi in vals:
            est = replace(config.estimator, chi_minus=float(chi), chi_plus=float(chi))
            beta = "auto" if config.scheme == "adaptive" else None
            reports.append(run_ensemble(replace(config, estimator=est, beta=beta), workers))
        return reports
    if axis == "flux":
        for flux in vals:
            params = replace(config.params, flux=float(flux))
            beta = "auto" if config.scheme == "adaptive" else None
            per_mode = {}
            for mode in ("filtered", "smoothed"):
                chi = analytics.optimal_chi(params, mode, config.scheme).chi_star
                est = replace(config.estimator, chi_minus=chi, chi_plus=chi)
                cfg = replace(config, params=params, estimator=est, beta=beta)
                per_mode[mode] = run_ensemble(cfg, workers)
            reports.append(
                VarianceReport(
                    config=per_mode["filtered"].config,
                    conditions=(
                        per_mode["filtered"].condition("filtered"),
                        per_mode["smoothed"].condition("smoothed"),
                    ),
                    backward=per_mode["filtered"].backward,
                )
            )
        return reports
    raise ParameterError(f"unknown sweep axis: {axis!r}")


@dataclass(frozen=True)
class GainComparison:
    """MC improvement ratios with propagated standard errors."""

    smoothing_gain: float
    smoothing_gain_stderr: float
    adaptive_gain: float
    adaptive_gain_stderr: float
    total_gain: float
    total_gain_stderr: float


def _ratio(num: Condition, den: Condition) -> tuple[float, float]:
    r = num.mc_mse / den.mc_mse
    rel = math.hypot(num.mc_stderr / num.mc_mse, den.mc_stderr / den.mc_mse)
    return r, r * rel


def compare_schemes(reports) -> GainComparison:
    """Four-technique comparison from matched ensemble reports.

    Requires a filtered and a smoothed condition for each scheme among the
    given reports (first match wins). The total gain is the analytic standard
    quantum limit of the adaptive report's parameters over the MC smoothed
    adaptive error.
    """
    found: dict[tuple[str, str], Condition] = {}
    adaptive_params = None
    for rep in reports:
        for cond in rep.conditions:
            found.setdefault((cond.scheme, cond.mode), cond)
        if rep.config.scheme == "adaptive" and adaptive_params is None:
            adaptive_params = rep.config.params
    needed = [(s, m) for s in analytics.SCHEMES for m in ("filtered", "smoothed")]
    missing = [key for key in needed if key not in found]
    if missing:
        raise ParameterError(f"unmatched conditions for comparison: {missing}")

    ap_f = found[("adaptive", "filtered")]
    ap_s = found[("adaptive", "smoothed")]
    dh_f = found[("dual_homodyne", "filtered")]

    smoothing, smoothing_err = _ratio(ap_f, ap_s)
    adaptive, adaptive_err = _ratio(dh_f, ap_f)
    sql = analytics.sql_mse(adaptive_params)
    total = sql / ap_s.mc_mse
    total_err = total * ap_s.mc_stderr / ap_s.mc_mse
    return GainComparison(
        smoothing_gain=smoothing,
        smoothing_gain_stderr=smoothing_err,
        adaptive_gain=adaptive,
        adaptive_gain_stderr=adaptive_err,
        total_gain=total,
        total_gain_stderr=total_err,
    )
