"""Closed-form error theory for the exponential-kernel phase estimators.

Every mean-square error, correlation, optimum and limit used to judge the
Monte Carlo results. All formulas assume the ideal shot-noise-limited
detector; the dual-homodyne scheme is the same algebra with the flux halved
(each arm of the split beam carries N/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import ConfigurationError, ParameterError
from .estimators import WEIGHT_SUM_TOL
from .stochastic import ProcessParams

__all__ = [
    "SCHEMES",
    "TheoryPoint",
    "OptimalChi",
    "ImprovementRatios",
    "effective_flux",
    "filtered_mse",
    "forward_backward_correlation",
    "combined_mse",
    "smoothed_mse",
    "optimal_chi",
    "sql_mse",
    "optimal_beta",
    "xi",
    "improvement_ratios",
]

SCHEMES = ("adaptive", "dual_homodyne")


def effective_flux(params: ProcessParams, scheme: str) -> float:
    """Flux entering the error formulas: N for adaptive, N/2 for dual homodyne."""
    if scheme not in SCHEMES:
        raise ParameterError(f"unknown scheme: {scheme!r}")
    return params.flux if scheme == "adaptive" else params.flux / 2.0


@dataclass(frozen=True)
class TheoryPoint:
    """One evaluation point: process parameters, estimator rates and weights."""

    params: ProcessParams
    chi_minus: float
    chi_plus: float
    w_minus: float = 0.5
    w_plus: float = 0.5
    scheme: str = "adaptive"

    def __post_init__(self):
        for name in ("chi_minus", "chi_plus"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ParameterError(f"{name} must be finite and > 0")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"unknown scheme: {self.scheme!r}")


def _check_chi(chi: float):
    if not (math.isfinite(chi) and chi > 0):
        raise ParameterError("chi must be finite and > 0")


def filtered_mse(params: ProcessParams, chi: float, scheme: str = "adaptive") -> float:
    """Stationary MSE of the causal (or anticausal) estimator:
    kappa/(2*(chi+lam)) + chi/(8*N')."""
    _check_chi(chi)
    n_eff = effective_flux(params, scheme)
    return params.kappa / (2.0 * (chi + params.lam)) + chi / (8.0 * n_eff)


def forward_backward_correlation(
    params: ProcessParams, chi_minus: float, chi_plus: float
) -> float:
    """Error cross-covariance of the forward and backward estimators:
    kappa*lam/(2*(chi_minus+lam)*(chi_plus+lam)). Pure signal term, so it is
    scheme independent and vanishes for pure diffusion."""
    _check_chi(chi_minus)
    _check_chi(chi_plus)
    return params.kappa * params.lam / (
        2.0 * (chi_minus + params.lam) * (chi_plus + params.lam)
    )


def combined_mse(point: TheoryPoint) -> float:
    """MSE of the affine combination w-*forward + w+*backward."""
    if abs(point.w_minus + point.w_plus - 1.0) > WEIGHT_SUM_TOL:
        raise ParameterError("w_minus + w_plus must sum to 1")
    p = point.params
    vm = filtered_mse(p, point.chi_minus, point.scheme)
    vp = filtered_mse(p, point.chi_plus, point.scheme)
    cc = forward_backward_correlation(p, point.chi_minus, point.chi_plus)
    return point.w_minus**2 * vm + point.w_plus**2 * vp + 2.0 * point.w_minus * point.w_plus * cc


def smoothed_mse(params: ProcessParams, chi: float, scheme: str = "adaptive") -> float:
    """MSE at the symmetric optimum (equal rates, weights 1/2):
    kappa*(chi+2*lam)/(4*(chi+lam)^2) + chi/(16*N')."""
    _check_chi(chi)
    n_eff = effective_flux(params, scheme)
    return params.kappa * (chi + 2.0 * params.lam) / (4.0 * (chi + params.lam) ** 2) + chi / (
        16.0 * n_eff
    )


@dataclass(frozen=True)
class OptimalChi:
    """Minimizing averaging rate and its MSE; ``at_boundary`` flags the
    degenerate case where the stationary point falls at chi <= 0 and the
    infimum is approached as chi -> 0."""

    chi_star: float
    mse_star: float
    at_boundary: bool = False


def optimal_chi(params: ProcessParams, mode: str, scheme: str = "adaptive") -> OptimalChi:
    """Exact minimizer of the filtered or smoothed MSE over chi.

    filtered: the stationary point is chi* = 2*sqrt(kappa*N') - lam in closed
    form. smoothed: chi* solves (chi+lam)^3 = 4*kappa*N'*(chi+3*lam), found by
    bracketed root-finding to 1e-10 relative tolerance.
    """
    n_eff = effective_flux(params, scheme)
    k, lam = params.kappa, params.lam
    if mode == "filtered":
        chi_star = 2.0 * math.sqrt(k * n_eff) - lam
        if chi_star <= 0:
            return OptimalChi(chi_star=0.0, mse_star=k / (2.0 * lam), at_boundary=True)
        return OptimalChi(chi_star=chi_star, mse_star=filtered_mse(params, chi_star, scheme))
    if mode == "smoothed":
        def slope_sign(chi):
            return (chi + lam) ** 3 - 4.0 * k * n_eff * (chi + 3.0 * lam)

        hi = 10.0 * 2.0 * math.sqrt(k * n_eff)
        lo = 1e-12 * hi
        if slope_sign(lo) >= 0:
            # MSE already increasing at chi -> 0: no interior minimum
            return OptimalChi(chi_star=0.0, mse_star=k / (2.0 * lam), at_boundary=True)
        if slope_sign(hi) <= 0:
            raise ConfigurationError("no bracket for the smoothed optimum")
        chi_star = brentq(slope_sign, lo, hi, rtol=1e-10)
        return OptimalChi(chi_star=chi_star, mse_star=smoothed_mse(params, chi_star, scheme))
    raise ParameterError(f"unknown optimization mode: {mode!r}")


def sql_mse(params: ProcessParams) -> float:
    """Standard quantum limit: ideal non-adaptive filtering in the small-xi
    limit, sqrt(kappa/(N/2))/2."""
    return math.sqrt(params.kappa / (params.flux / 2.0)) / 2.0


def optimal_beta(chi: float, flux: float) -> float:
    """Feedback gain minimizing the filtered error at averaging rate chi:
    sqrt(8*chi*N)."""
    _check_chi(chi)
    if not (math.isfinite(flux) and flux > 0):
        raise ParameterError("flux must be finite and > 0")
    return math.sqrt(8.0 * chi * flux)


def xi(params: ProcessParams) -> float:
    """Dimensionless regime parameter lam/(2*sqrt(kappa*N)); the limit-form
    optima hold for xi << 1."""
    return params.lam / (2.0 * math.sqrt(params.kappa * params.flux))


@dataclass(frozen=True)
class ImprovementRatios:
    """Headline gains of the scheme comparison.

    smoothing_gain   : filtered/smoothed MSE ratio at chi = 2*sqrt(kappa*N)
    adaptive_gain    : limit-form optimal dual/adaptive MSE ratio (= sqrt(2))
    total_gain_limit : SQL over the limit-form smoothed adaptive optimum (= 2*sqrt(2))
    total_gain_exact : SQL over the exact smoothed adaptive optimum
    """

    smoothing_gain: float
    adaptive_gain: float
    total_gain_limit: float
    total_gain_exact: float


def improvement_ratios(params: ProcessParams) -> ImprovementRatios:
    chi_lim = 2.0 * math.sqrt(params.kappa * params.flux)
    smoothing = filtered_mse(params, chi_lim) / smoothed_mse(params, chi_lim)
    limit_adaptive = math.sqrt(params.kappa / params.flux) / 2.0
    limit_dual = math.sqrt(params.kappa / (params.flux / 2.0)) / 2.0
    adaptive = limit_dual / limit_adaptive
    total_limit = sql_mse(params) / (math.sqrt(params.kappa / params.flux) / 4.0)
    exact_best = optimal_chi(params, "smoothed", "adaptive")
    total_exact = sql_mse(params) / exact_best.mse_star
    return ImprovementRatios(
        smoothing_gain=smoothing,
        adaptive_gain=adaptive,
        total_gain_limit=total_limit,
        total_gain_exact=total_exact,
    )
