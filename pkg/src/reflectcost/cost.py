"""The time-dependent cost function phi and its long-time limits.

phi_t(a) is the probability that the comparison diffusion started at a stays
positive up to t.  Three evaluation routes share the domain:

  closed   -- K = 0 or N = inf: a single Gaussian window with the eta clock;
  series   -- K > 0, N < inf: spectral sum over odd Gegenbauer polynomials;
  mixture  -- any finite N: Monte-Carlo average of Gaussian windows over
              realizations of the time-change integral.

Derivative-at-zero and the long-time cost Theta / rate kappa live here too.

Note on constants: the closed-form slope at zero is (pi*eta)^(-1/2)/2 for the
two-sided Gaussian window used throughout (a one-sided window would halve
it); the mixture form uses the matching kernel 1/(2 sqrt(pi u)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from . import comparison
from .errors import QuadratureError
from .specfun import (CurvatureDimension, chi, eta, gegenbauer_value_at_one,
                      interval_survival, interval_survival_slope0, s_k,
                      series_coefficient)

__all__ = [
    "CostQuery",
    "PhiResult",
    "phi_closed",
    "phi_series",
    "phi_mixture",
    "phi",
    "phi_values",
    "phi_survival",
    "phi_prime_zero",
    "theta_limit",
    "theta_limit_values",
    "kappa",
    "default_mixture",
    "SERIES_MIN_KT",
]

SERIES_MIN_KT = 0.005  # minimum K t/(N-1) for the spectral series
_DEFAULT_MIXTURE_N = 20_000
_DEFAULT_SEED = 1234
_mixture_cache: dict = {}


@dataclass(frozen=True)
class CostQuery:
    """A (curvature pair, time, distance) evaluation request."""

    cd: CurvatureDimension
    t: float
    a: float

    def __post_init__(self):
        if self.t < 0.0:
            raise ValueError("t must be nonnegative")
        if self.a < 0.0:
            raise ValueError("a must be nonnegative")
        if self.a > self.cd.rbar or (self.a == self.cd.rbar and math.isinf(self.cd.rbar)):
            raise ValueError(f"a = {self.a} outside [0, rbar], rbar = {self.cd.rbar}")


@dataclass(frozen=True)
class PhiResult:
    value: float
    method: str
    error_bound: float

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"phi value {self.value} outside [0, 1]")
        if self.error_bound < 0.0:
            raise ValueError("error_bound must be nonnegative")


def phi_closed(K: float, t: float, a):
    """Closed form, valid for N = inf (any K) and K = 0 (any N).

    chi(a / (2 sqrt(2 eta_K(t)))); at t = 0 the indicator of a > 0.
    """
    arr = np.asarray(a, dtype=float)
    if t == 0.0:
        out = (arr > 0.0).astype(float)
        return out if out.ndim else float(out)
    e = eta(K, t)
    out = chi(arr / (2.0 * math.sqrt(2.0 * e)))
    return out


def _series_values(cd: CurvatureDimension, t: float, a, tol: float):
    """Vectorized spectral sum; returns (values clamped to [0,1], tail bound)."""
    N = cd.N
    rk = math.sqrt(cd.kbar)
    atil = np.sin(rk * np.asarray(a, dtype=float) / 2.0)
    total = np.zeros_like(atil)
    # upward Gegenbauer recursion over all degrees, picking odd ones
    p_prev = np.ones_like(atil)          # P_0
    p = (N - 1.0) * atil                 # P_1
    small_streak = 0
    bound = math.inf
    prev_bound = math.inf
    n = 0
    k = 1
    while True:
        if k == 2 * n + 1:
            coef = series_coefficient(n, cd, t)
            total = total + coef * p
            prev_bound, bound = bound, abs(coef) * gegenbauer_value_at_one(k, N)
            small_streak = small_streak + 1 if bound < tol / 2.0 else 0
            if small_streak >= 2:
                break
            n += 1
        k += 1
        p, p_prev = ((2.0 * k + N - 3.0) / k) * atil * p - ((k + N - 3.0) / k) * p_prev, p
    r = bound / prev_bound if prev_bound > 0.0 else 0.0
    tail = bound * r / (1.0 - r) if r < 1.0 else bound
    return np.clip(total, 0.0, 1.0), bound + tail


def phi_series(cd: CurvatureDimension, t: float, a: float, tol: float = 1e-9) -> PhiResult:
    """Spectral-series evaluation (K > 0, N < inf, a up to and including rbar).

    Refuses K t/(N-1) < SERIES_MIN_KT, where the term count explodes; callers
    fall back to the mixture route there.
    """
    if cd.K <= 0.0 or not cd.n_finite:
        raise ValueError("phi_series: requires K > 0 and N < inf")
    if t <= 0.0:
        raise ValueError("phi_series: t must be positive")
    if cd.K * t / (cd.N - 1.0) < SERIES_MIN_KT:
        raise ValueError("phi_series: K t/(N-1) below series threshold")
    if not (0.0 <= a <= cd.rbar):
        raise ValueError("phi_series: a outside [0, rbar]")
    vals, err = _series_values(cd, t, a, tol)
    return PhiResult(float(vals), "series", err)


def _window_values(ms: comparison.MixtureSamples, a: float) -> np.ndarray:
    """Per-sample survival windows for the mixture representation.

    identity transform: the time-changed inner motion starts at a/2 and the
    zeros of the comparison sine are its barriers: the single barrier 0 for
    kbar <= 0 (Gaussian window), the pair {0, pi/sqrt(kbar)} for kbar > 0
    (two-sided interval survival -- a one-sided window would overcount).

    s_kbar_half transform: displacement 2 s_kbar(a/2); with that scaling the
    window reduces to the identity transform's exactly as K -> 0.
    """
    cd = ms.cd
    if ms.displacement_transform == "identity":
        if cd.kbar > 0.0:
            return interval_survival(a / 2.0, math.pi / math.sqrt(cd.kbar),
                                     2.0 * ms.samples)
        return chi(a / (2.0 * np.sqrt(2.0 * ms.samples)))
    if cd.K >= 0.0:
        raise ValueError("phi_mixture: s_kbar_half transform requires K < 0")
    d0 = 2.0 * s_k(cd.kbar, a / 2.0)
    return chi(d0 / (2.0 * np.sqrt(2.0 * ms.samples)))


def phi_mixture(ms: comparison.MixtureSamples, a: float) -> PhiResult:
    """Mixture Monte Carlo: mean of survival windows over integral samples."""
    cd = ms.cd
    if not (0.0 <= a < cd.rbar or (a == cd.rbar and math.isfinite(cd.rbar))):
        raise ValueError(f"phi_mixture: a = {a} outside [0, rbar]")
    vals = _window_values(ms, a)
    mean = float(np.mean(vals))
    se = float(np.std(vals) / math.sqrt(len(ms.samples)))
    return PhiResult(min(max(mean, 0.0), 1.0), "mixture_mc", se)


def default_mixture(cd: CurvatureDimension, t: float,
                    n: int = _DEFAULT_MIXTURE_N,
                    master_seed: int = _DEFAULT_SEED) -> comparison.MixtureSamples:
    """Cached default time-change ensemble for mixture evaluations."""
    key = (cd.K, cd.N, t, n, master_seed)
    ms = _mixture_cache.get(key)
    if ms is None:
        cfg = comparison.default_config(t, n_paths=n, master_seed=master_seed)
        ms = comparison.sample_zeta(cd, t, n, cfg)
        _mixture_cache[key] = ms
    return ms


def phi(q: CostQuery, tol: float = 1e-9) -> PhiResult:
    """Dispatch to the cheapest applicable route for the query."""
    cd, t, a = q.cd, q.t, q.a
    if t == 0.0:
        return PhiResult(1.0 if a > 0.0 else 0.0, "closed", 0.0)
    if cd.K == 0.0 or not cd.n_finite:
        return PhiResult(float(phi_closed(cd.K, t, a)), "closed", 0.0)
    if cd.K > 0.0 and cd.K * t / (cd.N - 1.0) >= SERIES_MIN_KT:
        return phi_series(cd, t, a, tol)
    return phi_mixture(default_mixture(cd, t), a)


def phi_values(cd: CurvatureDimension, t: float, a, tol: float = 1e-9,
               chunk: int = 1024) -> np.ndarray:
    """Vectorized phi over an array of distances (same dispatch as ``phi``)."""
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    if t == 0.0:
        return (arr > 0.0).astype(float)
    if cd.K == 0.0 or not cd.n_finite:
        return np.asarray(phi_closed(cd.K, t, arr), dtype=float)
    if cd.K > 0.0 and cd.K * t / (cd.N - 1.0) >= SERIES_MIN_KT:
        vals, _ = _series_values(cd, t, arr, tol)
        return vals
    ms = default_mixture(cd, t)
    out = np.empty(arr.shape[0])
    for i, av in enumerate(arr):
        out[i] = float(np.mean(_window_values(ms, float(av))))
    return np.clip(out, 0.0, 1.0)


def phi_survival(cd: CurvatureDimension, t: float, a: float,
                 cfg: comparison.SdeConfig) -> PhiResult:
    """Definition-based estimate: survival Monte Carlo of the diffusion."""
    est, se = comparison.survival_probability(cd, a, t, cfg)
    return PhiResult(est, "survival_mc", se)


def phi_prime_zero(cd: CurvatureDimension, t: float,
                   ms: comparison.MixtureSamples | None = None) -> tuple[float, float]:
    """Right derivative of phi_t at 0 and its standard error.

    Closed branch (K = 0 or N = inf): 1/(2 sqrt(pi eta_K(t))), exact.
    Otherwise the mixture form: the mean slope of the per-sample survival
    window, which is 1/(2 sqrt(pi u)) for kbar <= 0 and carries the upper
    barrier's exponential suppression for kbar > 0.
    """
    if t <= 0.0:
        raise ValueError("phi_prime_zero: t must be positive")
    if cd.K == 0.0 or not cd.n_finite:
        return 1.0 / (2.0 * math.sqrt(math.pi * eta(cd.K, t))), 0.0
    if ms is None:
        ms = default_mixture(cd, t)
    L = math.pi / math.sqrt(cd.kbar) if cd.kbar > 0.0 else math.inf
    vals = 0.5 * interval_survival_slope0(L, 2.0 * ms.samples)
    return float(np.mean(vals)), float(np.std(vals) / math.sqrt(len(vals)))


def theta_limit(cd: CurvatureDimension, a: float) -> float:
    """Long-time cost Theta_{K,N}(a) (five-branch table).

    The (K<0, N<inf) branch integrates the Gaussian window against the
    Gamma((N-1)/2) weight, normalized so Theta(inf...) -> 1; evaluated after
    the substitution u = w^2 which removes the endpoint singularity.
    """
    if not (0.0 <= a < cd.rbar or a == cd.rbar):
        raise ValueError("theta_limit: a outside [0, rbar]")
    K, N = cd.K, cd.N
    if K == 0.0:
        return a
    if not cd.n_finite:
        return a if K > 0.0 else float(chi(a * math.sqrt(-K) / 2.0))
    if K > 0.0:
        return math.sin(0.5 * math.sqrt(cd.kbar) * a)
    s_half = s_k(cd.kbar, a / 2.0)
    scale = math.sqrt(-2.0 * K / (N - 1.0)) * s_half
    lognorm = math.log(2.0) - math.lgamma((N - 1.0) / 2.0)

    def integrand(w):
        if w <= 0.0:
            return 0.0
        return chi(scale * w) * math.exp((N - 2.0) * math.log(w) - w * w + lognorm)

    val, err = quad(integrand, 0.0, math.inf, epsabs=1e-12, epsrel=1e-10, limit=200)
    if err > 1e-8:
        raise QuadratureError(f"theta_limit quadrature error {err}")
    return val


def kappa(cd: CurvatureDimension) -> float:
    """Contraction rate for the long-time monotonicity: max(K, 0) scaled by N."""
    if not cd.n_finite:
        return max(cd.K, 0.0)
    return max(cd.N * cd.K / (cd.N - 1.0), 0.0)


def theta_limit_values(cd: CurvatureDimension, a) -> np.ndarray:
    """Vectorized theta_limit for cost-matrix construction.

    The (K<0, N<inf) branch uses a fixed 200-node Gauss-Legendre rule on the
    substituted integral (spectrally accurate for the smooth integrand);
    cross-checked against the adaptive scalar route in the tests.
    """
    arr = np.atleast_1d(np.asarray(a, dtype=float))
    K, N = cd.K, cd.N
    if K == 0.0:
        return arr.copy()
    if not cd.n_finite:
        return arr.copy() if K > 0.0 else np.asarray(chi(arr * math.sqrt(-K) / 2.0))
    if K > 0.0:
        return np.sin(0.5 * math.sqrt(cd.kbar) * arr)
    from scipy.special import roots_legendre
    xg, wg = roots_legendre(200)
    wmax = max(8.5, math.sqrt(0.5 * N) + 6.0)
    w = 0.5 * wmax * (xg + 1.0)
    ww = 0.5 * wmax * wg
    scale = math.sqrt(-2.0 * K / (N - 1.0)) * np.asarray(s_k(cd.kbar, arr / 2.0))
    lognorm = math.log(2.0) - math.lgamma((N - 1.0) / 2.0)
    weight = np.exp((N - 2.0) * np.log(w) - w * w + lognorm)
    integ = chi(scale[:, None] * w[None, :]) * weight[None, :]
    return integ @ ww
