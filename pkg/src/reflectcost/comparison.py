"""Simulation of the comparison diffusion and its time-change samplers.

The diffusion has variance rate 8 (noise coefficient 2*sqrt(2)) and drift
psi; first-passage of the zero barrier is estimated with the exponential
Brownian-bridge crossing correction, which removes the O(sqrt(dt)) hitting
bias of the plain Euler grid.  Two samplers realize the mixing measure of
the cost function: the angular clock integral (any finite N) and, for K < 0,
the geometric-Brownian route whose integrand is simulated exactly at grid
points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, rng
from .specfun import CurvatureDimension

__all__ = [
    "SdeConfig",
    "PathEnsemble",
    "MixtureSamples",
    "default_config",
    "simulate_rho",
    "survival_probability",
    "sample_zeta",
    "sample_zeta_hyperbolic",
    "constancy_statistic",
]

_MAX_STORED = 50_000_000  # ~400 MB of float64; ask for store_times beyond this


@dataclass(frozen=True)
class SdeConfig:
    """Euler-scheme configuration.

    ``boundary_margin``/``drift_cap`` default (None) to 0.05*rbar and
    50/sqrt(dt), resolved against the curvature pair at simulation time.
    """

    dt: float
    horizon: float
    n_paths: int
    master_seed: int
    boundary_margin: float | None = None
    drift_cap: float | None = None

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.dt > self.horizon:
            raise ValueError("dt must not exceed horizon")
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.boundary_margin is not None and self.boundary_margin <= 0.0:
            raise ValueError("boundary_margin must be positive")

    def resolve_margin(self, cd: CurvatureDimension) -> float:
        m = 0.05 * cd.rbar if self.boundary_margin is None else self.boundary_margin
        if math.isfinite(cd.rbar) and m >= cd.rbar:
            raise ValueError("boundary_margin must be < rbar")
        return m if math.isfinite(m) else 0.0

    def resolve_cap(self) -> float:
        return 50.0 / math.sqrt(self.dt) if self.drift_cap is None else self.drift_cap


def default_config(t: float, n_paths: int = 100_000, master_seed: int = 1234,
                   dt: float | None = None) -> SdeConfig:
    """Acceptance-run defaults: dt = 1e-3 * min(t, 1), 1e5 paths."""
    if dt is None:
        dt = 1e-3 * min(t, 1.0)
    return SdeConfig(dt=dt, horizon=t, n_paths=n_paths, master_seed=master_seed)


@dataclass
class PathEnsemble:
    """Discretized sample paths with absorption metadata.

    ``values`` holds path values at ``times`` (a subset of the step grid);
    when the ensemble was run with kill-at-zero, values past the (bridge-
    corrected) first passage are NaN.  ``absorbed_at`` is NaN for paths that
    never crossed.  ``seed_trace`` records each path's derived seed.
    """

    times: np.ndarray
    values: np.ndarray
    absorbed_at: np.ndarray
    seed_trace: np.ndarray
    cd: CurvatureDimension
    a: float
    cfg: SdeConfig


@dataclass
class MixtureSamples:
    """Empirical realizations of the time-change integral.

    ``displacement_transform`` tags how the cost argument enters the Gaussian
    window: "identity" pairs samples of int c^{-2} with the raw distance,
    "s_kbar_half" pairs samples of int theta'^2 with s_kbar(a/2).
    """

    displacement_transform: str
    samples: np.ndarray
    t: float
    cd: CurvatureDimension

    def __post_init__(self):
        if self.displacement_transform not in ("identity", "s_kbar_half"):
            raise ValueError(f"unknown transform {self.displacement_transform!r}")
        if np.any(self.samples <= 0.0):
            raise ValueError("mixture samples must be positive")


def _grid(horizon: float, dt: float) -> tuple[int, float, np.ndarray]:
    """Number of steps, final step size, and the full time grid."""
    n_steps = max(1, int(math.ceil(horizon / dt - 1e-12)))
    last_h = horizon - (n_steps - 1) * dt
    times = np.empty(n_steps + 1)
    times[:n_steps] = dt * np.arange(n_steps)
    times[n_steps] = horizon
    return n_steps, last_h, times


def _snap_steps(times_wanted, horizon: float, dt: float) -> np.ndarray:
    n_steps, last_h, times = _grid(horizon, dt)
    idx = np.searchsorted(times, np.asarray(times_wanted, dtype=float) - 1e-12)
    return np.unique(np.clip(idx, 0, n_steps)).astype(np.int64)


def simulate_rho(cd: CurvatureDimension, a: float, cfg: SdeConfig,
                 store_times=None, kill_at_zero: bool = False) -> PathEnsemble:
    """Euler-Maruyama ensemble of the comparison diffusion started at ``a``.

    ``store_times`` selects which grid times to keep (default: all of them).
    """
    if abs(a) >= cd.rbar:
        raise ValueError(f"|a| = {abs(a)} must be < rbar = {cd.rbar}")
    n_steps, last_h, times = _grid(cfg.horizon, cfg.dt)
    if store_times is None:
        store_steps = np.arange(n_steps + 1, dtype=np.int64)
    else:
        store_steps = _snap_steps(store_times, cfg.horizon, cfg.dt)
    if cfg.n_paths * len(store_steps) > _MAX_STORED:
        raise ValueError("ensemble too large to store; pass store_times")
    values, absorbed_at, seeds = _kernels.rho_paths(
        np.uint64(cfg.master_seed), 0, cfg.n_paths, float(a),
        cfg.dt, n_steps, last_h,
        float(cd.K), not cd.n_finite, cd.kbar, cd.rbar,
        cfg.resolve_margin(cd), cfg.resolve_cap(),
        store_steps, kill_at_zero, True)
    return PathEnsemble(times=times[store_steps], values=values,
                        absorbed_at=absorbed_at, seed_trace=seeds,
                        cd=cd, a=a, cfg=cfg)


def survival_probability(cd: CurvatureDimension, a: float, t: float,
                         cfg: SdeConfig) -> tuple[float, float]:
    """Monte-Carlo estimate of P[inf_{s<=t} rho(s) > 0] and its binomial SE."""
    if a <= 0.0:
        raise ValueError("survival_probability: a must be positive")
    if a >= cd.rbar:
        raise ValueError(f"a = {a} must be < rbar = {cd.rbar}")
    n_steps, last_h, _ = _grid(t, cfg.dt)
    count = _kernels.survival_count(
        np.uint64(cfg.master_seed), 0, cfg.n_paths, float(a),
        cfg.dt, n_steps, last_h,
        float(cd.K), not cd.n_finite, cd.kbar, cd.rbar,
        cfg.resolve_margin(cd), cfg.resolve_cap())
    p = count / cfg.n_paths
    se = math.sqrt(max(p * (1.0 - p), 0.0) / cfg.n_paths)
    return p, se


def sample_zeta(cd: CurvatureDimension, t: float, n: int, cfg: SdeConfig) -> MixtureSamples:
    """Realizations of the angular-clock integral (mixing measure, N finite).

    Uses a drift-exact split step: the angular drift flow and the in-step
    clock integral both have closed forms in s_kbar(theta)^2, so no drift
    capping or substepping is needed even at the Bessel-like origin.
    """
    if not cd.n_finite:
        raise ValueError("sample_zeta: requires N < inf")
    if t <= 0.0:
        raise ValueError("sample_zeta: t must be positive")
    n_steps, last_h, _ = _grid(t, cfg.dt)
    samples = _kernels.zeta_integrals(
        np.uint64(cfg.master_seed), 0, int(n), t, cfg.dt, n_steps, last_h,
        float(cd.K), float(cd.N), cd.kbar)
    return MixtureSamples("identity", samples, t, cd)


def sample_zeta_hyperbolic(K: float, N: float, t: float, n: int,
                           cfg: SdeConfig, chunk: int | None = None) -> MixtureSamples:
    """Realizations of int_0^t theta'(s)^2 ds with theta' geometric Brownian.

    theta'(s) = exp(sqrt(-2K/(N-1)) B(s) + K s) is evaluated exactly at grid
    points from cumulative Gaussian sums; the integral uses the trapezoid rule.
    """
    if K >= 0.0:
        raise ValueError("sample_zeta_hyperbolic: requires K < 0")
    if math.isinf(N):
        raise ValueError("sample_zeta_hyperbolic: requires N < inf")
    cd = CurvatureDimension(K, N)
    n_steps, last_h, times = _grid(t, cfg.dt)
    if chunk is None:
        chunk = max(64, int(16_000_000 / (n_steps + 1)))
    sig = math.sqrt(-2.0 * K / (N - 1.0))
    sqrt_h = np.sqrt(np.diff(times))
    h = np.diff(times)
    out = np.empty(n, dtype=float)
    ctr = (np.arange(n_steps, dtype=np.uint64) * np.uint64(_kernels.CTR_STRIDE))
    done = 0
    while done < n:
        size = min(chunk, n - done)
        seeds = rng.stream_seeds(cfg.master_seed, done, size)
        z = rng.normals(seeds[:, None], ctr[None, :])
        b = np.cumsum(z * sqrt_h[None, :], axis=1)
        theta_sq = np.empty((size, n_steps + 1))
        theta_sq[:, 0] = 1.0
        theta_sq[:, 1:] = np.exp(2.0 * (sig * b + K * times[None, 1:]))
        out[done:done + size] = np.sum(
            0.5 * (theta_sq[:, :-1] + theta_sq[:, 1:]) * h[None, :], axis=1)
        done += size
    return MixtureSamples("s_kbar_half", out, t, cd)


def constancy_statistic(cd: CurvatureDimension, a: float, t: float,
                        s_grid, cfg: SdeConfig):
    """E[phi_{t-s}(rho(s)); no zero crossing by s] on a common path ensemble.

    By the maximality identity this is constant = phi_t(a) over s in [0, t].
    Returns a list of (s, estimate, std_error); the s = 0 entry is the exact
    evaluation (zero standard error).
    """
    from . import cost  # local import: cost depends on this module

    s_grid = [float(s) for s in s_grid]
    if not s_grid:
        raise ValueError("constancy_statistic: empty s grid")
    if s_grid != sorted(s_grid) or s_grid[0] < 0.0 or s_grid[-1] > t:
        raise ValueError("constancy_statistic: s grid must be sorted within [0, t]")

    positive = [s for s in s_grid if s > 0.0]
    results = []
    if positive:
        run_cfg = SdeConfig(dt=cfg.dt, horizon=max(positive), n_paths=cfg.n_paths,
                            master_seed=cfg.master_seed,
                            boundary_margin=cfg.boundary_margin,
                            drift_cap=cfg.drift_cap)
        ens = simulate_rho(cd, a, run_cfg, store_times=positive, kill_at_zero=True)
    n = cfg.n_paths
    for s in s_grid:
        if s == 0.0:
            results.append((0.0, cost.phi(cost.CostQuery(cd, t, a)).value, 0.0))
            continue
        q = int(np.argmin(np.abs(ens.times - s)))
        vals = ens.values[:, q]
        alive = ~(ens.absorbed_at <= s)  # NaN compares False -> alive
        contrib = np.zeros(n)
        remaining = t - s
        if remaining <= 0.0:
            contrib[alive] = 1.0
        else:
            contrib[alive] = cost.phi_values(cd, remaining, vals[alive])
        est = float(np.mean(contrib))
        se = float(np.std(contrib) / math.sqrt(n))
        results.append((s, est, se))
    return results
