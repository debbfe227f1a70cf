"""Named verification harnesses.

Each harness runs one of the package's cross-method or monotonicity checks
and returns a CheckReport: a list of (label, value, tolerance) observations
that pass when value <= tolerance.  The CLI ``check`` subcommand and the
acceptance suite are thin wrappers around these functions.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import ks_2samp

from . import comparison, cost, spaceform, transport
from .specfun import CurvatureDimension, norm_cdf

__all__ = [
    "CheckReport",
    "closed_form_vs_mc",
    "series_vs_mc",
    "hyperbolic_dual",
    "tv_compare",
    "constancy",
    "monotonicity_sphere",
    "monotonicity_plane",
    "ot_exactness",
    "cost_properties",
    "ordering",
    "derivative_checks",
    "walk_law",
    "asymptotics",
    "gradient_bound",
]


@dataclass
class CheckReport:
    """Outcome of a named check: passes iff every observation meets its tolerance."""

    name: str
    observed: list = field(default_factory=list)   # (label, value, tolerance)
    runtime_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(v <= tol for _, v, tol in self.observed)

    def rows(self):
        return [(lbl, v, tol, "pass" if v <= tol else "FAIL")
                for lbl, v, tol in self.observed]

    def summary(self) -> str:
        worst = max((v - tol for _, v, tol in self.observed), default=float("-inf"))
        return (f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: "
                f"{len(self.observed)} observations, worst margin {-worst:.3g}, "
                f"{self.runtime_seconds:.1f}s")


def _evaluate_on_unique(matrix: np.ndarray, fn) -> np.ndarray:
    """Apply an expensive elementwise fn via the matrix's unique values."""
    uniq, inv = np.unique(np.round(matrix, 12), return_inverse=True)
    vals = fn(uniq)
    return np.asarray(vals)[inv].reshape(matrix.shape)


# ---------------------------------------------------------------------------
# cross-method agreement (criteria 1-4)
# ---------------------------------------------------------------------------

def closed_form_vs_mc(ks=(0.0, -1.0, 2.0), ts=(0.25, 1.0), avals=(0.5, 1.0, 2.0),
                      n_paths=100_000, dt=1e-3, master_seed=1234) -> CheckReport:
    """Survival Monte Carlo against the closed form at N = inf."""
    t0 = time.time()
    rep = CheckReport("closed-form-vs-mc")
    for K in ks:
        cd = CurvatureDimension(K, math.inf)
        for t in ts:
            cfg = comparison.SdeConfig(dt=dt, horizon=t, n_paths=n_paths,
                                       master_seed=master_seed)
            for a in avals:
                est, se = comparison.survival_probability(cd, a, t, cfg)
                ref = float(cost.phi_closed(K, t, a))
                rep.observed.append((f"K={K},N=inf,t={t},a={a}",
                                     abs(est - ref), 3.0 * se + 0.005))
    rep.runtime_seconds = time.time() - t0
    return rep


def series_vs_mc(ts=(0.25, 0.5, 1.0), avals=(0.5, math.pi / 2, 2.5),
                 n_paths=100_000, dt=1e-3, master_seed=1234) -> CheckReport:
    """Spectral series against survival MC and the mixture route at (K=1, N=2)."""
    t0 = time.time()
    rep = CheckReport("series-vs-mc")
    cd = CurvatureDimension(1.0, 2.0)
    for t in ts:
        cfg = comparison.SdeConfig(dt=dt, horizon=t, n_paths=n_paths,
                                   master_seed=master_seed)
        ms = comparison.sample_zeta(cd, t, n_paths, comparison.default_config(
            t, n_paths=n_paths, master_seed=master_seed))
        for a in avals:
            ser = cost.phi_series(cd, t, a)
            est, se = comparison.survival_probability(cd, a, t, cfg)
            mix = cost.phi_mixture(ms, a)
            rep.observed.append((f"series-vs-survival t={t},a={a:.4f}",
                                 abs(ser.value - est), 3.0 * se + 0.005))
            rep.observed.append((f"series-vs-mixture t={t},a={a:.4f}",
                                 abs(ser.value - mix.value), 0.02))
    rep.runtime_seconds = time.time() - t0
    return rep


def hyperbolic_dual(t=1.0, avals=(0.5, 1.0, 2.0), n=100_000,
                    master_seed=1234) -> CheckReport:
    """Angular-clock route against the geometric-Brownian route at (K=-1, N=3)."""
    t0 = time.time()
    rep = CheckReport("hyperbolic-dual")
    cd = CurvatureDimension(-1.0, 3.0)
    cfg = comparison.default_config(t, n_paths=n, master_seed=master_seed)
    ms_id = comparison.sample_zeta(cd, t, n, cfg)
    ms_hy = comparison.sample_zeta_hyperbolic(-1.0, 3.0, t, n, cfg)
    for a in avals:
        p1 = cost.phi_mixture(ms_id, a)
        p2 = cost.phi_mixture(ms_hy, a)
        rep.observed.append((f"a={a}", abs(p1.value - p2.value), 0.02))
    rep.runtime_seconds = time.time() - t0
    return rep


def tv_compare(ts=(0.25, 0.5, 1.0),
               avals=(math.pi / 4, math.pi / 2, 3 * math.pi / 4)) -> CheckReport:
    """Sphere heat-kernel total variation against the spectral series."""
    t0 = time.time()
    rep = CheckReport("tv-compare")
    cd = CurvatureDimension(1.0, 2.0)
    for t in ts:
        for a in avals:
            tv = spaceform.tv_sphere_heat(t, a)
            ser = cost.phi_series(cd, t, a, tol=1e-10)
            rep.observed.append((f"t={t},a={a:.4f}", abs(tv - ser.value), 2e-3))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# constancy (criterion 5)
# ---------------------------------------------------------------------------

def constancy(cd: CurvatureDimension, a=1.0, t=1.0,
              s_grid=(0.0, 0.25, 0.5, 0.75, 1.0),
              n_paths=100_000, dt=1e-3, master_seed=1234) -> CheckReport:
    """The pre-absorption expectation of the shrinking-horizon cost is flat in s."""
    t0 = time.time()
    rep = CheckReport(f"constancy K={cd.K},N={cd.N}")
    cfg = comparison.SdeConfig(dt=dt, horizon=t, n_paths=n_paths,
                               master_seed=master_seed)
    ref = cost.phi(cost.CostQuery(cd, t, a)).value
    for s, est, se in comparison.constancy_statistic(cd, a, t, s_grid, cfg):
        rep.observed.append((f"s={s}", abs(est - ref), max(3.0 * se, 1e-12)))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# transport monotonicity (criterion 6)
# ---------------------------------------------------------------------------

def _sphere_diracs(grid: spaceform.SphereGrid):
    """Two grid-node Diracs on the near-equator row, a quarter turn apart."""
    i_row = int(np.argmin(np.abs(grid.cos_theta)))
    c1 = grid.flat_index(i_row, 0)
    c2 = grid.flat_index(i_row, grid.n_phi // 4)
    return c1, c2


def monotonicity_sphere(t=1.0, s_grid=None, n_theta=24, n_phi=48,
                        cost_kind="phi", slack=1e-4) -> CheckReport:
    """Nonincreasing transport cost along the sphere heat flow.

    cost_kind "phi": cost phi_{t-s}(d) between the flows of two grid Diracs.
    cost_kind "theta": long-time cost with the e^{kappa s} prefactor.
    """
    t0 = time.time()
    rep = CheckReport(f"monotonicity-sphere-{cost_kind}")
    if s_grid is None:
        s_grid = [0.1 * k for k in range(10)]
    grid = spaceform.SphereGrid(n_theta, n_phi)
    c1, c2 = _sphere_diracs(grid)
    dmat = grid.distance_matrix()
    cd = CurvatureDimension(1.0, 2.0)
    kap = cost.kappa(cd)
    vals = []
    for s in s_grid:
        if s == 0.0:
            w1 = np.zeros(grid.size)
            w1[c1] = 1.0
            w2 = np.zeros(grid.size)
            w2[c2] = 1.0
        else:
            mu0 = np.zeros(grid.size)
            mu0[c1] = 1.0
            w1, _ = spaceform.sphere_heat_flow(grid, mu0, s)
            mu0 = np.zeros(grid.size)
            mu0[c2] = 1.0
            w2, _ = spaceform.sphere_heat_flow(grid, mu0, s)
        if cost_kind == "phi":
            rem = t - s
            cmat = _evaluate_on_unique(dmat, lambda u: cost.phi_values(cd, rem, u))
            scalefac = 1.0
        else:
            cmat = np.sin(dmat / 2.0)
            scalefac = math.exp(kap * s)
        plan = transport.transport_cost(
            transport.CostMatrix(cmat, metric_flag=True, validate=False),
            transport.DiscreteMeasure(w1), transport.DiscreteMeasure(w2))
        vals.append(scalefac * plan.value)
    for q in range(1, len(vals)):
        rep.observed.append((f"s={s_grid[q - 1]:.2f}->{s_grid[q]:.2f}",
                             vals[q] - vals[q - 1], slack))
    rep.values = vals
    rep.runtime_seconds = time.time() - t0
    return rep


def _plane_gaussian_weights(edges, mean, var):
    """Exact cell masses of an isotropic Gaussian on a square grid."""
    sd = math.sqrt(var)
    cx = np.diff(norm_cdf((edges - mean[0]) / sd))
    cy = np.diff(norm_cdf((edges - mean[1]) / sd))
    w = np.outer(cx, cy).reshape(-1)
    total = w.sum()
    return w / total, total


def monotonicity_plane(s_grid=None, n=40, half_width=10.0,
                       centers=((-0.8, 0.0), (0.8, 0.0)),
                       variances=(1.0, 1.69), slack=1e-4) -> CheckReport:
    """Nonincreasing e^{kappa s} T_Theta along the plane heat flow at (K=-1, N=3).

    Brownian motion on R^2 satisfies the (K=-1, N=3) curvature-dimension
    bound, and the Gaussian marginals flow in closed form (variance + 2s),
    so each time slice is discretized exactly by cell masses.
    """
    t0 = time.time()
    rep = CheckReport("monotonicity-plane-theta")
    if s_grid is None:
        s_grid = [0.1 * k for k in range(10)]
    cd = CurvatureDimension(-1.0, 3.0)
    kap = cost.kappa(cd)  # = 0 for K < 0
    edges = np.linspace(-half_width, half_width, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    px, py = np.meshgrid(mids, mids, indexing="ij")
    pts = np.stack([px.reshape(-1), py.reshape(-1)], axis=1)
    dmat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    cmat = _evaluate_on_unique(dmat, lambda u: cost.theta_limit_values(cd, u))
    cm = transport.CostMatrix(cmat, metric_flag=True, validate=False)
    vals = []
    for s in s_grid:
        w1, m1 = _plane_gaussian_weights(edges, centers[0], variances[0] + 2.0 * s)
        w2, m2 = _plane_gaussian_weights(edges, centers[1], variances[1] + 2.0 * s)
        plan = transport.transport_cost(cm, transport.DiscreteMeasure(w1),
                                        transport.DiscreteMeasure(w2))
        vals.append(math.exp(kap * s) * plan.value)
    for q in range(1, len(vals)):
        rep.observed.append((f"s={s_grid[q - 1]:.2f}->{s_grid[q]:.2f}",
                             vals[q] - vals[q - 1], slack))
    rep.values = vals
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# OT exactness (criterion 7)
# ---------------------------------------------------------------------------

def ot_exactness(n_uniform=200, n_metric=50, master_seed=7) -> CheckReport:
    """Solver against permutation brute force and the KR dual."""
    t0 = time.time()
    rep = CheckReport("ot-exactness")
    rng_ = np.random.default_rng(master_seed)
    worst_bf = 0.0
    for _ in range(n_uniform):
        k = int(rng_.integers(1, 7))
        C = transport.CostMatrix(rng_.random((k, k)))
        uni = transport.DiscreteMeasure(np.full(k, 1.0 / k))
        v = transport.transport_cost(C, uni, uni).value
        worst_bf = max(worst_bf, abs(v - transport.brute_force_uniform(C)))
    rep.observed.append((f"brute-force x{n_uniform}", worst_bf, 1e-9))
    worst_kr = 0.0
    for _ in range(n_metric):
        k = int(rng_.integers(2, 16))
        pts = rng_.random((k, 2))
        D = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
        C = transport.CostMatrix(D, metric_flag=True)
        mu = transport.DiscreteMeasure(rng_.dirichlet(np.ones(k)))
        nu = transport.DiscreteMeasure(rng_.dirichlet(np.ones(k)))
        p = transport.transport_cost(C, mu, nu).value
        d = transport.kr_dual_value(C, mu, nu)
        worst_kr = max(worst_kr, abs(p - d))
    rep.observed.append((f"kr-dual x{n_metric}", worst_kr, 1e-8))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# property suite (criterion 8)
# ---------------------------------------------------------------------------

_GRID_CDS = [(-1.0, 2.0), (-1.0, 5.0), (-1.0, math.inf),
             (0.0, 2.0), (0.0, 5.0), (0.0, math.inf),
             (1.0, 2.0), (1.0, 5.0), (1.0, math.inf)]


def _phi_with_err(cd, t, avals):
    vals = cost.phi_values(cd, t, avals)
    if cd.K == 0.0 or not cd.n_finite:
        err = 0.0
    elif cd.K > 0.0 and cd.K * t / (cd.N - 1.0) >= cost.SERIES_MIN_KT:
        err = 1e-9
    else:
        ms = cost.default_mixture(cd, t)
        err = 3.0 / math.sqrt(len(ms.samples))  # conservative MC half-width
    return vals, err


def cost_properties(cd: CurvatureDimension, ts=(0.25, 1.0), n_a=50) -> CheckReport:
    """Range, monotonicity in a and t, midpoint concavity, subadditivity."""
    t0 = time.time()
    rep = CheckReport(f"cost-properties K={cd.K},N={cd.N}")
    amax = min(cd.rbar, 3.0) if math.isfinite(cd.rbar) else 3.0
    avals = np.linspace(0.0, amax, n_a)
    prev = None
    for t in ts:
        vals, err = _phi_with_err(cd, t, avals)
        rep.observed.append((f"range t={t}",
                             float(max(np.max(vals) - 1.0, -np.min(vals), 0.0)), 0.0))
        rep.observed.append((f"monotone-in-a t={t}",
                             float(np.max(-np.diff(vals), initial=0.0)), 2.0 * err + 1e-12))
        mid = 0.5 * (vals[:-2] + vals[2:])
        rep.observed.append((f"concave t={t}",
                             float(np.max(mid - vals[1:-1], initial=0.0)), 2.0 * err + 1e-12))
        # subadditivity on pairs staying inside the domain
        k = n_a // 3
        sub = vals[2 * k] - vals[k] - vals[k]
        rep.observed.append((f"subadditive t={t}", float(sub), 2.0 * err + 1e-12))
        if prev is not None:
            rep.observed.append((f"nonincreasing-in-t {ts[0]}->{t}",
                                 float(np.max(vals - prev)), 2.0 * err + prev_err + 1e-12))
        prev, prev_err = vals, err
    rep.runtime_seconds = time.time() - t0
    return rep


def ordering(t=0.5, n_a=12) -> CheckReport:
    """K >= K', N <= N' implies phi^{K,N} <= phi^{K',N'} pointwise."""
    t0 = time.time()
    rep = CheckReport("ordering")
    cds = [CurvatureDimension(K, N) for K, N in _GRID_CDS]
    cache = {}
    for cd in cds:
        amax = min(cd.rbar * 0.999, 2.8)
        avals = np.linspace(0.0, amax, n_a)
        cache[(cd.K, cd.N)] = (avals, *_phi_with_err(cd, t, avals))
    for cd1 in cds:
        for cd2 in cds:
            if (cd1.K, cd1.N) == (cd2.K, cd2.N):
                continue
            if cd1.K >= cd2.K and cd1.N <= cd2.N:
                a1, v1, e1 = cache[(cd1.K, cd1.N)]
                _, _, e2 = cache[(cd2.K, cd2.N)]
                v2 = cost.phi_values(cd2, t, a1)
                worst = float(np.max(v1 - v2))
                rep.observed.append(
                    (f"({cd1.K},{cd1.N}) <= ({cd2.K},{cd2.N})", worst,
                     e1 + e2 + 1e-9))
    rep.runtime_seconds = time.time() - t0
    return rep


def derivative_checks(ts=(0.25, 1.0), t_small=1e-3) -> CheckReport:
    """Short-time slope scaling and the flat-space upper bound for phi'(0).

    The two-sided Gaussian window gives sqrt(t) phi'(0) -> 1/(2 sqrt(pi)) and
    the bound phi'(0) <= (pi eta_K(t))^(-1/2)/2.
    """
    t0 = time.time()
    rep = CheckReport("derivative-checks")
    target = 1.0 / (2.0 * math.sqrt(math.pi))
    for K, N in _GRID_CDS:
        cd = CurvatureDimension(K, N)
        val, se = cost.phi_prime_zero(cd, t_small)
        rep.observed.append((f"sqrt(t)phi'(0) K={K},N={N}",
                             abs(math.sqrt(t_small) * val / target - 1.0),
                             0.05))
        for t in ts:
            val, se = cost.phi_prime_zero(cd, t)
            from .specfun import eta
            bound = 1.0 / (2.0 * math.sqrt(math.pi * eta(K, t)))
            rep.observed.append((f"upper-bound K={K},N={N},t={t}",
                                 val - bound, 3.0 * se + 1e-12))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# coupled-walk law (criterion 9)
# ---------------------------------------------------------------------------

def walk_law(t=0.5, alpha=0.02, n_walks=20_000, master_seed=1234,
             dt=5e-4) -> CheckReport:
    """KS distance between coupled-walk distances and the killed diffusion."""
    t0 = time.time()
    rep = CheckReport("walk-law")

    eu = spaceform.Euclidean(2)
    tr = spaceform.coupled_walk_run(
        spaceform.ModelPoint(eu, np.zeros(2)),
        spaceform.ModelPoint(eu, np.array([1.0, 0.0])),
        alpha, t, n_walks=n_walks, master_seed=master_seed, store_times=[t])
    cd = CurvatureDimension(0.0, math.inf)
    ens = comparison.simulate_rho(cd, 1.0,
                                  comparison.SdeConfig(dt=dt, horizon=t, n_paths=n_walks,
                                                       master_seed=master_seed + 1),
                                  store_times=[t], kill_at_zero=True)
    rho = np.nan_to_num(ens.values[:, -1])
    rep.observed.append(("euclidean a=1",
                         float(ks_2samp(tr.distances[:, -1], rho).statistic), 0.03))

    sph = spaceform.Sphere(1.0)
    tr2 = spaceform.coupled_walk_run(
        spaceform.ModelPoint(sph, np.array([0.0, 0.0, 1.0])),
        spaceform.ModelPoint(sph, np.array([1.0, 0.0, 0.0])),
        alpha, t, n_walks=n_walks, master_seed=master_seed, store_times=[t])
    cd12 = CurvatureDimension(1.0, 2.0)
    ens2 = comparison.simulate_rho(cd12, math.pi / 2,
                                   comparison.SdeConfig(dt=dt, horizon=t, n_paths=n_walks,
                                                        master_seed=master_seed + 1),
                                   store_times=[t], kill_at_zero=True)
    rho2 = np.nan_to_num(ens2.values[:, -1])
    rep.observed.append(("sphere a=pi/2",
                         float(ks_2samp(tr2.distances[:, -1], rho2).statistic), 0.03))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# long-time asymptotics (criterion 11)
# ---------------------------------------------------------------------------

def asymptotics(master_seed=1234) -> CheckReport:
    """Long-time scalings of the cost against their limits.

    flat:       sqrt(t) phi_t(a) -> a/(2 sqrt(pi))        (t = 100, 2%)
    sphere:     e^{NKt/(N-1)} phi_t(a) -> (3/2) sin(a/2)  (K=1, N=2, t = 5, 1%)
    hyperbolic: phi_t(a) -> Theta_{-1,3}(a)               (t = 50, 0.02)
    """
    t0 = time.time()
    rep = CheckReport("asymptotics")
    for a in (0.5, 1.0, 2.0):
        val = math.sqrt(100.0) * float(cost.phi_closed(0.0, 100.0, a))
        lim = a / (2.0 * math.sqrt(math.pi))
        rep.observed.append((f"flat a={a}", abs(val / lim - 1.0), 0.02))
    cd12 = CurvatureDimension(1.0, 2.0)
    for a in (0.5, math.pi / 2, 2.5):
        t = 5.0
        ser = cost.phi_series(cd12, t, a, tol=1e-16)
        val = math.exp(cd12.N * cd12.K * t / (cd12.N - 1.0)) * ser.value
        lim = 1.5 * math.sin(a / 2.0)
        rep.observed.append((f"sphere a={a:.4f}", abs(val / lim - 1.0), 0.01))
    cdh = CurvatureDimension(-1.0, 3.0)
    t = 50.0
    ms = comparison.sample_zeta(cdh, t, 20_000,
                                comparison.default_config(t, n_paths=20_000,
                                                          master_seed=master_seed))
    for a in (0.5, 1.0, 2.0):
        val = cost.phi_mixture(ms, a).value
        lim = cost.theta_limit(cdh, a)
        rep.observed.append((f"hyperbolic a={a}", abs(val - lim), 0.02))
    rep.runtime_seconds = time.time() - t0
    return rep


# ---------------------------------------------------------------------------
# gradient estimate (criterion 10)
# ---------------------------------------------------------------------------

def gradient_bound(ts=(0.25, 1.0), n_functions=20, master_seed=1234,
                   n_theta=24, n_phi=48, slack=0.05) -> CheckReport:
    """Heat-flowed zonal functions obey |grad P_t f| <= phi'(0) osc(f).

    Random band-limited zonal functions are flowed through the exact kernel
    on the sphere grid; the discrete colatitude gradient is compared against
    the derivative-at-zero bound for (K=1, N=2).
    """
    t0 = time.time()
    rep = CheckReport("gradient-bound")
    grid = spaceform.SphereGrid(n_theta, n_phi)
    cd = CurvatureDimension(1.0, 2.0)
    rng_ = np.random.default_rng(master_seed)
    c = grid.cos_theta
    # Legendre values at the colatitude nodes, degrees 0..12
    lmax = 12
    P = np.empty((lmax + 1, n_theta))
    P[0] = 1.0
    P[1] = c
    for ell in range(2, lmax + 1):
        P[ell] = ((2 * ell - 1) * c * P[ell - 1] - (ell - 1) * P[ell - 2]) / ell
    for t in ts:
        slope, _ = cost.phi_prime_zero(cd, t)
        kern = grid.kernel_matrix(t)
        for q in range(n_functions):
            coef = rng_.standard_normal(lmax + 1) / (1.0 + np.arange(lmax + 1))
            f_nodes = coef @ P
            osc = float(f_nodes.max() - f_nodes.min())
            if osc < 1e-9:
                continue
            f_flat = np.repeat(f_nodes, n_phi)
            u = (kern @ f_flat).reshape(n_theta, n_phi)[:, 0]
            grad = float(np.max(np.abs(np.diff(u) / np.diff(grid.theta))))
            rep.observed.append((f"t={t} f#{q}", grad, slope * osc * (1.0 + slack)))
    rep.runtime_seconds = time.time() - t0
    return rep
