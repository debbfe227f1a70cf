"""numba kernels for the path-level Monte Carlo.

Per-path loops with counter-based randomness: the draw at (path, step, slot)
is a pure function of the master seed, so results are bit-identical no matter
how paths are chunked.  Counter layout per step (stride 32):

    0-1    Box-Muller pair for the step's total Gaussian increment
    2-15   bridge-refinement normals (7, used only when substepping)
    16     barrier-crossing uniform (single-step case)
    17-24  barrier-crossing uniforms (one per substep)

The Brownian-bridge refinement preserves the step's total increment, so two
simulations sharing a master seed see the same driving noise even when only
one of them substeps near a boundary (this is what makes the pathwise
comparison property testable).

Constants duplicate ``rng.py``; tests pin the two implementations together.
"""

import numpy as np
from numba import njit, uint64

GOLDEN = uint64(0x9E3779B97F4A7C15)
_MIX1 = uint64(0xBF58476D1CE4E5B9)
_MIX2 = uint64(0x94D049BB133111EB)
_INV_2_53 = 1.1102230246251565e-16
_TWO_PI = 6.283185307179586

N_SUB = 8           # substep factor inside the boundary margin
CTR_STRIDE = uint64(32)


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> uint64(30))) * _MIX1
    z = (z ^ (z >> uint64(27))) * _MIX2
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def _uniform(seed, ctr):
    h = _mix64(seed + (ctr + uint64(1)) * GOLDEN)
    return (np.float64(h >> uint64(11)) + 1.0) * _INV_2_53


@njit(cache=True, inline="always")
def _normal(seed, ctr):
    u1 = _uniform(seed, ctr)
    u2 = _uniform(seed, ctr + uint64(1))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


@njit(cache=True)
def path_seed(master, index):
    """Per-path derived seed: position ``index`` of the master's seed stream."""
    return _mix64(uint64(master) + (uint64(index) + uint64(1)) * GOLDEN)


@njit(cache=True, inline="always")
def _psi_capped(u, K, n_inf, kbar, cap):
    """Drift of the comparison diffusion, clipped to [-cap, cap]."""
    if n_inf:
        d = -K * u
    elif K == 0.0:
        return 0.0
    elif kbar > 0.0:
        rk = np.sqrt(kbar)
        d = -2.0 * K * np.tan(rk * u / 2.0) / rk
    else:
        rk = np.sqrt(-kbar)
        d = -2.0 * K * np.tanh(rk * u / 2.0) / rk
    if d > cap:
        return cap
    if d < -cap:
        return -cap
    return d


@njit(cache=True, inline="always")
def _bridge_fill(seed, base, w_total, h, br):
    """Fill br[0..8] with a Brownian path (variance rate 8) pinned to w_total."""
    br[0] = 0.0
    br[8] = w_total
    ell = h / N_SUB
    ctr = base + uint64(2)
    m = 4
    while m >= 1:
        sd = np.sqrt(8.0 * ell * m / 4.0 * 2.0)  # var = sigma^2 * (2m*ell)/4
        for mid in range(m, 8, 2 * m):
            z = _normal(seed, ctr)
            ctr += uint64(2)
            br[mid] = 0.5 * (br[mid - m] + br[mid + m]) + sd * z
        m //= 2


@njit(cache=True)
def rho_paths(master, path_offset, n_paths, a, dt, n_steps, last_h,
              K, n_inf, kbar, rbar, margin, cap,
              store_steps, kill_at_zero, check_absorption):
    """Euler paths of the comparison diffusion (variance rate 8, drift psi).

    Negative starts are simulated as the mirrored positive start and negated
    on output, so the reflection symmetry in law is exact path-for-path.
    Returns (values[n_paths, n_store], absorbed_at[n_paths], seeds[n_paths]);
    absorbed_at is NaN where the zero barrier was never crossed.
    """
    flip = -1.0 if a < 0.0 else 1.0
    a0 = a * flip
    n_store = store_steps.shape[0]
    values = np.empty((n_paths, n_store), np.float64)
    absorbed_at = np.full(n_paths, np.nan, np.float64)
    seeds = np.empty(n_paths, np.uint64)
    br = np.empty(9, np.float64)
    finite_bar = rbar < np.inf
    lo_guard = rbar - margin if finite_bar else np.inf

    for i in range(n_paths):
        s = path_seed(master, path_offset + i)
        seeds[i] = s
        x = a0
        alive = True
        tau = np.nan
        q = 0
        while q < n_store and store_steps[q] == 0:
            values[i, q] = a0 * flip
            q += 1
        t_now = 0.0
        for k in range(n_steps):
            h = dt if k < n_steps - 1 else last_h
            base = uint64(k) * CTR_STRIDE
            if alive or not kill_at_zero:
                w = np.sqrt(8.0 * h) * _normal(seed=s, ctr=base)
                near = finite_bar and (x > lo_guard or x < -lo_guard)
                if near:
                    _bridge_fill(s, base, w, h, br)
                    hs = h / N_SUB
                    for j in range(N_SUB):
                        y = x + (br[j + 1] - br[j]) + _psi_capped(x, K, n_inf, kbar, cap) * hs
                        if finite_bar:
                            if y >= rbar:
                                y = 2.0 * rbar - y
                            elif y <= -rbar:
                                y = -2.0 * rbar - y
                        if alive and check_absorption:
                            if y <= 0.0:
                                alive = False
                                tau = t_now + (j + x / (x - y)) * hs
                            elif _uniform(s, base + uint64(17 + j)) < np.exp(-2.0 * x * y / (8.0 * hs)):
                                alive = False
                                tau = t_now + (j + 0.5) * hs
                        x = y
                else:
                    y = x + w + _psi_capped(x, K, n_inf, kbar, cap) * h
                    if finite_bar:
                        if y >= rbar:
                            y = 2.0 * rbar - y
                        elif y <= -rbar:
                            y = -2.0 * rbar - y
                    if alive and check_absorption:
                        if y <= 0.0:
                            alive = False
                            tau = t_now + h * x / (x - y)
                        elif _uniform(s, base + uint64(16)) < np.exp(-2.0 * x * y / (8.0 * h)):
                            alive = False
                            tau = t_now + 0.5 * h
                    x = y
            t_now += h
            while q < n_store and store_steps[q] == k + 1:
                if kill_at_zero and not alive:
                    values[i, q] = np.nan
                else:
                    values[i, q] = x * flip
                q += 1
            if not alive and kill_at_zero and q >= n_store:
                break
        absorbed_at[i] = tau
    return values, absorbed_at, seeds


@njit(cache=True)
def survival_count(master, path_offset, n_paths, a, dt, n_steps, last_h,
                   K, n_inf, kbar, rbar, margin, cap):
    """Number of paths whose running infimum stays above 0 (bridge-corrected)."""
    br = np.empty(9, np.float64)
    finite_bar = rbar < np.inf
    lo_guard = rbar - margin if finite_bar else np.inf
    count = 0
    for i in range(n_paths):
        s = path_seed(master, path_offset + i)
        x = a
        alive = True
        for k in range(n_steps):
            h = dt if k < n_steps - 1 else last_h
            base = uint64(k) * CTR_STRIDE
            w = np.sqrt(8.0 * h) * _normal(seed=s, ctr=base)
            near = finite_bar and (x > lo_guard or x < -lo_guard)
            if near:
                _bridge_fill(s, base, w, h, br)
                hs = h / N_SUB
                for j in range(N_SUB):
                    y = x + (br[j + 1] - br[j]) + _psi_capped(x, K, n_inf, kbar, cap) * hs
                    if finite_bar:
                        if y >= rbar:
                            y = 2.0 * rbar - y
                        elif y <= -rbar:
                            y = -2.0 * rbar - y
                    if y <= 0.0 or _uniform(s, base + uint64(17 + j)) < np.exp(-2.0 * x * y / (8.0 * hs)):
                        alive = False
                        break
                    x = y
                if not alive:
                    break
            else:
                y = x + w + _psi_capped(x, K, n_inf, kbar, cap) * h
                if finite_bar:
                    if y >= rbar:
                        y = 2.0 * rbar - y
                    elif y <= -rbar:
                        y = -2.0 * rbar - y
                if y <= 0.0 or _uniform(s, base + uint64(16)) < np.exp(-2.0 * x * y / (8.0 * h)):
                    alive = False
                    break
                x = y
        if alive:
            count += 1
    return count


@njit(cache=True)
def zeta_integrals(master, path_offset, n_paths, t, dt, n_steps, last_h,
                   K, N, kbar):
    """Samples of int_0^t c_kbar(theta_s)^{-2} ds by a drift-exact split step.

    Each step applies the Gaussian increment (variance 2h, reflected at 0 and
    mirrored at the entrance boundary for kbar > 0), then the full drift flow,
    which is exactly solvable: y = s_kbar(theta)^2 obeys the linear ODE
    y' = 2(N-2) - 2 kbar (N-1) y.  The clock integrand c^{-2} = 1/(1 - kbar y)
    is integrated in closed form along that flow, which keeps the accumulated
    integral accurate even when the noise lands theta near the boundary where
    c^{-2} blows up.
    """
    out = np.empty(n_paths, np.float64)
    if kbar > 0.0:
        rk = np.sqrt(kbar)
        th_bar = np.pi / (2.0 * rk)
    elif kbar < 0.0:
        rk = np.sqrt(-kbar)
        th_bar = np.inf
    else:
        rk = 0.0
        th_bar = np.inf
    lam = 2.0 * kbar * (N - 1.0)
    a_inf = (N - 2.0) / (kbar * (N - 1.0)) if kbar != 0.0 else 0.0
    c_const = 1.0 / (N - 1.0)  # 1 - kbar * a_inf

    for i in range(n_paths):
        s = path_seed(master, path_offset + i)
        th = 0.0
        acc = 0.0
        for k in range(n_steps):
            h = dt if k < n_steps - 1 else last_h
            base = uint64(k) * CTR_STRIDE
            th = th + np.sqrt(2.0 * h) * _normal(seed=s, ctr=base)
            if th < 0.0:
                th = -th
            if th >= th_bar:
                th = 2.0 * th_bar - th
                if th < 0.0:
                    th = -th
                if th >= th_bar:
                    th = th_bar * (1.0 - 1e-12)
            if kbar == 0.0:
                y = th * th + 2.0 * (N - 2.0) * h
                th = np.sqrt(y)
                acc += h  # c == 1
            else:
                if kbar > 0.0:
                    sv = np.sin(rk * th) / rk
                else:
                    sv = np.sinh(rk * th) / rk
                y0 = sv * sv
                d_coef = kbar * (y0 - a_inf)
                e = np.exp(-lam * h)
                y = a_inf + (y0 - a_inf) * e
                # int_0^h ds / (c_const - d_coef e^{-lam s})
                acc += (np.log(c_const / e - d_coef) - np.log(c_const - d_coef)) / (c_const * lam)
                if kbar > 0.0:
                    arg = rk * np.sqrt(y)
                    if arg > 1.0:
                        arg = 1.0
                    th = np.arcsin(arg) / rk
                else:
                    th = np.arcsinh(rk * np.sqrt(y)) / rk
        out[i] = acc
    return out
