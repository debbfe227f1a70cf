"""Deterministic special-function layer.

Comparison functions s/c/t for any curvature sign, the Gaussian-window
function chi, the clock function eta, the radial drift psi, Gegenbauer
polynomials by three-term recursion, and the spectral-series coefficients.
Everything is a pure function; array inputs broadcast where noted.

chi is built on a self-contained rational erf kernel (Cody's CALERF
approximations, max relative error ~1e-16) rather than a platform library.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PoleError

__all__ = [
    "CurvatureDimension",
    "comparison_fns",
    "s_k",
    "c_k",
    "chi",
    "norm_cdf",
    "interval_survival",
    "interval_survival_slope0",
    "eta",
    "psi",
    "gegenbauer",
    "gegenbauer_value_at_one",
    "series_coefficient",
    "log_beta",
]

_GEGENBAUER_N_MAX = 200


@dataclass(frozen=True)
class CurvatureDimension:
    """Curvature/dimension pair (K, N) with the derived quantities.

    K is a lower curvature bound (1/length^2); N an upper dimension bound in
    [2, inf].  ``rbar`` is the diameter bound pi*sqrt((N-1)/K), finite exactly
    when K > 0 and N < inf.  ``kbar`` = K/(N-1) is the sectional-curvature
    scale of the model space; it is inapplicable at N = inf (kept as 0.0 with
    ``kbar_defined`` False).
    """

    K: float
    N: float
    rbar: float = field(init=False)
    kbar: float = field(init=False)
    kbar_defined: bool = field(init=False)

    def __post_init__(self):
        if not (self.N >= 2.0):
            raise ValueError(f"N must be >= 2, got {self.N}")
        if math.isinf(self.N):
            object.__setattr__(self, "kbar", 0.0)
            object.__setattr__(self, "kbar_defined", False)
        else:
            object.__setattr__(self, "kbar", self.K / (self.N - 1.0))
            object.__setattr__(self, "kbar_defined", True)
        if self.K > 0.0 and not math.isinf(self.N):
            object.__setattr__(self, "rbar", math.pi * math.sqrt((self.N - 1.0) / self.K))
        else:
            object.__setattr__(self, "rbar", math.inf)

    @property
    def n_finite(self) -> bool:
        return not math.isinf(self.N)


def s_k(kbar: float, theta):
    """Comparison sine: sin/linear/sinh by the sign of kbar."""
    theta = np.asarray(theta, dtype=float)
    if kbar > 0.0:
        r = math.sqrt(kbar)
        out = np.sin(r * theta) / r
    elif kbar < 0.0:
        r = math.sqrt(-kbar)
        out = np.sinh(r * theta) / r
    else:
        out = theta.copy()
    return out if out.ndim else float(out)


def c_k(kbar: float, theta):
    """Comparison cosine: cos/1/cosh by the sign of kbar."""
    theta = np.asarray(theta, dtype=float)
    if kbar > 0.0:
        out = np.cos(math.sqrt(kbar) * theta)
    elif kbar < 0.0:
        out = np.cosh(math.sqrt(-kbar) * theta)
    else:
        out = np.ones_like(theta)
    return out if out.ndim else float(out)


def comparison_fns(kbar: float, theta: float) -> tuple[float, float, float]:
    """Return (s, c, s/c) at theta.  Raises PoleError where c vanishes."""
    s = s_k(kbar, theta)
    c = c_k(kbar, theta)
    if abs(c) < 1e-12:
        raise PoleError(f"tan ratio pole: c_{kbar}({theta}) = {c}")
    return s, c, s / c


# ---------------------------------------------------------------------------
# chi and its erf kernel (Cody, "Rational Chebyshev approximation for the
# error function", coefficients as in the netlib CALERF routine).
# ---------------------------------------------------------------------------

_ERF_A = (3.16112374387056560e00, 1.13864154151050156e02,
          3.77485237685302021e02, 3.20937758913846947e03,
          1.85777706184603153e-1)
_ERF_B = (2.36012909523441209e01, 2.44024637934444173e02,
          1.28261652607737228e03, 2.84423683343917062e03)
_ERF_C = (5.64188496988670089e-1, 8.88314979438837594e00,
          6.61191906371416295e01, 2.98635138197400131e02,
          8.81952221241769090e02, 1.71204761263407058e03,
          2.05107837782607147e03, 1.23033935479799725e03,
          2.15311535474403846e-8)
_ERF_D = (1.57449261107098347e01, 1.17693950891312499e02,
          5.37181101862009858e02, 1.62138957456669019e03,
          3.29079923573345963e03, 4.36261909014324716e03,
          3.43936767414372164e03, 1.23033935480374942e03)
_ERF_P = (3.05326634961232344e-1, 3.60344899949804439e-1,
          1.25781726111229246e-1, 1.60837851487422766e-2,
          6.58749161529837803e-4, 1.63153871373020978e-2)
_ERF_Q = (2.56852019228982242e00, 1.87295284992346047e00,
          5.27905102951428412e-1, 6.05183413124413191e-2,
          2.33520497626869185e-3)
_SQRPI = 5.6418958354775628695e-1  # 1/sqrt(pi)


def _erf_nonneg(y: np.ndarray) -> np.ndarray:
    """erf(y) for y >= 0 (vectorized rational approximation)."""
    out = np.empty_like(y)

    low = y <= 0.46875
    if np.any(low):
        yl = y[low]
        z = yl * yl
        num = _ERF_A[4] * z
        den = z
        for i in range(3):
            num = (num + _ERF_A[i]) * z
            den = (den + _ERF_B[i]) * z
        out[low] = yl * (num + _ERF_A[3]) / (den + _ERF_B[3])

    mid = (~low) & (y <= 4.0)
    if np.any(mid):
        ym = y[mid]
        num = _ERF_C[8] * ym
        den = ym
        for i in range(7):
            num = (num + _ERF_C[i]) * ym
            den = (den + _ERF_D[i]) * ym
        r = (num + _ERF_C[7]) / (den + _ERF_D[7])
        ysq = np.floor(ym * 16.0) / 16.0
        erfc = np.exp(-ysq * ysq) * np.exp(-(ym - ysq) * (ym + ysq)) * r
        out[mid] = 1.0 - erfc

    high = y > 4.0
    if np.any(high):
        yh = y[high]
        z = 1.0 / (yh * yh)
        num = _ERF_P[5] * z
        den = z
        for i in range(4):
            num = (num + _ERF_P[i]) * z
            den = (den + _ERF_Q[i]) * z
        r = z * (num + _ERF_P[4]) / (den + _ERF_Q[4])
        r = (_SQRPI - r) / yh
        ysq = np.floor(yh * 16.0) / 16.0
        with np.errstate(under="ignore"):
            erfc = np.exp(-ysq * ysq) * np.exp(-(yh - ysq) * (yh + ysq)) * r
        erfc[yh > 26.6] = 0.0  # underflow region: erfc < 5e-309
        out[high] = 1.0 - erfc

    return out


def chi(r):
    """Gaussian window (2*pi)^(-1/2) * int_{-r}^{r} exp(-u^2/2) du.

    Accepts scalars or arrays; r must be >= 0 (inf allowed, giving 1).
    """
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("chi: negative argument")
    inf_mask = np.isinf(arr)
    y = np.where(inf_mask, 0.0, arr) * (1.0 / math.sqrt(2.0))
    out = _erf_nonneg(np.atleast_1d(y))
    out = out.reshape(np.shape(y))
    out = np.where(inf_mask, 1.0, out)
    return out if out.ndim else float(out)


def norm_cdf(x):
    """Standard normal CDF through the same erf kernel (any sign)."""
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    e = _erf_nonneg(np.abs(arr) * (1.0 / math.sqrt(2.0)))
    out = np.where(arr >= 0.0, 0.5 * (1.0 + e), 0.5 * (1.0 - e))
    return out if np.ndim(x) else float(out)


def interval_survival(x: float, L: float, T):
    """P[Brownian motion from x stays inside (0, L) for duration T].

    Image-charge sum for sqrt(T) small against L, spectral sine series
    otherwise.  L = inf reduces to the one-sided window chi(x/sqrt(T)).
    Vectorized over T.
    """
    if not 0.0 <= x <= L:
        raise ValueError("interval_survival: x outside [0, L]")
    Tarr = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(Tarr <= 0.0):
        raise ValueError("interval_survival: T must be positive")
    if x == 0.0 or x == L:
        out = np.zeros_like(Tarr)
        return out if np.ndim(T) else 0.0
    if math.isinf(L):
        out = chi(x / np.sqrt(Tarr))
        return out if np.ndim(T) else float(out)
    out = np.empty_like(Tarr)
    sig = np.sqrt(Tarr)
    small = sig < 0.7 * L
    if np.any(small):
        s = sig[small]
        acc = np.zeros_like(s)
        for k in range(-3, 4):
            acc += (norm_cdf((L - x + 2 * k * L) / s) - norm_cdf((-x + 2 * k * L) / s)
                    - norm_cdf((L + x + 2 * k * L) / s) + norm_cdf((x + 2 * k * L) / s))
        out[small] = acc
    if np.any(~small):
        Tb = Tarr[~small]
        acc = np.zeros_like(Tb)
        n = 1
        while True:
            term = (4.0 / (n * math.pi)) * math.sin(n * math.pi * x / L) * \
                np.exp(-n * n * math.pi ** 2 * Tb / (2.0 * L * L))
            acc += term
            if (4.0 / (n * math.pi)) * np.max(np.exp(-n * n * math.pi ** 2 * Tb / (2.0 * L * L))) < 1e-14:
                break
            n += 2
        out[~small] = acc
    out = np.clip(out, 0.0, 1.0)
    return out if np.ndim(T) else float(out)


def interval_survival_slope0(L: float, T):
    """d/dx of interval_survival(x, L, T) at x -> 0+ (vectorized over T).

    L = inf gives the one-sided value sqrt(2/(pi T)); a finite upper barrier
    suppresses the slope by image/spectral corrections.
    """
    Tarr = np.atleast_1d(np.asarray(T, dtype=float))
    if np.any(Tarr <= 0.0):
        raise ValueError("interval_survival_slope0: T must be positive")
    if math.isinf(L):
        out = np.sqrt(2.0 / (math.pi * Tarr))
        return out if np.ndim(T) else float(out)
    out = np.empty_like(Tarr)
    sig = np.sqrt(Tarr)
    small = sig < 0.7 * L
    if np.any(small):
        s = sig[small]
        phi0 = 1.0 / math.sqrt(2.0 * math.pi)

        def dens(z):
            return np.exp(-z * z / 2.0) / math.sqrt(2.0 * math.pi)

        acc = phi0 + 2.0 * sum(dens(2 * k * L / s) for k in range(1, 4)) \
            - 2.0 * sum(dens((2 * k + 1) * L / s) for k in range(0, 4))
        out[small] = 2.0 * acc / s
    if np.any(~small):
        Tb = Tarr[~small]
        acc = np.zeros_like(Tb)
        n = 1
        while True:
            term = (4.0 / L) * np.exp(-n * n * math.pi ** 2 * Tb / (2.0 * L * L))
            acc += term
            if np.max(term) < 1e-16:
                break
            n += 2
        out[~small] = acc
    return out if np.ndim(T) else float(out)


def eta(K: float, t) -> float:
    """Clock function (e^{2Kt} - 1)/(2K), continuously = t at K = 0."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0.0):
        raise ValueError("eta: t must be nonnegative")
    if K == 0.0:
        out = t.copy()
    elif abs(K) * np.max(t, initial=0.0) < 1e-8:
        out = t + K * t * t  # series; next term (2/3)K^2 t^3 < 1e-16 * t
    else:
        out = np.expm1(2.0 * K * t) / (2.0 * K)
    return out if out.ndim else float(out)


def psi(cd: CurvatureDimension, u: float) -> float:
    """Radial drift: -2K*t_{kbar}(u/2) for finite N, -K*u at N = inf.

    Odd in u by construction (evaluated at |u| and sign-flipped).  Rejects
    |u| >= rbar, where the finite-N branch has a pole.
    """
    if abs(u) >= cd.rbar:
        raise PoleError(f"psi: |u|={abs(u)} outside (-rbar, rbar), rbar={cd.rbar}")
    if not cd.n_finite:
        return -cd.K * u
    if cd.K == 0.0:
        return 0.0
    au = abs(u)
    s, c, tr = comparison_fns(cd.kbar, au / 2.0)
    val = -2.0 * cd.K * tr
    return -val if u < 0.0 else val


def gegenbauer(n: int, N: float, x):
    """Gegenbauer polynomial of degree n and parameter (N-1)/2 at x.

    Upward three-term recursion; refuses n > 200 (inaccurate far beyond any
    use here).  x may be an array.
    """
    if n < 0:
        raise ValueError("gegenbauer: n must be nonnegative")
    if n > _GEGENBAUER_N_MAX:
        raise ValueError(f"gegenbauer: n > {_GEGENBAUER_N_MAX} refused")
    if N < 2.0:
        raise ValueError("gegenbauer: N < 2 unsupported")
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if n == 0:
        return p_prev if p_prev.ndim else float(p_prev)
    p = (N - 1.0) * x
    for k in range(2, n + 1):
        p, p_prev = ((2.0 * k + N - 3.0) / k) * x * p - ((k + N - 3.0) / k) * p_prev, p
    return p if p.ndim else float(p)


def gegenbauer_value_at_one(n: int, N: float) -> float:
    """P_n(1) = Gamma(n+N-1) / (Gamma(N-1) n!), the sup of |P_n| on [-1,1]."""
    if n == 0:
        return 1.0
    return math.exp(math.lgamma(n + N - 1.0) - math.lgamma(N - 1.0) - math.lgamma(n + 1.0))


def log_beta(x: float, y: float) -> float:
    """log B(x, y) through log-Gamma (overflow-safe)."""
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def series_coefficient(n: int, cd: CurvatureDimension, t: float) -> float:
    """Coefficient of P_{2n+1} in the spectral series of the cost (K>0, N<inf):

        e^{-(2n+1)(2n+N) K t / (N-1)} * (-1)^n (4n+N+1) / (pi (2n+N))
            * B((N-1)/2, n+1/2)
    """
    if cd.K <= 0.0 or not cd.n_finite:
        raise ValueError("series_coefficient: requires K > 0 and N < inf")
    if n < 0 or t <= 0.0:
        raise ValueError("series_coefficient: need n >= 0 and t > 0")
    N = cd.N
    decay = -(2.0 * n + 1.0) * (2.0 * n + N) * cd.K * t / (N - 1.0)
    beta = math.exp(log_beta((N - 1.0) / 2.0, n + 0.5))
    sign = -1.0 if n % 2 else 1.0
    with np.errstate(under="ignore"):
        return math.exp(decay) * sign * (4.0 * n + N + 1.0) / (math.pi * (2.0 * n + N)) * beta
