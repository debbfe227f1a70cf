"""Exact discrete optimal transport, total variation, and the dual check.

The primal solver is a transportation simplex (see ``_netsimplex``) run on
epsilon-perturbed demands to keep bases nondegenerate; the perturbation is
removed after convergence by re-solving the flows on the final basis tree
against the exact marginals.  Optimality is certified by the returned dual
potentials: every reduced cost is >= -1e-11 and basic arcs are tight, so the
complementary-slackness gap is at machine scale.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from . import _netsimplex
from .errors import IterationCapError, SolverError

__all__ = [
    "DiscreteMeasure",
    "CostMatrix",
    "TransportPlan",
    "transport_cost",
    "brute_force_uniform",
    "total_variation",
    "kr_dual_value",
]

_RTOL = -1e-11       # entering-arc threshold (dual feasibility tolerance)
_BLAND_AFTER = 64    # degenerate-pivot run length before Bland pricing


@dataclass
class DiscreteMeasure:
    """Probability weights over an indexed point set."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
        self.weights = w

    def __len__(self):
        return len(self.weights)

    @classmethod
    def dirac(cls, index: int, size: int) -> "DiscreteMeasure":
        w = np.zeros(size)
        w[index] = 1.0
        return cls(w)


@dataclass
class CostMatrix:
    """Pairwise nonnegative costs; ``metric_flag`` asserts metric structure.

    With ``validate=True`` (default) the metric axioms are checked up to
    1e-10: symmetry, zero diagonal, and the triangle inequality.  Large
    instances whose metric structure is known a priori may pass
    ``validate=False``.
    """

    entries: np.ndarray
    metric_flag: bool = False
    validate: bool = True

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2:
            raise ValueError("entries must be a 2-D matrix")
        if np.any(e < 0.0):
            raise ValueError("costs must be nonnegative")
        self.entries = e
        if self.metric_flag and self.validate:
            self._check_metric()

    def _check_metric(self):
        e = self.entries
        n, m = e.shape
        if n != m:
            raise ValueError("metric cost must be square")
        if np.max(np.abs(e - e.T)) > 1e-10:
            raise ValueError("metric cost must be symmetric")
        if np.max(np.abs(np.diag(e))) > 1e-10:
            raise ValueError("metric cost must have zero diagonal")
        for k in range(n):
            if np.min(e[:, k, None] + e[None, k, :] - e) < -1e-10:
                raise ValueError("triangle inequality violated")

    @property
    def shape(self):
        return self.entries.shape


@dataclass
class TransportPlan:
    """Optimal coupling matrix and its cost, with the dual certificate."""

    matrix: np.ndarray
    value: float
    u: np.ndarray = field(repr=False, default=None)
    v: np.ndarray = field(repr=False, default=None)
    gap: float = 0.0
    iterations: int = 0


def transport_cost(C: CostMatrix, mu: DiscreteMeasure, nu: DiscreteMeasure,
                   max_iter: int | None = None) -> TransportPlan:
    """Exact minimum of <pi, C> over couplings of mu and nu.

    The simplex runs on the exact marginals; degeneracy is handled by the
    Bland pricing fallback.  If the iteration cap is hit anyway, one retry
    perturbs the demands (epsilon * column index) to break ties and the
    perturbation is removed by re-solving the flows on the final basis tree
    (the perturbation is sized so removal stays within the certificate).
    """
    cm = np.ascontiguousarray(C.entries, dtype=float)
    n, m = cm.shape
    if len(mu) != n or len(nu) != m:
        raise ValueError("dimension mismatch between cost and marginals")
    a = mu.weights.astype(float).copy()
    b = nu.weights.astype(float).copy()
    if max_iter is None:
        max_iter = 300 * (n + m) + 50_000
    status, parent, arc_i, arc_j, _flow, u, v, its = _netsimplex.solve(
        cm, a, b, max_iter, -_RTOL, _BLAND_AFTER)
    if status == _netsimplex.ITER_CAP:
        eps = 1e-13 / (m * m)
        pert = eps * np.arange(1, m + 1, dtype=float)
        b_p = b + pert
        a_p = a.copy()
        a_p[-1] += pert.sum()
        status, parent, arc_i, arc_j, _flow, u, v, its = _netsimplex.solve(
            cm, a_p, b_p, max_iter, -_RTOL, _BLAND_AFTER)
        if status == _netsimplex.ITER_CAP:
            raise IterationCapError(f"simplex iteration cap after {its} pivots")
    flow = _netsimplex.tree_flows(parent, arc_i, arc_j, a, b)
    flow = np.maximum(flow, 0.0)
    plan = np.zeros((n, m))
    nodes = np.arange(n + m)
    mask = nodes != 0
    np.add.at(plan, (arc_i[mask], arc_j[mask]), flow[mask])
    value = float(np.sum(plan * cm))
    dual = float(a @ u + b @ v)
    gap = abs(value - dual)
    if gap > 1e-9 * (1.0 + abs(value)):
        raise SolverError(f"complementary slackness gap {gap} too large")
    return TransportPlan(matrix=plan, value=value, u=u, v=v, gap=gap, iterations=its)


def brute_force_uniform(C: CostMatrix, n: int | None = None) -> float:
    """Exact optimum for uniform marginals on a square cost, n <= 8.

    Birkhoff: the optimum over couplings of uniforms is attained at a
    permutation; enumerate all of them.
    """
    e = C.entries
    if e.shape[0] != e.shape[1]:
        raise ValueError("brute force requires a square cost")
    size = e.shape[0] if n is None else n
    if size > 8:
        raise ValueError("brute force limited to n <= 8")
    rows = np.arange(size)
    best = math.inf
    for perm in itertools.permutations(range(size)):
        tot = e[rows, perm].sum()
        if tot < best:
            best = tot
    return best / size


def total_variation(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Sup-event total variation: half the L1 distance of the weights."""
    if len(mu) != len(nu):
        raise ValueError("measures must share a support index set")
    return 0.5 * float(np.abs(mu.weights - nu.weights).sum())


def kr_dual_value(C: CostMatrix, mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Kantorovich-Rubinstein dual: max f.(mu-nu) over 1-Lipschitz-w.r.t.-C f.

    Solved as an exact linear program; must match the primal optimum within
    1e-8 for metric costs.
    """
    if not C.metric_flag:
        raise ValueError("kr_dual_value requires a metric cost")
    e = C.entries
    n = e.shape[0]
    if len(mu) != n or len(nu) != n:
        raise ValueError("dimension mismatch")
    d = mu.weights - nu.weights
    ii, jj = np.where(~np.eye(n, dtype=bool))
    A = np.zeros((len(ii), n))
    A[np.arange(len(ii)), ii] = 1.0
    A[np.arange(len(ii)), jj] = -1.0
    ub = e[ii, jj]
    bounds = [(0.0, 0.0)] + [(None, None)] * (n - 1)  # pin the gauge f_0 = 0
    res = linprog(-d, A_ub=A, b_ub=ub, bounds=bounds, method="highs")
    if not res.success:
        raise SolverError(f"KR dual LP failed: {res.message}")
    return float(-res.fun)
