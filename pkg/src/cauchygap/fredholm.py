"""Nystrom discretisation of gap probabilities and resolvent data.

On a set I the gap probability is det(1 - K) restricted to I.  Each piece of
I gets its own Gauss-Legendre rule; semi-infinite pieces are mapped onto
[0, 1) first.  The symmetrised matrix M_ij = sqrt(w_i) K(x_i, x_j) sqrt(w_j)
is factored once, and the same factorisation gives the endpoint values of
Q = (1-K)^-1 phi, P = (1-K)^-1 psi and of the resolvent kernel.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import ConditioningError, DomainError, NumericError
from .specfun import gauss_legendre

DEFAULT_ORDER = 64
MAX_ORDER = 512
TAIL_MAPS = ("rational", "tangent")


def _tail_nodes(lo: float, order: int, tail_map: str):
    """Nodes and weights for (lo, inf)."""
    t, wt = gauss_legendre(order).on_interval(0.0, 1.0)
    if tail_map == "rational":
        scale = max(1.0, abs(lo))
        return lo + scale * t / (1.0 - t), scale * wt / (1.0 - t) ** 2
    if tail_map == "tangent":
        th0 = math.atan(lo)
        th = th0 + (0.5 * math.pi - th0) * t
        return np.tan(th), (0.5 * math.pi - th0) * wt / np.cos(th) ** 2
    raise DomainError(f"unknown tail map {tail_map!r}; choose from {TAIL_MAPS}")


def discretise(intervals, order: int, tail_map: str = "rational"):
    xs, ws = [], []
    for lo, hi in intervals.pieces():
        if math.isinf(lo) and math.isinf(hi):
            for part in ((-math.inf, 0.0), (0.0, math.inf)):
                x, w = _piece(part, order, tail_map)
                xs.append(x)
                ws.append(w)
            continue
        x, w = _piece((lo, hi), order, tail_map)
        xs.append(x)
        ws.append(w)
    if not xs:
        return np.empty(0), np.empty(0)
    return np.concatenate(xs), np.concatenate(ws)


def _piece(part, order, tail_map):
    lo, hi = part
    if math.isinf(hi):
        return _tail_nodes(lo, order, tail_map)
    if math.isinf(lo):
        x, w = _tail_nodes(-hi, order, tail_map)
        return -x[::-1], w[::-1]
    return gauss_legendre(order).on_interval(lo, hi)


@dataclass
class NystromSystem:
    spec: object
    intervals: object
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    matrix: np.ndarray

    @classmethod
    def build(cls, spec, intervals, order: int = DEFAULT_ORDER, tail_map: str = "rational"):
        if order < 4:
            raise DomainError(f"quadrature order must be at least 4, got {order}")
        x, w = discretise(intervals, order, tail_map)
        root = np.sqrt(w)
        mat = root[:, None] * spec.gram(x) * root[None, :] if x.size else np.empty((0, 0))
        if not np.all(np.isfinite(mat)):
            raise NumericError("non-finite kernel values in the Nystrom matrix")
        return cls(spec, intervals, order, x, w, mat)

    @property
    def root_weights(self):
        return np.sqrt(self.weights)

    def factor(self):
        n = self.nodes.size
        return lu_factor(np.eye(n) - self.matrix, check_finite=False)

    def determinant(self, lu=None) -> float:
        if self.nodes.size == 0:
            return 1.0
        lu, piv = lu if lu is not None else self.factor()
        diag = np.diag(lu)
        sign = (-1) ** int(np.sum(piv != np.arange(piv.size)))
        return float(sign * np.prod(diag))


def det_gap(spec, intervals, order: int = DEFAULT_ORDER, tail_map: str = "rational") -> float:
    """E2(0; I) = det(1 - K) on I at a fixed quadrature order per piece."""
    return NystromSystem.build(spec, intervals, order, tail_map).determinant()


def converged_det_gap(spec, intervals, tol: float = 1e-10, order: int = DEFAULT_ORDER,
                      cap: int = MAX_ORDER, tail_map: str = "rational"):
    """Double the order until successive determinants differ by less than tol.

    Returns (value, order used, last change).  Raises NumericError if the cap
    is reached first.
    """
    prev = det_gap(spec, intervals, order, tail_map)
    while order < cap:
        order *= 2
        cur = det_gap(spec, intervals, order, tail_map)
        change = abs(cur - prev)
        if change < tol:
            return cur, order, change
        prev = cur
    raise NumericError(f"determinant not converged to {tol:g} by order {cap} (last change {change:.3g})")


@dataclass(frozen=True)
class ResolventData:
    """Endpoint data of the resolvent on an interval set.

    ``q[j]``, ``p[j]`` are Q, P at ``endpoints[j]``; ``resolvent[j, k]`` is
    R(endpoints[j], endpoints[k]); u, v, w are the inner products of phi and
    psi with Q and P.
    """

    E: float
    endpoints: tuple
    q: np.ndarray
    p: np.ndarray
    u: float
    v: float
    w: float
    resolvent: np.ndarray

    @property
    def R(self):
        return np.diag(self.resolvent)


def resolvent_at_endpoints(spec, intervals, order: int = 128, tail_map: str = "rational") -> ResolventData:
    system = NystromSystem.build(spec, intervals, order, tail_map)
    ends = np.asarray(intervals.endpoints(), dtype=float)
    f_end, p_end = spec.phi_psi(ends)
    k_ends = spec(ends[:, None], ends[None, :])
    if system.nodes.size == 0:
        return ResolventData(1.0, tuple(ends), f_end, p_end, 0.0, 0.0, 0.0, np.atleast_2d(k_ends))
    lu = system.factor()
    E = system.determinant(lu)
    if not E > 1e-300 or np.min(np.abs(np.diag(lu[0]))) < 1e-14:
        raise ConditioningError(f"1 - K is numerically singular (E2 = {E:.3g})")
    x, wq, root = system.nodes, system.weights, system.root_weights
    f, p = spec.phi_psi(x)
    # each column: sqrt(w) times the right-hand side, solved in the symmetric frame
    k_row = spec(ends[:, None], x[None, :])
    rhs = np.column_stack([root * f, root * p, (root * k_row).T])
    sol = lu_solve(lu, rhs, check_finite=False)
    Q, P = sol[:, 0] / root, sol[:, 1] / root
    q = f_end + k_row @ (wq * Q)
    pe = p_end + k_row @ (wq * P)
    res = k_ends + (root * k_row) @ sol[:, 2:]
    u = float(np.sum(wq * Q * f))
    v = float(np.sum(wq * Q * p))
    w = float(np.sum(wq * P * p))
    return ResolventData(E, tuple(ends), q, pe, u, v, w, 0.5 * (res + res.T))
