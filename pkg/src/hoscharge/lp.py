"""Dense two-phase tableau simplex.

Solves::

    min  c @ x
    s.t. A_ub @ x <= b_ub
         A_eq @ x == b_eq
         lb <= x <= ub

for the small models produced by the subproblem and linearization modules
(tens of variables).  The pivoting loop is compiled with numba; everything
else is plain numpy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-9
FEAS_TOL = 1e-7
RATIO_TOL = 1e-10
BLAND_AFTER = 50

_OPTIMAL, _UNBOUNDED, _ITER_LIMIT = 0, 1, 2


class LPError(RuntimeError):
    """Numerical failure: iteration limit, unboundedness or a bad model."""


@dataclass
class LPResult:
    status: str  # "optimal" or "infeasible"
    x: Optional[np.ndarray]
    objective: float
    iterations: int

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@numba.njit(cache=True)
def _pivot(T, basis, r, c):
    m1, w = T.shape
    piv = T[r, c]
    for j in range(w):
        T[r, j] /= piv
    for i in range(m1):
        if i != r:
            f = T[i, c]
            if f != 0.0:
                for j in range(w):
                    T[i, j] -= f * T[r, j]
    basis[r] = c


@numba.njit(cache=True)
def _iterate(T, basis, ncols, max_iter, it):
    """Simplex pivots on the last tableau row; returns (status, iterations).

    Dantzig pricing with the largest pivot among tied rows keeps the tableau
    well conditioned; after ``BLAND_AFTER`` degenerate pivots in a row the
    smallest-index rule takes over until the objective moves again.
    """
    m = T.shape[0] - 1
    degenerate = 0
    while True:
        if it >= max_iter:
            return _ITER_LIMIT, it
        bland = degenerate >= BLAND_AFTER
        c = -1
        most = -COST_TOL
        for j in range(ncols):
            if T[m, j] < most:
                c = j
                if bland:
                    break
                most = T[m, j]
        if c < 0:
            return _OPTIMAL, it
        # Round-off can leave degenerate rows slightly negative; a negative
        # ratio would step backwards, so they count as zero.
        best = np.inf
        for i in range(m):
            if T[i, c] > PIVOT_TOL:
                best = min(best, max(T[i, -1], 0.0) / T[i, c])
        if best == np.inf:
            return _UNBOUNDED, it
        tol = RATIO_TOL * max(1.0, best)
        r = -1
        for i in range(m):
            if T[i, c] > PIVOT_TOL and max(T[i, -1], 0.0) / T[i, c] <= best + tol:
                if r < 0:
                    r = i
                elif bland:
                    if basis[i] < basis[r]:
                        r = i
                elif T[i, c] > T[r, c]:
                    r = i
        if T[r, -1] > PIVOT_TOL:
            degenerate = 0
        else:
            degenerate += 1
        _pivot(T, basis, r, c)
        it += 1


def _run(T, basis, ncols, max_iter, it):
    status, it = _iterate(T, basis, ncols, max_iter, it)
    if status == _UNBOUNDED:
        raise LPError("problem is unbounded")
    if status == _ITER_LIMIT:
        raise LPError("simplex iteration limit reached")
    return it


def _pow2_scale(v):
    """Reciprocal powers of two near ``v``; zeros map to one."""
    out = np.ones_like(v)
    nz = v > 0
    out[nz] = np.exp2(-np.round(np.log2(v[nz])))
    return out


def solve_standard(c, A_ub, b_ub, A_eq=None, b_eq=None, max_iter=None) -> LPResult:
    """``min c @ x`` over ``A_ub @ x <= b_ub, A_eq @ x == b_eq, x >= 0``.

    Arrays must be float64; rows are assumed to carry at least one nonzero.
    Rows and columns are equilibrated by powers of two, which is exact in
    floating point, before pivoting.
    """
    c_orig = c
    n = c.size
    m_ub = A_ub.shape[0]
    if A_eq is None:
        A_eq = np.zeros((0, n))
        b_eq = np.zeros(0)
    m_eq = A_eq.shape[0]
    if m_ub + m_eq and n:
        rs_ub = _pow2_scale(np.abs(A_ub).max(axis=1)) if m_ub else np.ones(0)
        rs_eq = _pow2_scale(np.abs(A_eq).max(axis=1)) if m_eq else np.ones(0)
        A_ub = A_ub * rs_ub[:, None]
        b_ub = b_ub * rs_ub
        A_eq = A_eq * rs_eq[:, None]
        b_eq = b_eq * rs_eq
        cs = _pow2_scale(np.maximum(np.abs(A_ub).max(axis=0, initial=0.0), np.abs(A_eq).max(axis=0, initial=0.0)))
        A_ub = A_ub * cs
        A_eq = A_eq * cs
        c = c * cs
    else:
        cs = np.ones(n)
    m = m_ub + m_eq
    if m == 0:
        if n and np.any(c < -COST_TOL):
            raise LPError("problem is unbounded")
        return LPResult("optimal", np.zeros(n), 0.0, 0)

    flip_ub = b_ub < 0
    art_rows = np.concatenate([np.flatnonzero(flip_ub), m_ub + np.arange(m_eq)])
    n_art = art_rows.size
    width = n + m_ub + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m_ub, :n] = A_ub
    T[:m_ub, n : n + m_ub] = np.eye(m_ub)
    T[:m_ub, -1] = b_ub
    T[m_ub:m, :n] = A_eq
    T[m_ub:m, -1] = b_eq
    T[:m_ub][flip_ub] *= -1.0
    T[m_ub:m][b_eq < 0] *= -1.0

    basis = np.empty(m, dtype=np.int64)
    basis[:m_ub] = n + np.arange(m_ub)
    T[art_rows, n + m_ub + np.arange(n_art)] = 1.0
    basis[art_rows] = n + m_ub + np.arange(n_art)

    max_iter = max_iter or 50 * (m + width) + 100
    scale = max(1.0, float(np.abs(T[:m, -1]).max()))
    it = 0

    if n_art:
        T[m, n + m_ub : width] = 1.0
        T[m] -= T[art_rows].sum(axis=0)
        it = _run(T, basis, width, max_iter, it)
        if -T[m, -1] > FEAS_TOL * scale:
            return LPResult("infeasible", None, np.inf, it)
        # Pivot zero-level artificials out of the basis; drop redundant rows.
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n + m_ub:
                row = np.abs(T[i, : n + m_ub])
                j = int(np.argmax(row))
                if row[j] > PIVOT_TOL:
                    _pivot(T, basis, i, j)
                else:
                    keep[i] = False
        if not keep.all():
            T = T[keep]
            basis = basis[keep[:m]]
            m = T.shape[0] - 1
        T = np.ascontiguousarray(np.hstack([T[:, : n + m_ub], T[:, -1:]]))

    width = n + m_ub
    T[m, :] = 0.0
    T[m, :n] = c
    for i in range(m):
        bvar = basis[i]
        if bvar < n and c[bvar] != 0.0:
            T[m] -= c[bvar] * T[i]
    it = _run(T, basis, width, max_iter, it)

    x = np.zeros(width)
    x[basis] = T[:m, -1]
    x = np.maximum(x[:n], 0.0) * cs
    return LPResult("optimal", x, float(c_orig @ x), it)


def solve_lp(
    c: Sequence[float],
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    bounds: Optional[Sequence[tuple[float, float]]] = None,
    max_iter: Optional[int] = None,
) -> LPResult:
    """Solve a linear program; see module docstring for the form.

    ``bounds`` defaults to ``(0, inf)`` for each variable; lower bounds must be
    finite.  Returns ``status="infeasible"`` when no point satisfies the
    constraints, raises :class:`LPError` on numerical failure.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.asarray(A_ub, dtype=float).reshape(-1, n)
    A_eq = np.zeros((0, n)) if A_eq is None else np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        lb = np.zeros(n)
        ub = np.full(n, np.inf)
    else:
        if len(bounds) != n:
            raise LPError("bounds length does not match objective")
        lb = np.array([b[0] for b in bounds], dtype=float)
        ub = np.array([np.inf if b[1] is None else b[1] for b in bounds], dtype=float)
    if not np.all(np.isfinite(lb)):
        raise LPError("lower bounds must be finite")
    if np.any(ub < lb - FEAS_TOL):
        return LPResult("infeasible", None, np.inf, 0)

    # Eliminate fixed variables and shift the rest to y = x - lb >= 0.
    free = np.flatnonzero(ub - lb > 0.0)
    b_ub = b_ub - A_ub @ lb
    b_eq = b_eq - A_eq @ lb
    A_ub = A_ub[:, free]
    A_eq = A_eq[:, free]
    span = (ub - lb)[free]
    capped = np.flatnonzero(np.isfinite(span))
    if capped.size:
        cap_rows = np.zeros((capped.size, free.size))
        cap_rows[np.arange(capped.size), capped] = 1.0
        A_ub = np.vstack([A_ub, cap_rows])
        b_ub = np.concatenate([b_ub, span[capped]])

    # Rows whose coefficients vanish are checked directly.
    keep_ub = np.any(A_ub != 0.0, axis=1)
    keep_eq = np.any(A_eq != 0.0, axis=1)
    if np.any(b_ub[~keep_ub] < -FEAS_TOL) or np.any(np.abs(b_eq[~keep_eq]) > FEAS_TOL):
        return LPResult("infeasible", None, np.inf, 0)

    res = solve_standard(
        np.ascontiguousarray(c[free]),
        np.ascontiguousarray(A_ub[keep_ub]),
        np.ascontiguousarray(b_ub[keep_ub]),
        np.ascontiguousarray(A_eq[keep_eq]),
        np.ascontiguousarray(b_eq[keep_eq]),
        max_iter=max_iter,
    )
    if not res.optimal:
        return res
    x = lb.copy()
    x[free] += res.x
    return LPResult("optimal", x, float(c @ x), res.iterations)
