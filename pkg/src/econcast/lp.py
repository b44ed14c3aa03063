"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves small linear programs of the form::

    maximize    c @ x
    subject to  A_ub @ x <= b_ub
                A_eq @ x == b_eq
                x >= 0

The tableau is dense and every pivot uses the lowest-index improving column
and the lowest-index leaving row among ratio ties, so the returned vertex is
fully determined by the variable and constraint ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LPResult", "LPError", "simplex_max"]

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


class LPError(RuntimeError):
    """Raised for infeasible, unbounded or malformed programs."""


@dataclass(frozen=True)
class LPResult:
    """Optimal primal/dual pair returned by :func:`simplex_max`.

    Attributes
    ----------
    x : ndarray
        Optimal primal point.
    objective : float
        ``c @ x``.
    dual_ub, dual_eq : ndarray
        Multipliers of the inequality and equality rows.
    dual_objective : float
        ``b_ub @ dual_ub + b_eq @ dual_eq``.
    duality_gap : float
        ``|objective - dual_objective| / max(1, |objective|)``.
    iterations : int
        Total pivots across both phases.
    """

    x: np.ndarray
    objective: float
    dual_ub: np.ndarray
    dual_eq: np.ndarray
    dual_objective: float
    duality_gap: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T: np.ndarray, basis: list[int], allowed: np.ndarray, max_iter: int) -> int:
    """Maximize the objective held in the last row of ``T`` (stored as -c)."""
    m = T.shape[0] - 1
    it = 0
    while True:
        red = T[-1, :-1]
        cand = np.flatnonzero((red < -PIVOT_TOL) & allowed)
        if cand.size == 0:
            return it
        col = int(cand[0])
        column = T[:m, col]
        pos = column > PIVOT_TOL
        if not pos.any():
            raise LPError("program is unbounded")
        ratios = np.full(m, np.inf)
        ratios[pos] = T[:m, -1][pos] / column[pos]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
        if it > max_iter:
            raise LPError(f"simplex exceeded {max_iter} pivots")


def simplex_max(
    c,
    A_ub=None,
    b_ub=None,
    A_eq=None,
    b_eq=None,
    max_iter: int = 50_000,
) -> LPResult:
    """Maximize ``c @ x`` over the polyhedron described above.

    Parameters
    ----------
    c : array_like, shape (n,)
    A_ub, b_ub : array_like, optional
        Inequality rows ``A_ub @ x <= b_ub``.
    A_eq, b_eq : array_like, optional
        Equality rows.
    max_iter : int
        Pivot budget per phase.

    Returns
    -------
    LPResult

    Raises
    ------
    LPError
        If the program is infeasible or unbounded.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    A_ub = np.zeros((0, n)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, n)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if A_ub.shape != (b_ub.size, n) or A_eq.shape != (b_eq.size, n):
        raise LPError("constraint shapes do not match the objective")
    m_ub, m_eq = b_ub.size, b_eq.size
    m = m_ub + m_eq

    # structural columns, then one slack per inequality row
    M = np.zeros((m, n + m_ub))
    M[:m_ub, :n] = A_ub
    M[:m_ub, n:] = np.eye(m_ub)
    M[m_ub:, :n] = A_eq
    rhs = np.concatenate([b_ub, b_eq])
    sign = np.where(rhs < 0, -1.0, 1.0)
    Ms = M * sign[:, None]
    rs = rhs * sign

    basis: list[int] = [-1] * m
    need_art = []
    for r in range(m):
        if r < m_ub and sign[r] > 0:
            basis[r] = n + r
        else:
            need_art.append(r)
    n_art = len(need_art)
    width = n + m_ub + n_art
    T = np.zeros((m + 1, width + 1))
    T[:m, : n + m_ub] = Ms
    T[:m, -1] = rs
    for k, r in enumerate(need_art):
        T[r, n + m_ub + k] = 1.0
        basis[r] = n + m_ub + k

    iters = 0
    if n_art:
        # phase one: maximize -sum(artificials)
        T[-1, n + m_ub :width] = 1.0
        for r in need_art:
            T[-1] -= T[r]
        iters += _run(T, basis, np.ones(width, bool), max_iter)
        if -T[-1, -1] > FEAS_TOL * max(1.0, np.abs(rs).max()):
            raise LPError("program is infeasible")
        # drive zero-level artificials out of the basis
        keep = np.ones(m, bool)
        for r in range(m):
            if basis[r] >= n + m_ub:
                cols = np.flatnonzero(np.abs(T[r, : n + m_ub]) > PIVOT_TOL)
                if cols.size:
                    _pivot(T, r, int(cols[0]))
                    basis[r] = int(cols[0])
                else:
                    keep[r] = False
        rows = np.flatnonzero(keep)
        T = np.vstack([T[rows], T[-1:]])
        T = np.delete(T, np.s_[n + m_ub : width], axis=1)
        basis = [basis[r] for r in rows]
    else:
        rows = np.arange(m)

    width = n + m_ub
    cost = np.concatenate([c, np.zeros(m_ub)])
    T[-1] = 0.0
    T[-1, :width] = -cost
    for r, b in enumerate(basis):
        T[-1] += cost[b] * T[r]
    iters += _run(T, basis, np.ones(width, bool), max_iter)

    z = np.zeros(width)
    for r, b in enumerate(basis):
        z[b] = T[r, -1]
    x = z[:n]
    objective = float(c @ x)

    # duals from the basis of the original (unflipped) rows
    y = np.zeros(m)
    if rows.size:
        B = M[np.ix_(rows, basis)]
        y[rows] = np.linalg.solve(B.T, cost[basis])
    dual_ub, dual_eq = y[:m_ub], y[m_ub:]
    dual_objective = float(rhs @ y)
    gap = abs(objective - dual_objective) / max(1.0, abs(objective))
    return LPResult(x, objective, dual_ub, dual_eq, dual_objective, gap, iters)
