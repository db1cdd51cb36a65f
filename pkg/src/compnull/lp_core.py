"""Small dense linear programs: maximize objective @ c subject to row and bound constraints.

The solver is a two-phase tableau simplex using Bland's rule for both the
entering and leaving choice, so a given program always pivots the same
way and returns the same vertex.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_PIVOT_TOL = 1e-11


def _as_rows(rows, dim: int) -> tuple[np.ndarray, np.ndarray]:
    if rows is None:
        return np.zeros((0, dim)), np.zeros(0)
    if isinstance(rows, tuple) and len(rows) == 2 and isinstance(rows[0], np.ndarray):
        A, b = rows
    else:
        rows = list(rows)
        if not rows:
            return np.zeros((0, dim)), np.zeros(0)
        A = np.array([r[0] for r in rows], dtype=float)
        b = np.array([r[1] for r in rows], dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, dim)
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape[0] != b.size:
        raise ValueError("row coefficient and bound counts differ")
    return A, b


@dataclass(frozen=True)
class LinearProgram:
    """maximize ``objective @ c`` s.t. ``A_ub @ c <= b_ub``, ``A_lb @ c >= b_lb``, ``c >= var_lower``.

    ``rows`` / ``lower_rows`` accept either a list of ``(coeffs, bound)``
    pairs or an ``(A, b)`` tuple of arrays.
    """

    objective: np.ndarray
    rows: object = None
    lower_rows: object = None
    var_lower: np.ndarray = None
    A_ub: np.ndarray = field(init=False, repr=False)
    b_ub: np.ndarray = field(init=False, repr=False)
    A_lb: np.ndarray = field(init=False, repr=False)
    b_lb: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        obj = np.asarray(self.objective, dtype=float).ravel()
        if obj.size < 1:
            raise ValueError("objective must have at least one coefficient")
        L = obj.size
        A_ub, b_ub = _as_rows(self.rows, L)
        A_lb, b_lb = _as_rows(self.lower_rows, L)
        lb = np.zeros(L) if self.var_lower is None else np.asarray(self.var_lower, dtype=float).ravel()
        if lb.size != L:
            raise ValueError("var_lower length must match the objective")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "var_lower", lb)
        object.__setattr__(self, "A_ub", A_ub)
        object.__setattr__(self, "b_ub", b_ub)
        object.__setattr__(self, "A_lb", A_lb)
        object.__setattr__(self, "b_lb", b_lb)

    @property
    def dim(self) -> int:
        return self.objective.size

    def as_upper_form(self) -> tuple[np.ndarray, np.ndarray]:
        """All constraints except variable bounds as ``A @ c <= b``."""
        return np.vstack([self.A_ub, -self.A_lb]), np.concatenate([self.b_ub, -self.b_lb])

    def max_violation(self, c: np.ndarray) -> float:
        A, b = self.as_upper_form()
        v = [np.max(self.var_lower - c)]
        if b.size:
            v.append(np.max(A @ c - b))
        return float(max(v))


@dataclass(frozen=True)
class LpSolution:
    """Solver result.

    ``active`` lists the constraints that are nonbasic at the returned
    vertex: index k < L means bound ``c_k >= var_lower_k``; index L + r
    means row r of ``as_upper_form()`` (upper rows first, then lower rows).
    """

    status: str
    c_star: np.ndarray | None = None
    value: float = float("nan")
    active: tuple[int, ...] = ()
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class PivotBudgetExceeded(RuntimeError):
    pass


def _pivot(T: np.ndarray, obj: np.ndarray, basis: list[int], r: int, j: int) -> None:
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])
    obj -= obj[j] * T[r]
    basis[r] = j


def _run_simplex(T, obj, basis, n_cols, budget, pivots):
    """Bland-rule simplex iterations on a tableau in maximisation form.

    ``obj`` holds reduced costs (z_j - c_j); a column may enter while its
    entry is negative. Returns (status, pivots).
    """
    while True:
        entering = -1
        for j in range(n_cols):
            if obj[j] < -OPT_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL, pivots
        col = T[:, entering]
        rhs = T[:, -1]
        best_r = -1
        best_ratio = np.inf
        for r in np.flatnonzero(col > _PIVOT_TOL):
            ratio = max(rhs[r], 0.0) / col[r]
            if ratio < best_ratio - 1e-14 or (
                abs(ratio - best_ratio) <= 1e-14 and basis[r] < basis[best_r]
            ):
                best_ratio = ratio
                best_r = r
        if best_r < 0:
            return UNBOUNDED, pivots
        pivots += 1
        if pivots > budget:
            raise PivotBudgetExceeded(f"simplex exceeded pivot budget of {budget}")
        _pivot(T, obj, basis, best_r, entering)


def lp_maximize(lp: LinearProgram) -> LpSolution:
    """Solve ``lp`` exactly (up to floating point) with a deterministic two-phase simplex."""
    L = lp.dim
    A, b = lp.as_upper_form()
    m = b.size
    lb = lp.var_lower
    b = b - A @ lb if m else b
    budget = 50 * (L + m)

    if m == 0:
        # Only bounds: optimum at the lower bound unless some coefficient is positive.
        if np.any(lp.objective > OPT_TOL):
            return LpSolution(UNBOUNDED)
        return LpSolution(OPTIMAL, lb.copy(), float(lp.objective @ lb), tuple(range(L)))

    neg = b < 0
    n_art = int(neg.sum())
    n_struct = L + m
    width = n_struct + n_art + 1
    T = np.zeros((m, width))
    T[:, :L] = A
    T[:, L : L + m] = np.eye(m)
    T[:, -1] = b
    T[neg] *= -1.0
    basis = list(range(L, L + m))
    for k, r in enumerate(np.flatnonzero(neg)):
        T[r, n_struct + k] = 1.0
        basis[r] = n_struct + k

    pivots = 0
    if n_art:
        obj = np.zeros(width)
        obj[n_struct : n_struct + n_art] = 1.0  # maximise -sum(artificials)
        for r in np.flatnonzero(neg):
            obj -= T[r]
        _, pivots = _run_simplex(T, obj, basis, n_struct + n_art, budget, pivots)
        if obj[-1] < -FEAS_TOL * max(1.0, np.abs(b).max()):
            return LpSolution(INFEASIBLE, pivots=pivots)
        # Drive remaining (zero-level) artificials out of the basis.
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if basis[r] >= n_struct:
                cand = np.flatnonzero(np.abs(T[r, :n_struct]) > 1e-9)
                if cand.size:
                    _pivot(T, obj, basis, r, int(cand[0]))
                else:
                    keep[r] = False
        T = np.delete(T, np.s_[n_struct : n_struct + n_art], axis=1)[keep]
        basis = [bv for bv, k in zip(basis, keep) if k]

    obj = np.zeros(n_struct + 1)
    obj[:L] = -lp.objective
    for r, bv in enumerate(basis):
        if obj[bv] != 0.0:
            obj -= obj[bv] * T[r]
    status, pivots = _run_simplex(T, obj, basis, n_struct, budget, pivots)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, pivots=pivots)

    y = np.zeros(n_struct)
    for r, bv in enumerate(basis):
        y[bv] = T[r, -1]
    c_star = lb + np.maximum(y[:L], 0.0)
    in_basis = set(basis)
    active = tuple(j for j in range(n_struct) if j not in in_basis)
    return LpSolution(OPTIMAL, c_star, float(lp.objective @ c_star), active, pivots)


def lp_brute_oracle(lp: LinearProgram, box: float = 1e7) -> LpSolution:
    """Optimum by enumerating every vertex (L active constraints among rows and bounds).

    A large box is added so that unbounded programs show up as optima on
    the box. Only for L <= 3.
    """
    L = lp.dim
    if L > 3:
        raise ValueError("brute-force oracle supports at most 3 variables")
    A, b = lp.as_upper_form()
    lb = lp.var_lower
    G = np.vstack([-np.eye(L), A, np.eye(L)])
    h = np.concatenate([-lb, b, lb + box])
    n_real = L + b.size
    combos = np.array(list(itertools.combinations(range(G.shape[0]), L)), dtype=int)
    M = G[combos]  # (K, L, L)
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    combos, M = combos[ok], M[ok]
    if combos.size == 0:
        return LpSolution(INFEASIBLE)
    X = np.linalg.solve(M, h[combos][..., None])[..., 0]
    slack = X @ G.T - h[None, :]
    scale = 1.0 + np.abs(h)[None, :]
    feasible = np.all(slack <= 1e-8 * scale, axis=1)
    if not feasible.any():
        return LpSolution(INFEASIBLE)
    X, combos = X[feasible], combos[feasible]
    vals = X @ lp.objective
    best = int(np.argmax(vals))
    x = X[best]
    on_box = np.any(np.abs(slack[feasible][best][n_real:]) <= 1e-6 * box)
    if on_box:
        return LpSolution(UNBOUNDED)
    return LpSolution(OPTIMAL, x, float(vals[best]), tuple(int(c) for c in combos[best]))
