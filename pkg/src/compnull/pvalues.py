"""Composite-null p-values: max, known-prior mixture, and the two LP-constrained kinds.

The constrained p-value of the i-th smallest observation is the largest
value of ``c @ phi(x_(i))`` over mixture coefficients ``c`` that the data
cannot rule out: ``c`` must keep the scaled null mixture below the
empirical distribution (plus a margin) at the observations, and its
increments between grid points below the empirical increments (plus or
minus the margin). In ``seq`` mode only constraints at or above x_(i)
are used; in ``glb`` mode all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .empirical import EcdfView, build_grid, epsilon_n
from .lp_core import FEAS_TOL, LinearProgram, lp_maximize
from .model import LabeledSample, NullFamily, Prior
from .special_fns import gamma_upper_quantile

METHODS = ("seq", "glb", "max", "mix")
PAIR_MARGINS = ("relaxed", "tight")

_DUAL_TOL = 1e-10
_MAX_ADD = 4


@dataclass(frozen=True)
class ConstraintVariant:
    """Knobs of the constraint set.

    sum_lower: lower bound on sum(c); 0 for the plain set, 0.9 for the primed one.
    pair_margin: "relaxed" allows grid increments of c @ phi to exceed the
        empirical increments by eps_n; "tight" requires them to stay eps_n below.
    gamma_beta, small_rank_exponent: ranks j <= n**small_rank_exponent use the
        Gamma-quantile upper bound with scale 1 / gamma_beta.
    """

    sum_lower: float = 0.0
    pair_margin: str = "relaxed"
    gamma_beta: float = 0.95
    small_rank_exponent: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.sum_lower <= 1.0:
            raise ValueError(f"sum_lower must lie in [0, 1], got {self.sum_lower}")
        if self.pair_margin not in PAIR_MARGINS:
            raise ValueError(f"pair_margin must be one of {PAIR_MARGINS}")
        if not 0.0 < self.gamma_beta < 1.0:
            raise ValueError(f"gamma_beta must lie in (0, 1), got {self.gamma_beta}")

    @property
    def primed(self) -> bool:
        return self.sum_lower > 0.0

    def plain(self) -> "ConstraintVariant":
        return replace(self, sum_lower=0.0)


PLAIN = ConstraintVariant()
PRIMED = ConstraintVariant(sum_lower=0.9)


@dataclass
class PValueSet:
    """p-values aligned to the sorted sample.

    coeffs[i] is the optimising coefficient vector (constrained methods
    only). infeasible_flags[i] is True where the LP had no feasible point
    and p[i] was taken from the fallback.
    """

    method: str
    p: np.ndarray
    coeffs: np.ndarray | None = None
    infeasible_flags: np.ndarray | None = None


def phi_matrix(sample: LabeledSample, family: NullFamily) -> np.ndarray:
    return family.cdf_matrix(sample.x)


def p_max_all(sample: LabeledSample, family: NullFamily, phi: np.ndarray | None = None) -> PValueSet:
    phi = phi_matrix(sample, family) if phi is None else phi
    return PValueSet("max", phi.max(axis=1))


def p_mix_all(
    sample: LabeledSample, family: NullFamily, prior: Prior, phi: np.ndarray | None = None
) -> PValueSet:
    phi = phi_matrix(sample, family) if phi is None else phi
    return PValueSet("mix", np.clip(phi @ prior.nu, 0.0, 1.0))


def u_bounds(sample: LabeledSample, variant: ConstraintVariant = PLAIN) -> np.ndarray:
    """Upper bounds on the scaled null mixture at each sorted observation."""
    n = sample.n
    ranks = EcdfView(sample.x).rank_count(sample.x)
    u = ranks / n + epsilon_n(n)
    cutoff = n**variant.small_rank_exponent
    scale = 1.0 / variant.gamma_beta
    cache: dict[int, float] = {}
    for j in np.flatnonzero(ranks <= cutoff):
        r = int(ranks[j])
        if r not in cache:
            cache[r] = gamma_upper_quantile(1.0 / n, r, scale) / n
        u[j] = cache[r]
    return u


@dataclass
class ConstraintSystem:
    """All linear constraints on c for one sample, arranged for prefix/suffix activation.

    Observation rows ``row_A[j] @ c <= row_b[j]`` are active for indices
    i <= j. Pair rows are sorted by their left grid point ``pair_t1`` in
    decreasing order, so the pairs active at index i form a prefix.
    """

    x: np.ndarray
    row_A: np.ndarray
    row_b: np.ndarray
    pair_A: np.ndarray
    pair_b: np.ndarray
    pair_t1: np.ndarray
    sum_lower: float

    @property
    def dim(self) -> int:
        return self.row_A.shape[1]

    def pairs_active(self, i: int) -> int:
        # number of pairs with t1 >= x_i; pair_t1 is decreasing
        return int(np.searchsorted(-self.pair_t1, -self.x[i], side="right"))

    def pair_activation_index(self) -> np.ndarray:
        """Largest sorted index i at which each pair is active (-1 if never)."""
        return np.searchsorted(self.x, self.pair_t1, side="right") - 1


def build_constraints(
    sample: LabeledSample,
    family: NullFamily,
    variant: ConstraintVariant = PLAIN,
    phi: np.ndarray | None = None,
) -> ConstraintSystem:
    n = sample.n
    if n < 2:
        raise ValueError("constrained p-values need n >= 2")
    phi = phi_matrix(sample, family) if phi is None else phi
    view = EcdfView(sample.x)
    eps = epsilon_n(n)
    sign = 1.0 if variant.pair_margin == "relaxed" else -1.0

    grid = build_grid(view).points
    g_phi = family.cdf_matrix(grid) if grid.size else np.zeros((0, family.size))
    g_ecdf = view.ecdf(grid)
    i1, i2 = np.triu_indices(grid.size, k=1)
    pair_A = g_phi[i2] - g_phi[i1]
    pair_b = g_ecdf[i2] - g_ecdf[i1] + sign * eps
    pair_t1 = grid[i1]
    order = np.argsort(-pair_t1, kind="stable")
    return ConstraintSystem(
        x=sample.x,
        row_A=phi,
        row_b=u_bounds(sample, variant),
        pair_A=pair_A[order],
        pair_b=pair_b[order],
        pair_t1=pair_t1[order],
        sum_lower=variant.sum_lower,
    )


class _Solver:
    """Constraint-generation LP solver over a ConstraintSystem.

    Working-set rows are drawn from the full system; the simplex rows
    ``sum(c) <= 1`` and ``sum(c) >= sum_lower`` and ``c >= 0`` are always present.
    Global row ids: q < P is pair q, q >= P is observation row q - P.
    """

    def __init__(self, system: ConstraintSystem):
        self.sys = system
        self.P = system.pair_A.shape[0]
        self.L = system.dim

    def _rows(self, ids: list[int]) -> tuple[np.ndarray, np.ndarray]:
        s = self.sys
        ids = np.asarray(ids, dtype=int)
        pair = ids[ids < self.P]
        obs = ids[ids >= self.P] - self.P
        A = np.vstack([s.pair_A[pair], s.row_A[obs]])
        b = np.concatenate([s.pair_b[pair], s.row_b[obs]])
        return A, b

    def _violations(self, c: np.ndarray, n_pairs: int, i: int) -> np.ndarray:
        s = self.sys
        pv = s.pair_A[:n_pairs] @ c - s.pair_b[:n_pairs]
        rv = s.row_A[i:] @ c - s.row_b[i:]
        return np.concatenate([pv, np.full(self.P - n_pairs, -np.inf), np.full(i, -np.inf), rv])

    def solve(self, obj: np.ndarray, i: int, n_pairs: int, start: list[int]):
        """Return (c, normals, working ids) or None when infeasible."""
        L = self.L
        work = sorted(set(start))
        ones = np.ones(L)
        while True:
            A, b = self._rows(work)
            A_ub = np.vstack([ones[None, :], A])
            b_ub = np.concatenate([[1.0], b])
            lower = (ones[None, :], np.array([self.sys.sum_lower])) if self.sys.sum_lower > 0 else None
            lp = LinearProgram(obj, (A_ub, b_ub), lower)
            sol = lp_maximize(lp)
            if not sol.optimal:
                return None
            c = sol.c_star
            viol = self._violations(c, n_pairs, i)
            worst = np.argsort(-viol, kind="stable")[:_MAX_ADD]
            worst = [int(q) for q in worst if viol[q] > FEAS_TOL and q not in work]
            if not worst:
                G_full, _ = lp.as_upper_form()
                G = np.vstack([-np.eye(L), G_full])
                normals = G[list(sol.active)] if len(sol.active) == L else None
                # map active upper-form rows back to global ids for warm starts
                basis_ids = [work[a - L - 1] for a in sol.active if L + 1 <= a < L + 1 + len(work)]
                return c, normals, basis_ids
            work = sorted(set(work) | set(worst))


def _dual_ok(normals: np.ndarray, objs: np.ndarray) -> np.ndarray:
    """For each objective row, whether it lies in the cone of the active normals."""
    try:
        y = np.linalg.solve(normals.T, objs.T)
    except np.linalg.LinAlgError:
        return np.zeros(objs.shape[0], dtype=bool)
    return np.all(y >= -_DUAL_TOL, axis=0)


def _anchor_point(system: ConstraintSystem, solver: "_Solver") -> np.ndarray | None:
    """A point feasible for the constraints of every index, or None if there is none."""
    L = system.dim
    if system.sum_lower == 0.0 and np.all(system.row_b >= 0) and np.all(system.pair_b >= 0):
        return np.zeros(L)
    P = system.pair_A.shape[0]
    res = solver.solve(system.row_A[0], 0, P, [])
    return None if res is None else res[0]


def _cut_towards_anchor(system, anchor, c_prev, i, pairs_prev, n_pairs):
    """Optimiser at index i when the previous optimiser violates observation row i.

    The segment from ``anchor`` to ``c_prev`` lies in the feasible set of
    index i + 1 and crosses the hyperplane ``phi_i @ c = u_i``; the crossing
    attains the largest value row i allows, so it is optimal provided the
    pairs newly activated at i accept it.
    """
    phi_i = system.row_A[i]
    u_i = system.row_b[i]
    v = phi_i @ c_prev
    if v <= u_i + FEAS_TOL:
        return None
    a0 = phi_i @ anchor
    lam = (u_i - a0) / (v - a0)
    c = anchor + lam * (c_prev - anchor)
    if n_pairs > pairs_prev:
        new = slice(pairs_prev, n_pairs)
        if np.any(system.pair_A[new] @ c - system.pair_b[new] > FEAS_TOL):
            return None
    return c


def _extend_vertex(system, c, normals, i, glb, activation, window: int = 8) -> int:
    """Smallest index lo <= i such that vertex c stays optimal for every index in [lo, i).

    Indices are scanned downwards in doubling windows so that a vertex that
    fails immediately costs little.
    """
    phi = system.row_A
    hi = i
    while hi > 0:
        lo = max(0, hi - window)
        ok = _dual_ok(normals, phi[lo:hi])
        if not glb:
            ok &= phi[lo:hi] @ c - system.row_b[lo:hi] <= FEAS_TOL
        bad = np.flatnonzero(~ok)
        if bad.size:
            hi = lo + int(bad.max()) + 1
            break
        hi = lo
        window *= 2
    if not glb:
        # pairs that c violates must not become active inside [hi, i)
        pair_bad = np.flatnonzero(system.pair_A @ c - system.pair_b > FEAS_TOL)
        if pair_bad.size:
            hi = max(hi, int(activation[pair_bad].max()) + 1)
    return min(hi, i)


def _solve_all(system: ConstraintSystem, mode: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """p, coeffs and infeasible flags for every sorted index, walking i downwards."""
    n, L = system.row_A.shape
    phi = system.row_A
    solver = _Solver(system)
    p = np.full(n, np.nan)
    coeffs = np.full((n, L), np.nan)
    infeasible = np.zeros(n, dtype=bool)

    glb = mode == "glb"
    activation = system.pair_activation_index()
    P = system.pair_A.shape[0]

    anchor = None if glb else _anchor_point(system, solver)
    i = n - 1
    basis_ids: list[int] = []
    c_prev = None
    pairs_prev = system.pairs_active(n - 1) if not glb else P
    while i >= 0:
        n_pairs = P if glb else system.pairs_active(i)
        if anchor is not None and c_prev is not None:
            c = _cut_towards_anchor(system, anchor, c_prev, i, pairs_prev, n_pairs)
            if c is not None:
                p[i] = system.row_b[i]
                coeffs[i] = c
                c_prev, pairs_prev = c, n_pairs
                i -= 1
                continue
        start_row = 0 if glb else i
        res = solver.solve(phi[i], start_row, n_pairs, basis_ids + [P + i])
        if res is None:
            # the feasible set only shrinks as i decreases (and is fixed in glb mode)
            infeasible[: i + 1] = True
            break
        c, normals, basis_ids = res
        p[i] = phi[i] @ c
        coeffs[i] = c
        lo = i if normals is None else _extend_vertex(system, c, normals, i, glb, activation)
        if lo < i:
            p[lo:i] = phi[lo:i] @ c
            coeffs[lo:i] = c
        c_prev = c
        i = lo - 1
        pairs_prev = system.pairs_active(lo) if lo < n else P
    p = np.clip(p, 0.0, 1.0)
    return p, coeffs, infeasible


def p_constrained(
    sample: LabeledSample,
    family: NullFamily,
    variant: ConstraintVariant = PLAIN,
    mode: str = "seq",
    phi: np.ndarray | None = None,
    system: ConstraintSystem | None = None,
) -> PValueSet:
    """LP-constrained p-values in ``seq`` or ``glb`` mode.

    Infeasible programs fall back to the plain-variant value (primed
    variants) or to the unconstrained max p-value (plain variants); the
    affected indices are flagged.
    """
    if mode not in ("seq", "glb"):
        raise ValueError(f"mode must be 'seq' or 'glb', got {mode!r}")
    phi = phi_matrix(sample, family) if phi is None else phi
    if system is None:
        system = build_constraints(sample, family, variant, phi)
    p, coeffs, infeasible = _solve_all(system, mode)
    if infeasible.any():
        if variant.primed:
            base = p_constrained(sample, family, variant.plain(), mode, phi)
            p[infeasible] = base.p[infeasible]
            coeffs[infeasible] = base.coeffs[infeasible]
        else:
            k = phi[infeasible].argmax(axis=1)
            p[infeasible] = phi[infeasible].max(axis=1)
            coeffs[infeasible] = np.eye(phi.shape[1])[k]
    return PValueSet(mode, p, coeffs, infeasible)


def compute_pvalues(
    sample: LabeledSample,
    family: NullFamily,
    prior: Prior,
    methods=METHODS,
    variant: ConstraintVariant = PLAIN,
) -> dict[str, PValueSet]:
    """All requested p-value sets for one sample, sharing the CDF evaluations."""
    phi = phi_matrix(sample, family)
    out = {}
    system = None
    for m in methods:
        if m == "max":
            out[m] = p_max_all(sample, family, phi)
        elif m == "mix":
            out[m] = p_mix_all(sample, family, prior, phi)
        elif m in ("seq", "glb"):
            if system is None:
                system = build_constraints(sample, family, variant, phi)
            out[m] = p_constrained(sample, family, variant, m, phi, system)
        else:
            raise ValueError(f"unknown method {m!r}")
    return out
