"""Maximum-likelihood estimate of the null prior, treating every observation as a true null."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import LabeledSample, NullFamily


@dataclass
class MleResult:
    nu_hat: np.ndarray
    log_likelihood: float
    iterations: int
    converged: bool
    trace: list[float] = field(default_factory=list, repr=False)


def density_matrix(sample: LabeledSample, family: NullFamily) -> np.ndarray:
    """(n, L) matrix of component densities at the s-domain observations."""
    return family.pdf_matrix(sample.x)


def log_likelihood(c, sample: LabeledSample | None = None, family: NullFamily | None = None, *, dens=None) -> float:
    """sum_i log(c @ f(X_i)); raises if the mixture density is not positive everywhere."""
    dens = density_matrix(sample, family) if dens is None else dens
    mix = dens @ np.asarray(c, dtype=float)
    if np.any(mix <= 0):
        raise ValueError("mixture density is nonpositive at some observation")
    return float(np.sum(np.log(mix)))


def em_fit_prior(
    sample: LabeledSample,
    family: NullFamily,
    max_iter: int = 10000,
    tol: float = 1e-9,
    *,
    dens: np.ndarray | None = None,
) -> MleResult:
    """EM fixed-point iteration for the mixture weights over the probability simplex.

    c_k <- mean_i c_k f_k(X_i) / (c @ f(X_i)), started from uniform weights,
    until the largest coefficient change falls below ``tol``.
    """
    dens = density_matrix(sample, family) if dens is None else dens
    n, L = dens.shape
    c = np.full(L, 1.0 / L)
    mix = dens @ c
    if np.any(mix <= 0):
        raise ValueError("mixture density vanishes at an observation for the uniform start")
    trace = [float(np.sum(np.log(mix)))]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        c_new = c * (dens.T @ (1.0 / mix)) / n
        c_new /= c_new.sum()
        step = float(np.max(np.abs(c_new - c)))
        c = c_new
        mix = dens @ c
        trace.append(float(np.sum(np.log(mix))))
        if step < tol:
            converged = True
            break
    return MleResult(c, trace[-1], it, converged, trace)


def extended_mle(
    sample: LabeledSample,
    family: NullFamily,
    max_iter: int = 10000,
    tol: float = 1e-9,
    *,
    dens: np.ndarray | None = None,
) -> MleResult:
    """Likelihood ascent over {c : sum c = 1, c @ f(X_i) > 0 for all i}.

    Coefficients may go negative. Projected gradient with backtracking;
    positivity of the mixture density is only enforced at the sample points.
    """
    dens = density_matrix(sample, family) if dens is None else dens
    n, L = dens.shape
    c = np.full(L, 1.0 / L)
    mix = dens @ c
    ll = float(np.sum(np.log(mix)))
    trace = [ll]
    step = 1.0 / n
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        g = dens.T @ (1.0 / mix)
        g -= g.mean()  # stay on sum(c) = 1
        if not np.any(g):
            converged = True
            break
        t = step
        while True:
            c_try = c + t * g
            mix_try = dens @ c_try
            if np.all(mix_try > 0):
                ll_try = float(np.sum(np.log(mix_try)))
                if ll_try >= ll + 1e-4 * t * float(g @ g):
                    break
            t *= 0.5
            if t < 1e-300:
                break
        delta = float(np.max(np.abs(c_try - c)))
        if t < 1e-300 or delta < tol:
            converged = True
            break
        c, mix, ll = c_try, mix_try, ll_try
        trace.append(ll)
        step = 2.0 * t
    return MleResult(c, ll, it, converged, trace)


@dataclass
class RhoCheck:
    integrals: np.ndarray
    satisfied: bool


def _adaptive_simpson(
    f: Callable[[float], float], a: float, b: float, tol: float, panels: int = 64, min_depth: int = 2, max_depth: int = 50
) -> float:
    """Adaptive Simpson started from ``panels`` equal pieces so narrow features are not skipped."""
    edges = np.linspace(a, b, panels + 1)
    stack = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        flo, fmid, fhi = f(lo), f(0.5 * (lo + hi)), f(hi)
        stack.append((lo, hi, flo, fmid, fhi, (hi - lo) * (flo + 4 * fmid + fhi) / 6, tol / panels, 0))
    total = 0.0
    while stack:
        a, b, fa, fm, fb, whole, eps, depth = stack.pop()
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) * (fa + 4 * flm + fm) / 6
        right = (b - m) * (fm + 4 * frm + fb) / 6
        done = depth >= min_depth and abs(left + right - whole) <= 15 * eps
        if done or depth >= max_depth:
            total += left + right + (left + right - whole) / 15
        else:
            stack.append((a, m, fa, flm, fm, left, eps / 2, depth + 1))
            stack.append((m, b, fm, frm, fb, right, eps / 2, depth + 1))
    return total


def _quad_range(family: NullFamily, lo: float, hi: float, tail: float) -> tuple[float, float]:
    for _ in range(60):
        mass = family.cdf_matrix(np.array([lo, hi]))
        if np.all(mass[0] < tail) and np.all(1.0 - mass[1] < tail):
            return lo, hi
        lo, hi = lo * 1.5, hi * 1.5
    return lo, hi


def check_rho_condition(
    rho: Callable[[float], float],
    family: NullFamily,
    quad_range: tuple[float, float] = (-12.0, 12.0),
    tol: float = 1e-6,
) -> RhoCheck:
    """Integrate rho * f_k for every null density and test each integral against 1."""
    lo, hi = quad_range
    if family.region != "absolute":
        lo, hi = _quad_range(family, lo, hi, 1e-12)
    else:
        lo = 0.0

    integrals = []
    for k, comp in enumerate(family.components):

        def integrand(x, _k=k):
            r = float(rho(x))
            if r < 0:
                raise ValueError(f"rho is negative at x = {x}")
            return r * float(family.pdf_matrix(np.array([x]))[0, _k])

        integrals.append(_adaptive_simpson(integrand, lo, hi, 1e-11))
    arr = np.array(integrals)
    return RhoCheck(arr, bool(np.all(np.abs(arr - 1.0) <= tol)))
