"""Scalar and vectorised special functions used by the distribution code.

Normal CDF and the regularized incomplete gamma function are backed by the
standard library / ``scipy.special``; the Gamma upper-tail quantile and the
noncentral t CDF are computed here.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

_SQRT_HALF = math.sqrt(0.5)

# Gauss-Legendre nodes on [-1, 1], reused by every panel integration.
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def std_normal_cdf(x: float) -> float:
    """Standard normal CDF, accurate to ~1e-16 relative in both tails."""
    if x < 0:
        return 0.5 * math.erfc(-x * _SQRT_HALF)
    return 1.0 - 0.5 * math.erfc(x * _SQRT_HALF)


def std_normal_cdf_array(x) -> np.ndarray:
    return special.ndtr(np.asarray(x, dtype=float))


def std_normal_pdf_array(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def reg_lower_gamma(shape: float, x: float) -> float:
    """Regularized lower incomplete gamma P(shape, x)."""
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    return float(special.gammainc(shape, x))


def reg_upper_gamma(shape: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(shape, x) = 1 - P(shape, x)."""
    if not shape > 0:
        raise ValueError(f"shape must be positive, got {shape}")
    if x < 0:
        raise ValueError(f"x must be nonnegative, got {x}")
    return float(special.gammaincc(shape, x))


def _gamma_log_pdf(shape: float, x: float) -> float:
    return (shape - 1.0) * math.log(x) - x - math.lgamma(shape)


def gamma_upper_quantile(z: float, shape: float, scale: float) -> float:
    """Return x such that a Gamma(shape, scale) variable exceeds x with probability z.

    Newton iteration on the upper regularized gamma function, safeguarded by
    bisection inside a bracket that starts at [0, 50 * shape * scale] and is
    widened if the root lies beyond it.
    """
    if not 0.0 < z < 1.0:
        raise ValueError(f"z must lie in (0, 1), got {z}")
    if not (shape > 0 and scale > 0):
        raise ValueError("shape and scale must be positive")

    lo, hi = 0.0, 50.0 * shape
    while reg_upper_gamma(shape, hi) > z:
        lo, hi = hi, 2.0 * hi

    # Start from the mean, clipped into the bracket.
    x = min(max(shape, lo), hi)
    for _ in range(200):
        f = reg_upper_gamma(shape, x) - z
        if f == 0.0:
            break
        # Q is decreasing: f > 0 means the root is to the right.
        if f > 0:
            lo = x
        else:
            hi = x
        dens = math.exp(_gamma_log_pdf(shape, x)) if x > 0 else 0.0
        x_new = x + f / dens if dens > 0 else 0.5 * (lo + hi)
        if not lo < x_new < hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * max(1.0, x):
            x = x_new
            break
        x = x_new
    return x * scale


# --- noncentral t -------------------------------------------------------------
#
# T = (Z + delta) / S with S = sqrt(V / df), V ~ chi^2_df, so
#   P(T <= x) = E[Phi(x S - delta)],   f_T(x) = E[S phi(x S - delta)].


def _log_s_log_density(w: np.ndarray, df: float) -> np.ndarray:
    # density of W = log S where S = sqrt(V / df); smooth even when df < 1
    half = 0.5 * df
    return math.log(2.0) + half * math.log(half) - math.lgamma(half) + df * w - half * np.exp(2.0 * w)


def _w_range(df: float) -> tuple[float, float]:
    sd = math.sqrt(0.5 / df)
    hi = 0.5 * math.log(gamma_upper_quantile(1e-20, 0.5 * df, 2.0) / df)
    lo = -max(14.0 * sd, 46.0 / df)
    return lo, max(hi, 14.0 * sd)


def _panel_nodes(lo: float, hi: float, panels: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    weights = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return nodes, weights


def _chi_mixture(kernel, x: np.ndarray, df: float, tol: float = 1e-13) -> np.ndarray:
    """Integrate kernel(x, s) against the law of S, doubling panels until stable."""
    lo, hi = _w_range(df)
    prev = None
    panels = 4
    while True:
        w, wt = _panel_nodes(lo, hi, panels)
        wts = wt * np.exp(_log_s_log_density(w, df))
        cur = kernel(x[:, None], np.exp(w)[None, :]) @ wts
        if prev is not None and np.max(np.abs(cur - prev)) <= tol:
            return cur
        if panels >= 256:
            return cur
        prev = cur
        panels *= 2


def _check_df(df: float) -> None:
    if not df > 0:
        raise ValueError(f"df must be positive, got {df}")


def noncentral_t_cdf_array(x, df: float, delta: float) -> np.ndarray:
    """Vectorised noncentral t CDF via its chi-mixture representation."""
    _check_df(df)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = _chi_mixture(lambda xx, s: special.ndtr(xx * s - delta), x, df)
    return np.clip(out, 0.0, 1.0)


def noncentral_t_sf_array(x, df: float, delta: float) -> np.ndarray:
    """Upper tail P(T > x), computed directly to keep precision for large x."""
    _check_df(df)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = _chi_mixture(lambda xx, s: special.ndtr(delta - xx * s), x, df)
    return np.clip(out, 0.0, 1.0)


def noncentral_t_pdf_array(x, df: float, delta: float) -> np.ndarray:
    _check_df(df)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return _chi_mixture(lambda xx, s: s * std_normal_pdf_array(xx * s - delta), x, df)


def noncentral_t_cdf(x: float, df: float, delta: float) -> float:
    """Noncentral t CDF at a single point, by adaptive quadrature over S.

    Used where a single accurate value is wanted; the array version is the
    one the samplers and p-value code call.
    """
    _check_df(df)

    def integrand(w):
        return std_normal_cdf(x * math.exp(w) - delta) * math.exp(_log_s_log_density(w, df))

    lo, hi = _w_range(df)
    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200, points=[0.0])
    return min(max(val, 0.0), 1.0)
