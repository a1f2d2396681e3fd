"""Integrals of (optionally semicircle-weighted) Gaussians over phi in (-1, 1).

Two tools live here:

* closed-form truncated-Gaussian mass and moments on (-1, 1), vectorised and
  evaluated in log space so that means far outside the interval do not
  underflow;
* adaptive composite Gauss-Legendre quadrature for the density
  ``sqrt(1 - phi^2) * N(phi | f, F)``, which has no closed form. The
  substitution phi = cos(theta) turns the square-root endpoint behaviour into
  the smooth factor sin(theta)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erf, log_ndtr

from .errors import QuadratureError

LOG_2PI = math.log(2.0 * math.pi)

# Window half-width in log units: integrand below exp(-WINDOW_DROP) of its max is ignored.
WINDOW_DROP = 50.0
PANEL_NODES = 32
MAX_NODES = 2**15
REL_TOL = 1e-10


@lru_cache(maxsize=None)
def _gl_reference(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def composite_nodes(lo: float, hi: float, panels: int, n: int = PANEL_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of ``panels`` equal Gauss-Legendre panels on [lo, hi]."""
    x, w = _gl_reference(n)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


# ---------------------------------------------------------------------------
# closed-form truncated Gaussian on (-1, 1)


def log_mass(f, F):
    """log P(-1 < Z < 1) for Z ~ N(f, F); vectorised, stable in both tails."""
    f = np.asarray(f, dtype=float)
    sd = np.sqrt(np.asarray(F, dtype=float))
    a = (-1.0 - f) / sd
    b = (1.0 - f) / sd
    return _log_ndtr_diff(a, b)


def _log_ndtr_diff(a, b):
    """log(Phi(b) - Phi(a)) for a < b."""
    a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
    out = np.empty(a.shape)
    upper = a > 0.0
    lower = b < 0.0
    mid = ~(upper | lower)
    with np.errstate(divide="ignore"):
        if np.any(upper):
            la, lb = log_ndtr(-a[upper]), log_ndtr(-b[upper])
            out[upper] = la + np.log1p(-np.exp(lb - la))
        if np.any(lower):
            la, lb = log_ndtr(a[lower]), log_ndtr(b[lower])
            out[lower] = lb + np.log1p(-np.exp(la - lb))
        if np.any(mid):
            s = 1.0 / math.sqrt(2.0)
            out[mid] = np.log(0.5 * (erf(b[mid] * s) - erf(a[mid] * s)))
    return out


# Above this variance the closed-form mean f + sd (ra - rb) cancels badly; the
# integrand is then smooth on (-1, 1) and a fixed Gauss-Legendre rule is exact
# to rounding, provided the log-linear tilt |f|/F stays moderate.
WIDE_VARIANCE = 1.0
WIDE_MAX_TILT = 20.0
WIDE_NODES = 64


def _wide_moments(f: np.ndarray, F: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x, w = _gl_reference(WIDE_NODES)
    m = np.clip(f, -1.0, 1.0)[:, None]
    g = w * np.exp(-0.5 * ((x - f[:, None]) ** 2 - (m - f[:, None]) ** 2) / F[:, None])
    z = g.sum(axis=1)
    return (g @ x) / z, (g @ (x * x)) / z


def truncnorm_moments(f, F):
    """First and second raw moments of N(f, F) truncated to (-1, 1)."""
    f = np.asarray(f, dtype=float)
    F = np.asarray(F, dtype=float)
    wide = (F > WIDE_VARIANCE) & (np.abs(f) <= WIDE_MAX_TILT * F)
    if np.any(wide):
        f, F = np.broadcast_arrays(f, F)
        m1 = np.empty(f.shape)
        m2 = np.empty(f.shape)
        m1[wide], m2[wide] = _wide_moments(f[wide], F[wide])
        narrow = ~wide
        if np.any(narrow):
            m1[narrow], m2[narrow] = truncnorm_moments(f[narrow], F[narrow])
        return m1, m2
    sd = np.sqrt(F)
    a = (-1.0 - f) / sd
    b = (1.0 - f) / sd
    lz = _log_ndtr_diff(a, b)
    half_log_2pi = 0.5 * LOG_2PI
    ra = np.exp(-0.5 * a * a - half_log_2pi - lz)
    rb = np.exp(-0.5 * b * b - half_log_2pi - lz)
    m1 = f + sd * (ra - rb)
    var = F * (1.0 + a * ra - b * rb - (ra - rb) ** 2)
    m1 = np.clip(m1, -1.0, 1.0)
    var = np.maximum(var, 0.0)
    return m1, var + m1 * m1


# ---------------------------------------------------------------------------
# adaptive quadrature


@dataclass(frozen=True)
class PhiIntegral:
    """log of the integral, plus the normalised first and second moments."""

    log_mass: float
    m1: float
    m2: float
    nodes: int


def _window(f: float, F: float) -> tuple[float, float]:
    if not math.isfinite(F):
        return -1.0, 1.0
    m = min(max(f, -1.0), 1.0)
    r = math.sqrt((m - f) ** 2 + 2.0 * WINDOW_DROP * F)
    return max(-1.0, f - r), min(1.0, f + r)


def phi_integral(f: float, F: float, semicircle: bool, rel_tol: float = REL_TOL, max_nodes: int = MAX_NODES) -> PhiIntegral:
    """Integrate ``[sqrt(1-phi^2)] * exp(-(phi-f)^2 / (2F))`` over (-1, 1).

    ``F = inf`` means a flat Gaussian factor. The returned log mass excludes the
    Gaussian normalising constant; callers add it when they need a density.
    Raises QuadratureError if ``rel_tol`` is not met by ``max_nodes`` nodes.
    """
    lo, hi = _window(f, F)
    m = min(max(f, -1.0), 1.0)
    flat = not math.isfinite(F)

    if semicircle:
        t_lo, t_hi = math.acos(hi), math.acos(lo)

        def evaluate(panels):
            th, w = composite_nodes(t_lo, t_hi, panels)
            phi = np.cos(th)
            s = np.sin(th)
            g = w * s * s
            if not flat:
                g = g * np.exp(-0.5 * ((phi - f) ** 2 - (m - f) ** 2) / F)
            return g, phi
    else:

        def evaluate(panels):
            phi, w = composite_nodes(lo, hi, panels)
            g = w if flat else w * np.exp(-0.5 * ((phi - f) ** 2 - (m - f) ** 2) / F)
            return g, phi

    previous = None
    panels = 2
    while panels * PANEL_NODES <= max_nodes:
        g, phi = evaluate(panels)
        mass = float(g.sum())
        m1 = float(g @ phi) / mass
        m2 = float(g @ (phi * phi)) / mass
        if previous is not None:
            pm, p1, p2 = previous
            if abs(mass - pm) <= rel_tol * mass and abs(m1 - p1) <= rel_tol and abs(m2 - p2) <= rel_tol:
                shift = 0.0 if flat else -0.5 * (m - f) ** 2 / F
                return PhiIntegral(shift + math.log(mass), m1, m2, panels * PANEL_NODES)
        previous = (mass, m1, m2)
        panels *= 2
    raise QuadratureError(f"phi quadrature did not converge (f={f!r}, F={F!r}, semicircle={semicircle})")
