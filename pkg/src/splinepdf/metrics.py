"""Distances between densities, moment estimators, circular statistics and power-law fits."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .density import GridDensity, HistogramDensity, InputDensity
from .errors import UndefinedStatistic
from .spline import CubicSpline1D


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


@dataclass(frozen=True)
class PowerLawFit:
    amplitude: float
    exponent: float
    r_squared: float

    def __call__(self, n):
        return self.amplitude * np.asarray(n, dtype=float) ** self.exponent


# ----------------------------------------------------------------------------
# distances

def _common_grid(p, q, grid):
    pieces = []
    if grid is not None:
        pieces.append(np.asarray(grid, dtype=float))
    else:
        grids = [d.ys for d in (p, q) if isinstance(d, GridDensity)]
        if len(grids) == 2 and not (grids[0].shape == grids[1].shape
                                    and np.array_equal(grids[0], grids[1])):
            raise ValueError("densities live on different grids; pass an explicit grid")
        pieces.extend(grids)
    for d in (p, q):
        if isinstance(d, HistogramDensity):
            pieces.append(d.edges)
    if not pieces:
        raise ValueError("an evaluation grid is required for callable densities")
    if grid is not None:
        lo, hi = pieces[0][0], pieces[0][-1]
        pieces = [pieces[0]] + [g[(g > lo) & (g < hi)] for g in pieces[1:]]
    ys = np.unique(np.concatenate(pieces))
    if ys.size < 2:
        raise ValueError("evaluation grid needs at least two points")
    return ys


def _sided(d, y, side):
    if isinstance(d, (HistogramDensity, GridDensity)):
        return d(y, side=side)
    return np.asarray(d(y), dtype=float)


def _cell_values(p, q, grid):
    """Values of both densities at the two ends of every grid cell.

    Step densities are read from inside the cell, so integrals are exact for
    histograms whose edges are grid points.
    """
    ys = _common_grid(p, q, grid)
    left = (_sided(p, ys[:-1], "right"), _sided(q, ys[:-1], "right"))
    right = (_sided(p, ys[1:], "left"), _sided(q, ys[1:], "left"))
    return ys, left, right


def lp_distance(p, q, grid=None, order=1) -> float:
    """``L^order`` distance (``order`` in 1, 2, inf) by trapezoid quadrature.

    ``p`` and ``q`` may be :class:`HistogramDensity`, :class:`GridDensity` or
    callables.  The quadrature grid is ``grid`` (clipped to its span) merged
    with any histogram edges; two grid densities on different grids need an
    explicit ``grid``.
    """
    if order not in (1, 2, np.inf, math.inf, "inf"):
        raise ValueError(f"order must be 1, 2 or inf, got {order!r}")
    ys, (pl, ql), (pr, qr) = _cell_values(p, q, grid)
    dl, dr = np.abs(pl - ql), np.abs(pr - qr)
    if order in (np.inf, "inf"):
        return float(max(dl.max(), dr.max()))
    h = np.diff(ys)
    return float(np.sum(0.5 * h * (dl ** order + dr ** order)) ** (1.0 / order))


def hellinger(p, q, grid=None) -> float:
    """``(1/sqrt 2) || sqrt p - sqrt q ||_2``."""
    ys, (pl, ql), (pr, qr) = _cell_values(p, q, grid)
    for v in (pl, ql, pr, qr):
        if np.any(v < 0):
            raise ValueError("densities must be non-negative")
    h = np.diff(ys)
    sq = (np.sqrt(pl) - np.sqrt(ql)) ** 2, (np.sqrt(pr) - np.sqrt(qr)) ** 2
    return float(math.sqrt(0.5 * np.sum(0.5 * h * (sq[0] + sq[1]))))


def kl_divergence(p, q, grid=None) -> float:
    """``int p log(p/q)`` by trapezoid quadrature, skipping points where p = 0.

    Returns ``inf`` with a :class:`RuntimeWarning` when q vanishes where p
    does not.
    """
    ys, (pl, ql), (pr, qr) = _cell_values(p, q, grid)
    h = np.diff(ys)

    def integrand(a, b):
        out = np.zeros_like(a)
        pos = a > 0
        bad = pos & (b <= 0)
        ok = pos & ~bad
        out[ok] = a[ok] * np.log(a[ok] / b[ok])
        out[bad] = np.inf
        return out

    total = float(np.sum(0.5 * h * (integrand(pl, ql) + integrand(pr, qr))))
    if math.isinf(total):
        warnings.warn("KL divergence is infinite: q vanishes where p has mass",
                      RuntimeWarning, stacklevel=2)
    return total


# ----------------------------------------------------------------------------
# moments

def moments_mc(samples) -> MomentSummary:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("moment estimates need at least two samples")
    return MomentSummary(float(x.mean()), float(x.var(ddof=1)))


def moments_spline(s: CubicSpline1D, c: InputDensity) -> MomentSummary:
    """Exact moments of a spline under a uniform input on its knot range."""
    if c.kind != "uniform_box" or c.dim != 1:
        raise ValueError("exact spline moments need a one-dimensional uniform input")
    lo, hi = c.lo[0], c.hi[0]
    if not (np.isclose(lo, s.lo) and np.isclose(hi, s.hi)):
        raise ValueError("input support must coincide with the spline's knot range")
    length = hi - lo
    mean = s.integrate(s.lo, s.hi) / length
    x, w = s.piecewise_gauss(4)
    second = float(np.dot(w, (s(x) - mean) ** 2)) / length
    return MomentSummary(float(mean), second)


def moments_quadrature(f: Callable, x, w) -> MomentSummary:
    """Moments from nodes and probability weights."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(f(x), dtype=float)
    mean = float(np.dot(w, v) / w.sum())
    return MomentSummary(mean, float(np.dot(w, (v - mean) ** 2) / w.sum()))


# ----------------------------------------------------------------------------
# circular statistics

CIRC_ZERO = 1e-12


def circular_moments(theta, weights=None):
    """Complex circular mean and circular standard deviation of angles.

    ``weights`` (e.g. probability quadrature weights) default to equal
    weights.  Returns ``(mean, std)`` with ``std = sqrt(-2 ln |mean|)``.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size == 0:
        raise ValueError("need at least one angle")
    w = np.full(theta.size, 1.0 / theta.size) if weights is None else np.asarray(weights, dtype=float)
    z = complex(np.dot(w, np.exp(1j * theta)) / w.sum())
    r = abs(z)
    if r < CIRC_ZERO:
        raise UndefinedStatistic(f"circular std is undefined for resultant length {r:.3e}")
    return z, math.sqrt(max(0.0, -2.0 * math.log(min(r, 1.0))))


def circular_moments_of(theta_fn: Callable, c: InputDensity, order: int = 200):
    """Circular moments of ``theta_fn(alpha)`` under a 1-D input by Gauss quadrature."""
    from .grids import composite_legendre

    x, w = composite_legendre(c.lo[0], c.hi[0], 1, order)
    return circular_moments(theta_fn(x), w * c.pdf(x))


# ----------------------------------------------------------------------------
# power-law fits

def fit_power_law(Ns, errors) -> PowerLawFit:
    """Least-squares line through ``(log N, log error)``."""
    n = np.asarray(Ns, dtype=float)
    e = np.asarray(errors, dtype=float)
    if n.shape != e.shape or n.size < 3:
        raise ValueError("power-law fit needs at least three (N, error) pairs")
    if np.any(n <= 0) or np.any(~np.isfinite(e)) or np.any(e <= 0):
        raise ValueError("power-law fit needs positive sample sizes and finite positive errors")
    x, y = np.log(n), np.log(e)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    with np.errstate(over="ignore"):
        amplitude = float(np.exp(icpt))
    return PowerLawFit(amplitude, float(slope), r2)


def observed_orders(Ns, errors, spacing=None) -> np.ndarray:
    """Pairwise orders ``log(e_i / e_{i+1}) / log(h_i / h_{i+1})`` under refinement.

    ``spacing`` maps N to a mesh width; the default ``1 / (N - 1)`` is the
    width of a uniform grid with N nodes.
    """
    n = np.asarray(Ns, dtype=float)
    e = np.asarray(errors, dtype=float)
    if n.shape != e.shape or n.size < 2 or np.any(e <= 0):
        raise ValueError("observed orders need at least two positive errors")
    h = 1.0 / (n - 1.0) if spacing is None else np.asarray([spacing(k) for k in n], dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
