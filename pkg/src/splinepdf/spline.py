"""Cubic interpolating splines in one dimension and tensor-product splines in 2-3.

A fitted spline stores local power-form coefficients per interval,

    s(x) = c[0, i] + c[1, i] t + c[2, i] t**2 + c[3, i] t**3,   t = x - knots[i],

so evaluation, differentiation and exact integration are all closed form.
The 1-D fit accepts values with trailing batch dimensions; the tensor-product
fit is built from that by applying the 1-D operator along one axis at a time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import NumericalFailure


@dataclass(frozen=True)
class Clamped:
    """Clamped boundary condition: prescribed first derivatives at both ends."""

    d_lo: float
    d_hi: float


BoundaryCondition = Union[str, Clamped]
BC_NAMES = ("natural", "not_a_knot", "clamped")


def _check_bc(bc) -> BoundaryCondition:
    if isinstance(bc, Clamped):
        return bc
    if isinstance(bc, (tuple, list)) and len(bc) == 3 and bc[0] == "clamped":
        return Clamped(float(bc[1]), float(bc[2]))
    if bc in ("natural", "not_a_knot"):
        return bc
    raise ValueError(f"unknown boundary condition {bc!r}; expected 'natural', "
                     "'not_a_knot' or Clamped(d_lo, d_hi)")


@dataclass(frozen=True, eq=False)
class GridSamples:
    """Nodes per axis and the sampled values on their tensor grid."""

    axes: tuple
    values: np.ndarray

    def __post_init__(self):
        shape = tuple(len(a) for a in self.axes)
        if np.shape(self.values) != shape:
            raise ValueError(f"values shape {np.shape(self.values)} does not "
                             f"match axis lengths {shape}")

    @property
    def dim(self) -> int:
        return len(self.axes)

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray],
                      axes: Sequence[np.ndarray]) -> "GridSamples":
        """Sample ``f`` (which takes points of shape (m, d)) on the tensor grid."""
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        vals = np.asarray(f(pts), dtype=float).reshape(mesh[0].shape)
        return cls(axes, vals)


def _validate_nodes(x: np.ndarray, min_count: int) -> None:
    if x.ndim != 1:
        raise ValueError("nodes must be a 1-D array")
    if len(x) < min_count:
        raise ValueError(f"need at least {min_count} nodes, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("nodes must be finite")
    if np.any(np.diff(x) <= 0):
        raise ValueError("nodes must be strictly increasing (no duplicates)")


def _slopes(x: np.ndarray, y: np.ndarray, bc: BoundaryCondition) -> np.ndarray:
    """Knot slopes of the interpolating cubic spline (tridiagonal solve)."""
    n = len(x)
    h = np.diff(x)
    shape = (-1,) + (1,) * (y.ndim - 1)
    delta = np.diff(y, axis=0) / h.reshape(shape)

    # banded storage: ab[0, j] = A[j-1, j], ab[1, j] = A[j, j], ab[2, j] = A[j+1, j]
    ab = np.zeros((3, n))
    rhs = np.empty_like(y)
    ab[0, 2:] = h[:-1]
    ab[1, 1:-1] = 2.0 * (h[:-1] + h[1:])
    ab[2, :-2] = h[1:]
    rhs[1:-1] = 3.0 * (h[1:].reshape(shape) * delta[:-1] + h[:-1].reshape(shape) * delta[1:])

    if isinstance(bc, Clamped):
        ab[1, 0] = ab[1, -1] = 1.0
        rhs[0] = bc.d_lo
        rhs[-1] = bc.d_hi
    elif bc == "natural":
        ab[1, 0], ab[0, 1] = 2.0, 1.0
        rhs[0] = 3.0 * delta[0]
        ab[2, -2], ab[1, -1] = 1.0, 2.0
        rhs[-1] = 3.0 * delta[-1]
    else:  # not-a-knot: third derivative continuous at x[1] and x[-2]
        d0 = x[2] - x[0]
        ab[1, 0], ab[0, 1] = h[1], d0
        rhs[0] = ((h[0] + 2.0 * d0) * h[1] * delta[0] + h[0] ** 2 * delta[1]) / d0
        d1 = x[-1] - x[-3]
        ab[2, -2], ab[1, -1] = d1, h[-2]
        rhs[-1] = (h[-1] ** 2 * delta[-2] + (2.0 * d1 + h[-1]) * h[-2] * delta[-1]) / d1

    flat = rhs.reshape(n, -1)
    try:
        m = solve_banded((1, 1), ab, flat, check_finite=True)
    except (LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"spline system is singular: {exc}") from exc
    if not np.all(np.isfinite(m)):
        raise NumericalFailure("spline system produced non-finite slopes")
    return m.reshape(y.shape)


def _hermite_coefficients(x, y, m):
    h = np.diff(x)
    shape = (-1,) + (1,) * (y.ndim - 1)
    h = h.reshape(shape)
    delta = np.diff(y, axis=0) / h
    c = np.empty((4, len(x) - 1) + y.shape[1:])
    c[0] = y[:-1]
    c[1] = m[:-1]
    c[2] = (3.0 * delta - 2.0 * m[:-1] - m[1:]) / h
    c[3] = (m[:-1] + m[1:] - 2.0 * delta) / h ** 2
    return c


def _locate(knots: np.ndarray, x: np.ndarray) -> np.ndarray:
    # ties go to the interval on the right, except at the last knot
    idx = np.searchsorted(knots, x, side="right") - 1
    return np.clip(idx, 0, len(knots) - 2)


class CubicSpline1D:
    """Piecewise-cubic C2 interpolant.

    Outside the knot range the boundary pieces are extended.
    """

    def __init__(self, knots: np.ndarray, coeffs: np.ndarray, bc: BoundaryCondition):
        self.knots = knots
        self.coeffs = coeffs
        self.bc = bc
        self.knots.flags.writeable = False
        self.coeffs.flags.writeable = False
        self._cum = None

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    def _local(self, x):
        x = np.asarray(x, dtype=float)
        i = _locate(self.knots, x)
        t = x - self.knots[i]
        c = self.coeffs[:, i]
        if c.ndim > t.ndim + 1:
            t = t.reshape(t.shape + (1,) * (c.ndim - t.ndim - 1))
        return i, t, c

    def __call__(self, x):
        _, t, c = self._local(x)
        out = ((c[3] * t + c[2]) * t + c[1]) * t + c[0]
        return out if out.ndim else float(out)

    def derivative(self, x, order: int = 1):
        """First or second derivative of the local cubic piece."""
        if order not in (1, 2):
            raise ValueError(f"derivative order must be 1 or 2, got {order!r}")
        _, t, c = self._local(x)
        if order == 1:
            out = (3.0 * c[3] * t + 2.0 * c[2]) * t + c[1]
        else:
            out = 6.0 * c[3] * t + 2.0 * c[2]
        return out if out.ndim else float(out)

    def _antiderivative(self, x):
        if self._cum is None:
            h = np.diff(self.knots).reshape((-1,) + (1,) * (self.coeffs.ndim - 2))
            c = self.coeffs
            piece = h * (c[0] + h * (c[1] / 2 + h * (c[2] / 3 + h * c[3] / 4)))
            cum = np.concatenate([np.zeros((1,) + piece.shape[1:]), np.cumsum(piece, axis=0)])
            self._cum = cum
        i, t, c = self._local(x)
        return self._cum[i] + t * (c[0] + t * (c[1] / 2 + t * (c[2] / 3 + t * c[3] / 4)))

    def integrate(self, a: float, b: float):
        """Exact integral of the piecewise cubic over ``[a, b]``."""
        if a > b:
            raise ValueError(f"integration bounds must satisfy a <= b, got [{a}, {b}]")
        tol = 1e-12 * max(1.0, abs(self.lo), abs(self.hi))
        if a < self.lo - tol or b > self.hi + tol:
            raise ValueError(f"[{a}, {b}] is outside the knot range [{self.lo}, {self.hi}]")
        out = self._antiderivative(b) - self._antiderivative(a)
        return out if np.ndim(out) else float(out)

    def piecewise_gauss(self, order: int = 4):
        """Per-interval Gauss-Legendre nodes and weights (exact for degree 2*order-1)."""
        t, w = np.polynomial.legendre.leggauss(order)
        a, b = self.knots[:-1], self.knots[1:]
        half = 0.5 * (b - a)
        x = (0.5 * (a + b))[:, None] + half[:, None] * t[None, :]
        return x.ravel(), (half[:, None] * w[None, :]).ravel()


def fit_cubic(x, y, bc: BoundaryCondition = "not_a_knot") -> CubicSpline1D:
    """Fit the interpolating cubic spline through ``(x, y)``.

    ``y`` may carry trailing batch dimensions (shape ``(n, ...)``).
    """
    bc = _check_bc(bc)
    x = np.array(x, dtype=float)
    y = np.array(y, dtype=float)
    _validate_nodes(x, 2 if isinstance(bc, Clamped) else 4)
    if y.shape[:1] != x.shape:
        raise ValueError(f"got {len(x)} nodes but values of shape {y.shape}")
    if not np.all(np.isfinite(y)):
        raise ValueError("values must be finite")
    m = _slopes(x, y, bc)
    return CubicSpline1D(x, _hermite_coefficients(x, y, m), bc)


def _powers(t: np.ndarray) -> np.ndarray:
    return np.stack([np.ones_like(t), t, t * t, t * t * t], axis=-1)


def _dpowers(t: np.ndarray) -> np.ndarray:
    return np.stack([np.zeros_like(t), np.ones_like(t), 2.0 * t, 3.0 * t * t], axis=-1)


_EINSUM = {2: "mab,ma,mb->m", 3: "mabc,ma,mb,mc->m"}


class TensorSpline:
    """Tensor-product cubic spline on a 2-D or 3-D rectilinear grid.

    ``coeffs`` has shape ``(n1-1, ..., nd-1, 4, ..., 4)``: a cell index per
    axis followed by the power of each local coordinate.
    """

    chunk = 1 << 16

    def __init__(self, axes, coeffs, bc):
        self.axes = tuple(axes)
        self.coeffs = coeffs
        self.bc = bc
        self.coeffs.flags.writeable = False

    @property
    def dim(self) -> int:
        return len(self.axes)

    def _cells(self, p):
        idx, t = [], []
        for k, knots in enumerate(self.axes):
            i = _locate(knots, p[:, k])
            idx.append(i)
            t.append(p[:, k] - knots[i])
        return tuple(idx), t

    def _points(self, pts):
        p = np.asarray(pts, dtype=float)
        single = p.ndim == 1
        p = np.atleast_2d(p)
        if p.shape[-1] != self.dim:
            raise ValueError(f"points must have {self.dim} coordinates, got shape {p.shape}")
        return p, single

    def __call__(self, pts):
        p, single = self._points(pts)
        out = np.empty(len(p))
        spec = _EINSUM[self.dim]
        for s in range(0, len(p), self.chunk):
            idx, t = self._cells(p[s:s + self.chunk])
            out[s:s + self.chunk] = np.einsum(spec, self.coeffs[idx], *map(_powers, t))
        return float(out[0]) if single else out

    def gradient(self, pts):
        p, single = self._points(pts)
        out = np.empty((len(p), self.dim))
        spec = _EINSUM[self.dim]
        for s in range(0, len(p), self.chunk):
            idx, t = self._cells(p[s:s + self.chunk])
            pw = [_powers(tk) for tk in t]
            dpw = [_dpowers(tk) for tk in t]
            c = self.coeffs[idx]
            for k in range(self.dim):
                factors = [dpw[j] if j == k else pw[j] for j in range(self.dim)]
                out[s:s + self.chunk, k] = np.einsum(spec, c, *factors)
        return out[0] if single else out


def fit_tensor(samples: GridSamples, bc: BoundaryCondition = "not_a_knot") -> TensorSpline:
    """Tensor-product spline by successive 1-D fits, last axis first."""
    bc = _check_bc(bc)
    if isinstance(bc, Clamped):
        raise ValueError("clamped boundary conditions are not supported for tensor splines")
    d = samples.dim
    if d not in (2, 3):
        raise ValueError(f"tensor splines support 2 or 3 dimensions, got {d}")
    for a in samples.axes:
        _validate_nodes(np.asarray(a, dtype=float), 4)
    arr = np.asarray(samples.values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("values must be finite")
    for ax in reversed(range(d)):
        c = fit_cubic(samples.axes[ax], np.moveaxis(arr, ax, 0), bc).coeffs
        c = np.moveaxis(c, 1, ax + 1)
        arr = np.moveaxis(c, 0, -1)
    # power axes were appended in reverse axis order
    arr = np.moveaxis(arr, list(range(d, 2 * d)), list(range(2 * d - 1, d - 1, -1)))
    return TensorSpline(tuple(np.asarray(a, dtype=float) for a in samples.axes),
                        np.ascontiguousarray(arr), bc)
