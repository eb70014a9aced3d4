"""Polynomial-chaos collocation surrogates.

Polynomials are orthonormal under the probability weight of their family, so a
surrogate's coefficient of degree zero is its mean and the sum of the squares
of the remaining coefficients is its variance.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .grids import FAMILIES, QuadratureRule, gauss_rule, jacobi_offdiagonal


def ortho_basis(family: str, nmax: int, x, with_derivative: bool = False):
    """Values (and optionally derivatives) of orthonormal polynomials 0..nmax.

    Returns arrays of shape ``(nmax + 1,) + x.shape`` via the three-term
    recurrence ``b_{n+1} p_{n+1} = x p_n - b_n p_{n-1}``.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if nmax < 0:
        raise ValueError(f"degree must be non-negative, got {nmax}")
    x = np.asarray(x, dtype=float)
    b = np.concatenate([[0.0], jacobi_offdiagonal(family, nmax + 1)])
    p = np.empty((nmax + 1,) + x.shape)
    dp = np.empty_like(p) if with_derivative else None
    p[0] = 1.0
    if with_derivative:
        dp[0] = 0.0
    if nmax >= 1:
        p[1] = x / b[1]
        if with_derivative:
            dp[1] = 1.0 / b[1]
    for n in range(1, nmax):
        p[n + 1] = (x * p[n] - b[n] * p[n - 1]) / b[n + 1]
        if with_derivative:
            dp[n + 1] = (p[n] + x * dp[n] - b[n] * dp[n - 1]) / b[n + 1]
    return (p, dp) if with_derivative else p


def ortho_poly(family: str, n: int, x):
    """Degree-``n`` orthonormal polynomial of ``family`` evaluated at ``x``."""
    out = ortho_basis(family, n, x)[n]
    return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class GpcSurrogate:
    family: str
    coefficients: np.ndarray
    rule: QuadratureRule

    def __call__(self, x):
        p = ortho_basis(self.family, len(self.coefficients) - 1, x)
        out = np.tensordot(self.coefficients, p, axes=1)
        return out if out.ndim else float(out)

    def derivative(self, x):
        _, dp = ortho_basis(self.family, len(self.coefficients) - 1, x, with_derivative=True)
        out = np.tensordot(self.coefficients, dp, axes=1)
        return out if out.ndim else float(out)

    @property
    def mean(self) -> float:
        return float(self.coefficients[0])

    @property
    def variance(self) -> float:
        return float(np.sum(self.coefficients[1:] ** 2))


def gpc_fit(values, rule: QuadratureRule) -> GpcSurrogate:
    """Collocation coefficients ``sum_j f(x_j) p_n(x_j) w_j`` for n < len(rule)."""
    values = np.asarray(values, dtype=float)
    if values.shape != (len(rule),):
        raise ValueError(f"expected {len(rule)} values at the rule nodes, got shape {values.shape}")
    p = ortho_basis(rule.family, len(rule) - 1, rule.nodes)
    return GpcSurrogate(rule.family, p @ (values * rule.weights), rule)


def gpc_mean(g: GpcSurrogate) -> float:
    return g.mean


class TensorGpc:
    """Tensor-product Legendre collocation on ``[-1, 1]^d``.

    Uses an ``n``-point Gauss rule per axis and the full tensor basis of
    degrees ``< n`` per axis.
    """

    chunk = 1 << 15

    def __init__(self, coefficients: np.ndarray, family: str = "legendre"):
        self.coefficients = coefficients
        self.family = family

    @property
    def dim(self) -> int:
        return self.coefficients.ndim

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        n = self.coefficients.shape[0]
        out = np.empty(len(pts))
        letters = "abc"[: self.dim]
        spec = letters + "," + ",".join(f"{c}m" for c in letters) + "->m"
        for s in range(0, len(pts), self.chunk):
            chunk = pts[s:s + self.chunk]
            bases = [ortho_basis(self.family, n - 1, chunk[:, k]) for k in range(self.dim)]
            out[s:s + self.chunk] = np.einsum(spec, self.coefficients, *bases)
        return out

    @property
    def mean(self) -> float:
        return float(self.coefficients.flat[0])

    @property
    def variance(self) -> float:
        return float(np.sum(self.coefficients ** 2) - self.coefficients.flat[0] ** 2)


def tensor_gpc_fit(f, dim: int, n: int, family: str = "legendre") -> TensorGpc:
    """Fit ``f`` (taking points of shape (m, dim)) by tensor Gauss collocation."""
    if dim < 1:
        raise ValueError("dimension must be positive")
    rule = gauss_rule(family, n)
    pts = np.array(list(itertools.product(rule.nodes, repeat=dim)))
    vals = np.asarray(f(pts), dtype=float).reshape((n,) * dim)
    w = rule.weights
    p = ortho_basis(family, n - 1, rule.nodes)  # (degree, node)
    coef = vals
    for _ in range(dim):
        # contract the leading node axis; the new degree axis goes last
        coef = np.tensordot(p * w[None, :], coef, axes=([1], [0]))
        coef = np.moveaxis(coef, 0, -1)
    return TensorGpc(coef, family)
