"""Sampling grids and Gauss quadrature rules.

Quadrature rules are normalized as probability rules: the weights sum to one,
so ``rule.expect(g)`` approximates an expectation under the uniform law on
[-1, 1] (``legendre``) or the standard normal law (``hermite``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import NumericalFailure

Family = Literal["legendre", "hermite"]
FAMILIES = ("legendre", "hermite")


@dataclass(frozen=True)
class UniformGrid:
    lo: float
    hi: float
    count: int

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.count - 1)

    @property
    def nodes(self) -> np.ndarray:
        j = np.arange(self.count)
        x = self.lo + j * self.spacing
        x[-1] = self.hi
        return x


def uniform_grid(lo: float, hi: float, n: int) -> UniformGrid:
    """Equispaced grid with ``n`` nodes including both endpoints."""
    if int(n) != n or n < 2:
        raise ValueError(f"uniform grid needs n >= 2 nodes, got {n!r}")
    if not lo < hi:
        raise ValueError(f"uniform grid needs lo < hi, got [{lo}, {hi}]")
    return UniformGrid(float(lo), float(hi), int(n))


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    family: Family

    def __len__(self) -> int:
        return len(self.nodes)

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, g(self.nodes)))


def jacobi_offdiagonal(family: Family, n: int) -> np.ndarray:
    """Off-diagonal of the Jacobi matrix for the orthonormal family.

    Both families have zero diagonal.  Entry ``k-1`` is the coefficient
    ``b_k`` in ``x p_{k-1} = b_k p_k + b_{k-1} p_{k-2}``.
    """
    k = np.arange(1, n, dtype=float)
    if family == "legendre":
        return k / np.sqrt(4.0 * k * k - 1.0)
    if family == "hermite":
        return np.sqrt(k)
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def gauss_rule(family: Family, n: int) -> QuadratureRule:
    """Gauss rule of ``n`` points, built by Golub-Welsch.

    The nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix;
    the weight of each node is the squared first component of its normalized
    eigenvector (the weight measure has unit mass).
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if int(n) != n or n < 1:
        raise ValueError(f"gauss rule needs n >= 1, got {n!r}")
    n = int(n)
    if n == 1:
        return QuadratureRule(np.zeros(1), np.ones(1), family)
    off = jacobi_offdiagonal(family, n)
    try:
        x, v = eigh_tridiagonal(np.zeros(n), off)
    except LinAlgError as exc:
        raise NumericalFailure(
            f"tridiagonal eigen-solve failed for {family} rule of order {n}: {exc}"
        ) from exc
    w = v[0, :] ** 2
    if not np.all(np.isfinite(x)) or not np.all(w > 0):
        raise NumericalFailure(
            f"{family} rule of order {n} produced non-finite nodes or "
            f"non-positive weights (min weight {w.min():.3e})"
        )
    # the weight distribution is symmetric; enforce it exactly
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    w = w / w.sum()
    return QuadratureRule(x, w, family)


def composite_legendre(lo: float, hi: float, panels: int, order: int = 8,
                       breakpoints=()) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on ``[lo, hi]``.

    Weights integrate against Lebesgue measure.  ``breakpoints`` inside the
    interval are added as panel boundaries (for integrands with jumps).
    """
    cuts = np.linspace(lo, hi, panels + 1)
    extra = [b for b in breakpoints if lo < b < hi]
    if extra:
        cuts = np.unique(np.concatenate([cuts, extra]))
    rule = gauss_rule("legendre", order)
    half = 0.5 * np.diff(cuts)
    mid = 0.5 * (cuts[1:] + cuts[:-1])
    x = (mid[:, None] + half[:, None] * rule.nodes[None, :]).ravel()
    w = (2.0 * half[:, None] * rule.weights[None, :]).ravel()
    return x, w
