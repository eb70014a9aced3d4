"""Density estimators and input distributions.

Random draws come from numpy's PCG64 generator.  Large i.i.d. draws are split
into fixed-size chunks whose streams are derived from ``(seed, chunk index)``
with :class:`numpy.random.SeedSequence`, so a draw is reproducible regardless
of how the chunks are scheduled.  ``sampling="sobol"`` replaces i.i.d. draws by
a scrambled Sobol sequence (seeded the same way) mapped through the inverse
CDF of the input law.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special
from scipy.stats import qmc

from .errors import NumericalFailure

CHUNK = 1 << 20
SAMPLING = ("iid", "sobol")
NORMAL_TRUNCATION = 6.0


def chunk_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


# ----------------------------------------------------------------------------
# input laws


@dataclass(frozen=True, eq=False)
class InputDensity:
    """Law of the random input on a bounded box.

    ``kind`` is ``"uniform_box"``, ``"transformed_normal"`` (a centred normal
    with standard deviation ``sigma``, truncated at ``NORMAL_TRUNCATION``
    standard deviations) or ``"beta"`` (Beta(r, s) rescaled to [-1, 1]).
    Only the uniform box may have more than one dimension.
    """

    kind: str
    lo: np.ndarray
    hi: np.ndarray
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    def _as_1d(self, x):
        if self.dim != 1:
            raise ValueError(f"{self.kind} input has {self.dim} dimensions; expected 1")
        return np.asarray(x, dtype=float)

    def pdf(self, x):
        """Density at ``x`` (shape (m,) in 1-D, (m, d) otherwise); zero off the box."""
        x = np.asarray(x, dtype=float)
        if self.dim > 1 or self.kind == "uniform_box":
            pts = x.reshape(-1, self.dim) if self.dim > 1 else x[..., None]
            inside = np.all((pts >= self.lo) & (pts <= self.hi), axis=-1)
            out = np.where(inside, 1.0 / self.volume, 0.0)
            return out.reshape(x.shape[:-1] if self.dim > 1 else x.shape)
        inside = (x >= self.lo[0]) & (x <= self.hi[0])
        if self.kind == "transformed_normal":
            s = self.params["sigma"]
            mass = 1.0 - 2.0 * special.ndtr(-NORMAL_TRUNCATION)
            val = np.exp(-0.5 * (x / s) ** 2) / (s * math.sqrt(2 * math.pi) * mass)
        else:
            r, s = self.params["r"], self.params["s"]
            u = np.clip(0.5 * (x + 1.0), 0.0, 1.0)
            with np.errstate(divide="ignore"):
                val = 0.5 * np.exp((r - 1) * np.log(u) + (s - 1) * np.log1p(-u) - special.betaln(r, s))
        return np.where(inside, val, 0.0)

    def cdf(self, x):
        x = self._as_1d(x)
        lo, hi = self.lo[0], self.hi[0]
        if self.kind == "uniform_box":
            return np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        if self.kind == "transformed_normal":
            z = np.clip(x / self.params["sigma"], -NORMAL_TRUNCATION, NORMAL_TRUNCATION)
            a = special.ndtr(-NORMAL_TRUNCATION)
            return (special.ndtr(z) - a) / (1.0 - 2.0 * a)
        u = np.clip(0.5 * (x + 1.0), 0.0, 1.0)
        return special.betainc(self.params["r"], self.params["s"], u)

    def ppf(self, u):
        """Map points of the unit cube to the box (inverse CDF per axis)."""
        u = np.asarray(u, dtype=float)
        if self.kind == "uniform_box":
            return self.lo + u * (self.hi - self.lo) if self.dim > 1 else self.lo[0] + u * (self.hi[0] - self.lo[0])
        if self.kind == "transformed_normal":
            a = special.ndtr(-NORMAL_TRUNCATION)
            z = special.ndtri(a + u * (1.0 - 2.0 * a))
            return np.clip(self.params["sigma"] * z, self.lo[0], self.hi[0])
        return 2.0 * special.betaincinv(self.params["r"], self.params["s"], u) - 1.0

    def sample(self, n: int, seed: int, sampling: str = "iid") -> np.ndarray:
        """Draw ``n`` points, shape ``(n,)`` in 1-D and ``(n, d)`` otherwise."""
        if sampling not in SAMPLING:
            raise ValueError(f"unknown sampling {sampling!r}; expected one of {SAMPLING}")
        if sampling == "sobol":
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", UserWarning)
                eng = qmc.Sobol(self.dim, scramble=True, seed=chunk_rng(seed, 0))
                u = eng.random(n)
        else:
            u = np.empty((n, self.dim))
            for i, s in enumerate(range(0, n, CHUNK)):
                m = min(CHUNK, n - s)
                u[s:s + m] = chunk_rng(seed, i).random((m, self.dim))
        return self.ppf(u[:, 0] if self.dim == 1 else u)


def uniform_box(lo, hi) -> InputDensity:
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or np.any(lo >= hi):
        raise ValueError(f"uniform box needs lo < hi per axis, got {lo}, {hi}")
    return InputDensity("uniform_box", lo, hi)


def transformed_normal(sigma: float) -> InputDensity:
    """Centred normal with standard deviation ``sigma`` on +-6 sigma."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    b = NORMAL_TRUNCATION * sigma
    return InputDensity("transformed_normal", np.array([-b]), np.array([b]), {"sigma": float(sigma)})


def beta(r: float, s: float) -> InputDensity:
    if not (r > 0 and s > 0):
        raise ValueError(f"beta parameters must be positive, got {r}, {s}")
    return InputDensity("beta", np.array([-1.0]), np.array([1.0]), {"r": float(r), "s": float(s)})


# ----------------------------------------------------------------------------
# density containers


@dataclass(frozen=True, eq=False)
class HistogramDensity:
    edges: np.ndarray
    heights: np.ndarray

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    def integral(self) -> float:
        return float(np.sum(self.heights * self.widths))

    def __call__(self, y, side: str = "right"):
        """Step-function value; ``side`` picks the bin at an edge (``"left"`` or ``"right"``)."""
        y = np.asarray(y, dtype=float)
        i = np.searchsorted(self.edges, y, side="right" if side == "right" else "left") - 1
        inside = (i >= 0) & (i < len(self.heights))
        out = np.where(inside, self.heights[np.clip(i, 0, len(self.heights) - 1)], 0.0)
        return out if out.ndim else float(out)


@dataclass(frozen=True, eq=False)
class GridDensity:
    """Density values on a grid; ``+inf`` entries mark singular points."""

    ys: np.ndarray
    pdf: np.ndarray

    @property
    def singular(self) -> np.ndarray:
        return ~np.isfinite(self.pdf)

    def integral(self) -> float:
        ok = ~self.singular
        return float(np.trapezoid(self.pdf[ok], self.ys[ok]))

    def __call__(self, y, side: str = "right"):
        ok = ~self.singular
        out = np.interp(y, self.ys[ok], self.pdf[ok], left=0.0, right=0.0)
        return out if np.ndim(out) else float(out)


# ----------------------------------------------------------------------------
# estimators


def histogram(samples, L: int, range: Optional[tuple] = None,
              edges: Optional[np.ndarray] = None) -> HistogramDensity:
    """Equal-width histogram estimator normalized to unit mass.

    Bins span ``range`` (default: sample min/max) unless explicit ``edges`` are
    given.  Samples outside the bins are dropped and the heights normalized
    over the retained samples.
    """
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size == 0:
        raise ValueError("histogram needs at least one sample")
    if edges is None:
        if int(L) != L or L < 1:
            raise ValueError(f"bin count must be a positive integer, got {L!r}")
        lo, hi = (samples.min(), samples.max()) if range is None else range
        if not hi > lo:
            # degenerate sample: a unit-width bin set centred on the value
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, int(L) + 1)
    else:
        edges = np.asarray(edges, dtype=float)
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be a strictly increasing array of length >= 2")
    counts, _ = np.histogram(samples, edges)
    total = counts.sum()
    if total == 0:
        raise ValueError("no samples fall inside the histogram range")
    return HistogramDensity(edges, counts / (total * np.diff(edges)))


def bin_constant(f_range: float, l2_of_deriv: float) -> float:
    """Constant ``K_f = (||f'||_2^2 (max f - min f) / 6)^(1/3)`` of the bin rule."""
    if not (f_range > 0 and l2_of_deriv > 0):
        raise ValueError("function range and derivative norm must be positive")
    return (l2_of_deriv ** 2 * f_range / 6.0) ** (1.0 / 3.0)


def optimal_bins(M: int, f_range: float, l2_of_deriv: float) -> int:
    """Bin count ``round(K_f * M^(1/3))``, at least one.

    The count grows like ``M^(1/3)`` so that the bin width shrinks like
    ``M^(-1/3)``, the width that minimizes the histogram's MISE.
    """
    if not M >= 1:
        raise ValueError(f"sample count must be >= 1, got {M}")
    return max(1, int(round(bin_constant(f_range, l2_of_deriv) * M ** (1.0 / 3.0))))


def silverman_bandwidth(samples) -> float:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise ValueError("automatic bandwidth needs at least two samples")
    std = x.std(ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    spread = min(std, (q75 - q25) / 1.34) if q75 > q25 else std
    if not spread > 0:
        raise ValueError("automatic bandwidth is undefined for constant samples")
    return 0.9 * spread * x.size ** (-0.2)


class KernelDensity:
    """Gaussian kernel density estimator."""

    def __init__(self, samples, bandwidth: Optional[float] = None):
        self.samples = np.asarray(samples, dtype=float).ravel()
        if bandwidth is None:
            bandwidth = silverman_bandwidth(self.samples)
        elif not bandwidth > 0:
            raise ValueError(f"bandwidth must be positive, got {bandwidth}")
        self.bandwidth = float(bandwidth)

    def __call__(self, y, side: str = "right"):
        y = np.asarray(y, dtype=float)
        flat = y.ravel()
        out = np.empty(flat.shape)
        step = max(1, (1 << 22) // max(1, self.samples.size))
        for s in range(0, flat.size, step):
            z = (flat[s:s + step, None] - self.samples[None, :]) / self.bandwidth
            out[s:s + step] = np.exp(-0.5 * z * z).sum(axis=1)
        out /= self.samples.size * self.bandwidth * math.sqrt(2 * math.pi)
        out = out.reshape(y.shape)
        return out if out.ndim else float(out)

    def bin_average(self, edges) -> HistogramDensity:
        """Exact average of the estimate over each bin."""
        edges = np.asarray(edges, dtype=float)
        cdf = np.empty(edges.shape)
        for s in range(0, edges.size, 256):
            cdf[s:s + 256] = special.ndtr(
                (edges[s:s + 256, None] - self.samples[None, :]) / self.bandwidth).mean(axis=1)
        return HistogramDensity(edges, np.diff(cdf) / np.diff(edges))


def kde(samples, bandwidth: Optional[float] = None) -> KernelDensity:
    return KernelDensity(samples, bandwidth)


def pushforward_samples(surrogate: Callable, input: InputDensity, M: int, seed: int,
                        sampling: str = "iid") -> np.ndarray:
    """Surrogate values at ``M`` draws from ``input``."""
    x = input.sample(M, seed, sampling)
    out = np.empty(M)
    for s in range(0, M, CHUNK):
        out[s:s + CHUNK] = surrogate(x[s:s + CHUNK])
    return out


def pushforward_mc(surrogate: Callable, input: InputDensity, M: int, L: int, seed: int,
                   sampling: str = "iid", range: Optional[tuple] = None) -> HistogramDensity:
    """Histogram of the surrogate over ``M`` seeded draws from ``input``."""
    if int(L) != L or L < 1 or M < L:
        raise ValueError(f"need M >= L >= 1, got M={M}, L={L}")
    return histogram(pushforward_samples(surrogate, input, M, seed, sampling), L, range)


# ----------------------------------------------------------------------------
# exact pushforward in one dimension

PROBES = 10_000
ROOT_TOL = 1e-12
SINGULAR_SLOPE = 1e-12


def _bisect(g: Callable, a, b, ga, target, tol=ROOT_TOL):
    """Vectorized bisection for ``g(x) = target`` on brackets ``[a, b]``."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    sa = np.sign(ga - target)
    width = float(np.max(b - a)) if a.size else 0.0
    steps = max(1, int(math.ceil(math.log2(max(width, tol) / tol))) + 1)
    for _ in range(steps):
        mid = 0.5 * (a + b)
        same = np.sign(g(mid) - target) == sa
        a = np.where(same, mid, a)
        b = np.where(same, b, mid)
    return 0.5 * (a + b)


class MonotonePieces:
    """Split ``[lo, hi]`` into maximal pieces on which ``f`` is monotone.

    Sign changes of ``f'`` are detected on an equispaced probe grid and
    refined by bisection.
    """

    def __init__(self, f: Callable, df: Callable, lo: float, hi: float, probes: int = PROBES):
        self.f, self.df = f, df
        a = np.linspace(lo, hi, probes + 1)
        d = np.asarray(df(a), dtype=float)
        if not np.all(np.isfinite(d)):
            raise NumericalFailure("derivative is not finite on the probe grid")
        s = np.sign(d)
        crit = list(a[1:-1][s[1:-1] == 0])
        nz = np.flatnonzero(s != 0)
        flips = nz[:-1][s[nz[:-1]] != s[nz[1:]]]
        nxt = nz[1:][s[nz[:-1]] != s[nz[1:]]]
        adjacent = nxt == flips + 1
        if adjacent.any():
            crit.extend(_bisect(df, a[flips[adjacent]], a[nxt[adjacent]],
                                d[flips[adjacent]], 0.0))
        cuts = np.unique(np.concatenate([[lo, hi], np.asarray(crit, dtype=float)]))
        self.cuts = cuts
        self.values = np.asarray(f(cuts), dtype=float)

    def __len__(self) -> int:
        return len(self.cuts) - 1

    def roots(self, ys):
        """Yield ``(k, mask, roots)``: roots in piece ``k`` for ``ys[mask]``."""
        ys = np.asarray(ys, dtype=float)
        for k in range(len(self)):
            a, b = self.cuts[k], self.cuts[k + 1]
            fa, fb = self.values[k], self.values[k + 1]
            lo, hi = min(fa, fb), max(fa, fb)
            mask = (ys >= lo) & (ys <= hi)
            if not mask.any():
                yield k, mask, np.empty(0)
                continue
            t = ys[mask]
            r = _bisect(self.f, np.full(t.shape, a), np.full(t.shape, b), fa, t)
            yield k, mask, r


def exact_pdf_1d(f: Callable, df: Callable, c: InputDensity, ys) -> GridDensity:
    """Pushforward density ``sum_j c(a_j) / |f'(a_j)|`` over roots of ``f(a) = y``.

    Grid points with a root where ``|f'| < 1e-12`` are singular and stored as
    ``+inf``.
    """
    ys = np.asarray(ys, dtype=float)
    if c.dim != 1:
        raise ValueError("exact pushforward is one-dimensional only")
    pieces = MonotonePieces(f, df, c.lo[0], c.hi[0])
    pdf = np.zeros(ys.shape)
    for _, mask, r in pieces.roots(ys):
        if r.size == 0:
            continue
        slope = np.abs(np.asarray(df(r), dtype=float))
        contrib = np.where(slope < SINGULAR_SLOPE, np.inf,
                           c.pdf(r) / np.maximum(slope, SINGULAR_SLOPE))
        pdf[mask] += contrib
    return GridDensity(ys, pdf)


def exact_cdf_1d(f: Callable, df: Callable, c: InputDensity, ys) -> np.ndarray:
    """``P(f(a) <= y)`` using the same monotone decomposition and ``c``'s CDF."""
    ys = np.asarray(ys, dtype=float)
    pieces = MonotonePieces(f, df, c.lo[0], c.hi[0])
    out = np.zeros(ys.shape)
    for k in range(len(pieces)):
        a, b = pieces.cuts[k], pieces.cuts[k + 1]
        fa, fb = pieces.values[k], pieces.values[k + 1]
        ca, cb = c.cdf(a), c.cdf(b)
        rising = fb >= fa
        full = ys >= max(fa, fb)
        out[full] += cb - ca
        mask = (ys > min(fa, fb)) & ~full
        if mask.any():
            r = _bisect(f, np.full(mask.sum(), a), np.full(mask.sum(), b), fa, ys[mask])
            out[mask] += (c.cdf(r) - ca) if rising else (cb - c.cdf(r))
    return out


def exact_histogram_1d(f: Callable, df: Callable, c: InputDensity, edges) -> HistogramDensity:
    """Exact bin averages of the pushforward density over ``edges``."""
    edges = np.asarray(edges, dtype=float)
    F = exact_cdf_1d(f, df, c, edges)
    return HistogramDensity(edges, np.diff(F) / np.diff(edges))
