"""Built-in test problems with closed-form quantities of interest.

Every problem exposes a smooth map ``f`` on a box (the function that surrogates
interpolate), its gradient, the input law, and an optional ``post`` transform
applied to ``f`` values to obtain the quantity of interest.  Reference
densities are exact (one-dimensional, ``post`` is the identity) or come from a
seeded Monte-Carlo oracle cached on disk.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import density
from .density import HistogramDensity, InputDensity
from .grids import composite_legendre
from .metrics import MomentSummary, moments_quadrature

MOD_PERIOD = 0.7
ORACLE_M = 10_000_000
ORACLE_L = 400
ORACLE_SEED = 20190601
CACHE_ENV = "SPLINEPDF_CACHE"


def _identity(y):
    return y


@dataclass(frozen=True, eq=False)
class Problem:
    name: str
    dim: int
    input: InputDensity
    f: Callable
    gradient: Callable
    reference: str  # "exact" or "oracle"
    post: Callable = _identity
    gpc_family: Optional[str] = "legendre"
    breakpoints: tuple = ()
    description: str = ""
    params: dict = field(default_factory=dict)
    # optional coordinate in which spline surrogates are fitted:
    # (map x -> t, its derivative, the smooth map as a function of t)
    chart: Optional[tuple] = None

    @property
    def lo(self) -> np.ndarray:
        return self.input.lo

    @property
    def hi(self) -> np.ndarray:
        return self.input.hi

    @property
    def smooth_qoi(self) -> bool:
        """True when the quantity of interest is the smooth map itself."""
        return self.post is _identity

    @property
    def unit_scale(self) -> float:
        """Derivative of :meth:`to_unit` (1-D)."""
        if self.gpc_family == "hermite":
            return 1.0 / self.input.params["sigma"]
        return 2.0 / (self.hi[0] - self.lo[0])

    def qoi(self, x):
        return self.post(self.f(x))

    def to_unit(self, x):
        """Affine map of the box to [-1, 1]^d (Legendre) or scaling to N(0, 1) (Hermite)."""
        if self.gpc_family == "hermite":
            return np.asarray(x) / self.input.params["sigma"]
        lo, hi = (self.lo[0], self.hi[0]) if self.dim == 1 else (self.lo, self.hi)
        return 2.0 * (np.asarray(x) - lo) / (hi - lo) - 1.0

    def from_unit(self, u):
        if self.gpc_family == "hermite":
            return np.asarray(u) * self.input.params["sigma"]
        lo, hi = (self.lo[0], self.hi[0]) if self.dim == 1 else (self.lo, self.hi)
        return lo + 0.5 * (np.asarray(u) + 1.0) * (hi - lo)

    def reference_moments(self, panels: Optional[int] = None) -> MomentSummary:
        """Moments of the quantity of interest by composite Gauss-Legendre quadrature."""
        if self.dim == 1:
            x, w = composite_legendre(self.lo[0], self.hi[0], panels or 2000, 8,
                                      self.breakpoints)
            return moments_quadrature(self.qoi, x, w * self.input.pdf(x))
        panels = panels or {2: 200, 3: 48}[self.dim]
        axes = [composite_legendre(self.lo[k], self.hi[k], panels, 5) for k in range(self.dim)]
        mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
        wmesh = np.meshgrid(*[a[1] for a in axes], indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        w = np.prod([m.ravel() for m in wmesh], axis=0)
        return moments_quadrature(self.qoi, pts, w)

    def exact_pdf(self, ys):
        if self.reference != "exact":
            raise ValueError(f"problem {self.name!r} has no exact reference density")
        return density.exact_pdf_1d(self.f, self.gradient, self.input, ys)

    def exact_histogram(self, edges) -> HistogramDensity:
        if self.reference != "exact":
            raise ValueError(f"problem {self.name!r} has no exact reference density")
        return density.exact_histogram_1d(self.f, self.gradient, self.input, edges)

    def value_range(self) -> tuple:
        """Range of the quantity of interest (exact problems only)."""
        pieces = density.MonotonePieces(self.f, self.gradient, self.lo[0], self.hi[0])
        return float(pieces.values.min()), float(pieces.values.max())


# ----------------------------------------------------------------------------
# problem definitions

def _sech2(z):
    return 1.0 / np.cosh(z) ** 2


def _tanh1d_f(a):
    return np.tanh(9.0 * a) + 0.5 * a


def _tanh1d_df(a):
    return 9.0 * _sech2(9.0 * a) + 0.5


def tanh1d() -> Problem:
    return Problem("tanh1d", 1, density.uniform_box(-1.0, 1.0), _tanh1d_f, _tanh1d_df,
                   "exact", description="tanh(9a) + a/2 on [-1, 1], uniform input")


def _mod(y):
    return np.mod(y, MOD_PERIOD)


def mod_jumps() -> tuple:
    """Points where tanh(9a) + a/2 crosses a multiple of the period."""
    pieces = density.MonotonePieces(_tanh1d_f, _tanh1d_df, -1.0, 1.0)
    lo, hi = pieces.values.min(), pieces.values.max()
    levels = MOD_PERIOD * np.arange(math.ceil(lo / MOD_PERIOD), math.floor(hi / MOD_PERIOD) + 1)
    roots = np.concatenate([r for _, _, r in pieces.roots(levels)])
    return tuple(np.sort(roots))


def tanh1d_mod() -> Problem:
    return Problem("tanh1d_mod", 1, density.uniform_box(-1.0, 1.0), _tanh1d_f, _tanh1d_df,
                   "oracle", post=_mod, breakpoints=mod_jumps(),
                   description="(tanh(9a) + a/2) mod 0.7; surrogates fit the smooth map")


def _tanh2d_f(p):
    a, b = p[..., 0], p[..., 1]
    return np.tanh(6.0 * a * b + 0.5 * a) + (a + b) / 3.0


def _tanh2d_grad(p):
    a, b = p[..., 0], p[..., 1]
    s = _sech2(6.0 * a * b + 0.5 * a)
    return np.stack([s * (6.0 * b + 0.5) + 1.0 / 3.0, s * 6.0 * a + 1.0 / 3.0], axis=-1)


def tanh2d() -> Problem:
    return Problem("tanh2d", 2, density.uniform_box([-1.0, -1.0], [1.0, 1.0]),
                   _tanh2d_f, _tanh2d_grad, "oracle",
                   description="tanh(6 a1 a2 + a1/2) + (a1 + a2)/3 on [-1, 1]^2")


_W3 = np.array([8.0, 5.0, 10.0])


def _tanh3d_f(p):
    return np.tanh(p @ _W3) + p.sum(axis=-1) / 3.0


def _tanh3d_grad(p):
    s = _sech2(p @ _W3)
    return s[..., None] * _W3 + 1.0 / 3.0


def tanh3d() -> Problem:
    return Problem("tanh3d", 3, density.uniform_box([-1.0] * 3, [1.0] * 3),
                   _tanh3d_f, _tanh3d_grad, "oracle",
                   description="tanh(8 a1 + 5 a2 + 10 a3) + (a1 + a2 + a3)/3 on [-1, 1]^3")


def shock_alpha(nu):
    """Input transform ``(-1 + sqrt(1 + 4 nu^2)) / (2 nu)``, 0 at nu = 0.

    Evaluated in the algebraically equal form ``2 nu / (1 + sqrt(1 + 4 nu^2))``,
    which has no cancellation near zero.
    """
    nu = np.asarray(nu, dtype=float)
    a = 2.0 * nu / (1.0 + np.sqrt(1.0 + 4.0 * nu * nu))
    assert np.all(np.abs(a) < 1.0)
    return a


def shock_alpha_deriv(nu):
    r = np.sqrt(1.0 + 4.0 * np.asarray(nu, dtype=float) ** 2)
    return 2.0 / (r * (1.0 + r))


def shock_location(alpha):
    """Static shock position solving ``alpha = -cos(X)``."""
    return np.arccos(-np.asarray(alpha, dtype=float))


def burgers_shock(sigma: float = 0.6) -> Problem:
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")

    def f(nu):
        return shock_location(shock_alpha(nu))

    def df(nu):
        a = shock_alpha(nu)
        return shock_alpha_deriv(nu) / np.sqrt(1.0 - a * a)

    return Problem("burgers", 1, density.transformed_normal(sigma), f, df, "exact",
                   gpc_family="hermite", params={"sigma": float(sigma)},
                   chart=(shock_alpha, shock_alpha_deriv, shock_location),
                   description="shock location arccos(-alpha(nu)), nu ~ N(0, sigma)")


def burgers_beta(r: float = 2.0, s: float = 2.0) -> Problem:
    def df(a):
        a = np.asarray(a, dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / np.sqrt(np.maximum(1.0 - a * a, 0.0))

    return Problem("burgers_beta", 1, density.beta(r, s), shock_location, df, "exact",
                   gpc_family=None, params={"r": float(r), "s": float(s)},
                   description="shock location arccos(-alpha), alpha ~ Beta(r, s) on [-1, 1]")


@dataclass(frozen=True, eq=False)
class FunctionPair:
    f: Callable
    df: Callable
    g: Callable
    dg: Callable
    input: InputDensity


def lemma3_pair(delta: float) -> FunctionPair:
    """``f(a) = a`` and its uniformly close but oscillating neighbour ``a + delta sin(a / (2 delta))``."""
    if not 0 < delta < 1:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    k = 1.0 / (2.0 * delta)
    return FunctionPair(
        f=lambda a: np.asarray(a, dtype=float),
        df=lambda a: np.ones_like(np.asarray(a, dtype=float)),
        g=lambda a: a + delta * np.sin(k * np.asarray(a, dtype=float)),
        dg=lambda a: 1.0 + 0.5 * np.cos(k * np.asarray(a, dtype=float)),
        input=density.uniform_box(0.0, 1.0),
    )


PROBLEMS = {
    "tanh1d": tanh1d,
    "tanh1d_mod": tanh1d_mod,
    "tanh2d": tanh2d,
    "tanh3d": tanh3d,
    "burgers": burgers_shock,
    "burgers_beta": burgers_beta,
}


def get_problem(name: str, **params) -> Problem:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; available: {sorted(PROBLEMS)}") from None
    return factory(**params)


# ----------------------------------------------------------------------------
# Monte-Carlo oracle

def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV, Path.home() / ".cache" / "splinepdf"))


def oracle_path(problem: Problem, M_ref, L_ref, seed, sampling: str = "sobol",
                root: Optional[Path] = None) -> Path:
    root = cache_dir() if root is None else Path(root)
    tag = "_".join(f"{k}{v:g}" for k, v in sorted(problem.params.items()))
    stem = f"{problem.name}{'_' + tag if tag else ''}_M{M_ref}_L{L_ref}_s{seed}_{sampling}"
    return root / f"{stem}.csv"


def write_oracle(path: Path, hist: HistogramDensity, header: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as fh:
        fh.write("# " + " ".join(f"{k}={v}" for k, v in header.items())
                 + f" right_edge={float(hist.edges[-1]):.17g}\n")
        fh.write("left_edge,height\n")
        for e, h in zip(hist.edges[:-1], hist.heights):
            fh.write(f"{e:.17g},{h:.17g}\n")
    tmp.replace(path)


def read_oracle(path: Path) -> tuple[HistogramDensity, dict]:
    with open(path) as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise ValueError(f"{path}: missing oracle header line")
        header = dict(item.split("=", 1) for item in first[1:].split())
        data = np.loadtxt(fh, delimiter=",", skiprows=1, ndmin=2)
    edges = np.append(data[:, 0], float(header.pop("right_edge")))
    return HistogramDensity(edges, data[:, 1]), header


def oracle_histogram(problem: Problem, M_ref: int = ORACLE_M, L_ref: int = ORACLE_L,
                     seed: int = ORACLE_SEED, sampling: str = "sobol",
                     root: Optional[Path] = None, use_cache: bool = True) -> HistogramDensity:
    """Histogram of the exact quantity of interest over ``M_ref`` seeded draws.

    Results are cached as CSV keyed by problem, ``M_ref``, ``L_ref``, seed and
    sampling scheme.
    """
    root = cache_dir() if root is None else Path(root)
    path = oracle_path(problem, M_ref, L_ref, seed, sampling, root)
    if use_cache and path.exists():
        return read_oracle(path)[0]
    y = density.pushforward_samples(problem.qoi, problem.input, M_ref, seed, sampling)
    rng = (0.0, MOD_PERIOD) if problem.post is _mod else None
    hist = density.histogram(y, L_ref, range=rng)
    if use_cache:
        write_oracle(path, hist, {"problem": problem.name, "M_ref": M_ref, "L_ref": L_ref,
                                  "seed": seed, "sampling": sampling})
    return hist
