"""Convergence studies: problem x method x N-sweep -> error table and power-law fits.

For each N the study samples the problem on a design grid, fits a surrogate,
pushes the input law forward through it, and compares the result with the
problem's reference density and moments.

Densities are compared as histograms on a shared set of equal-width bins:

* exact-reference problems bin the exact density (exact bin averages from the
  pushforward CDF) on ``L`` bins over the exact range of the quantity of
  interest;
* oracle problems use the oracle's bins.

Bins of the same width are appended on either side when the approximate
density has mass outside that range; the reference is zero there.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import density, metrics
from .density import HistogramDensity
from .errors import ConfigError
from .gpc import gpc_fit, tensor_gpc_fit
from .grids import gauss_rule, uniform_grid
from .problems import ORACLE_L, ORACLE_M, ORACLE_SEED, PROBLEMS, Problem, get_problem, oracle_histogram
from .spline import GridSamples, fit_cubic, fit_tensor

METHODS = ("spline", "gpc", "kde", "mc")
DENSITY_METRICS = ("hellinger", "kl", "l1", "l2")
MOMENT_METRICS = ("circ", "mean", "std")
METRICS = DENSITY_METRICS + MOMENT_METRICS
WORKERS_ENV = "SPLINEPDF_WORKERS"
DEFAULT_M = 2_000_000


@dataclass
class StudyConfig:
    problem: str
    method: str
    N: list
    M: int = DEFAULT_M
    L: Union[int, str] = "auto"
    metrics: list = field(default_factory=lambda: ["l1"])
    seed: int = 0
    output: Optional[str] = None
    problem_params: dict = field(default_factory=dict)
    bc: str = "not_a_knot"
    sampling: str = "sobol"
    repeats: int = 1
    M_ref: int = ORACLE_M
    L_ref: int = ORACLE_L
    oracle_seed: int = ORACLE_SEED
    cache_dir: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        if not isinstance(data, dict):
            raise ConfigError("study configuration must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        missing = sorted(k for k in ("problem", "method", "N") if k not in data)
        if missing:
            raise ConfigError(f"missing configuration keys: {missing}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "StudyConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: cannot read configuration: {exc}") from exc
        return cls.from_dict(data)

    def make_problem(self) -> Problem:
        return get_problem(self.problem, **self.problem_params)

    def validate(self) -> None:
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(self.problem in PROBLEMS, f"unknown problem {self.problem!r}; available: {sorted(PROBLEMS)}")
        need(self.method in METHODS, f"unknown method {self.method!r}; expected one of {METHODS}")
        need(isinstance(self.N, list) and len(self.N) > 0, "N must be a non-empty list")
        need(all(isinstance(n, int) and not isinstance(n, bool) and n > 0 for n in self.N),
             "N entries must be positive integers")
        need(all(a < b for a, b in zip(self.N, self.N[1:])), "N must be strictly increasing")
        need(isinstance(self.M, int) and self.M >= 10 * max(self.N),
             f"M must be an integer >= 10 * max(N) = {10 * max(self.N)}")
        need(self.L == "auto" or (isinstance(self.L, int) and 1 <= self.L <= self.M),
             "L must be 'auto' or an integer in [1, M]")
        need(isinstance(self.metrics, list) and len(self.metrics) > 0
             and all(m in METRICS for m in self.metrics) and len(set(self.metrics)) == len(self.metrics),
             f"metrics must be a non-empty list of distinct names from {METRICS}")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2 ** 64, "seed must be an unsigned 64-bit integer")
        need(self.sampling in density.SAMPLING, f"sampling must be one of {density.SAMPLING}")
        need(self.bc in ("natural", "not_a_knot"), "bc must be 'natural' or 'not_a_knot'")
        need(isinstance(self.repeats, int) and self.repeats >= 1, "repeats must be a positive integer")
        need(isinstance(self.M_ref, int) and self.M_ref >= self.L_ref >= 1, "need M_ref >= L_ref >= 1")
        need(isinstance(self.problem_params, dict), "problem_params must be an object")
        try:
            problem = self.make_problem()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad problem parameters for {self.problem!r}: {exc}") from exc

        d = problem.dim
        if self.method in ("spline", "gpc") and d > 1:
            for n in self.N:
                k = round(n ** (1.0 / d))
                need(k ** d == n, f"N={n} is not a perfect {d}-th power; {self.method} "
                                  f"needs a tensor grid for the {d}-D problem {self.problem!r}")
        if self.method == "spline":
            per_axis = min(round(n ** (1.0 / d)) for n in self.N)
            need(per_axis >= 4, "spline fits need at least 4 nodes per axis")
        if self.method == "gpc":
            need(problem.gpc_family is not None,
                 f"gpc has no orthogonal family for the input of {self.problem!r}")
        if self.method in ("kde", "mc"):
            need(min(self.N) >= 2, f"{self.method} needs at least 2 samples")
        if self.method in ("spline", "gpc") and self.repeats != 1:
            raise ConfigError("repeats only applies to the sampling methods kde and mc")


@dataclass
class ConvergenceReport:
    rows: list  # (N, metric, value)
    fits: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted((int(n), str(m), float(v)) for n, m, v in self.rows)
        if not self.fits:
            self.fits = fit_report(self.rows)

    def values(self, metric: str) -> tuple:
        pairs = [(n, v) for n, m, v in self.rows if m == metric]
        return tuple(p[0] for p in pairs), tuple(p[1] for p in pairs)


def fit_report(rows) -> dict:
    """Power-law fit per metric with at least three finite positive values."""
    fits = {}
    for name in sorted({m for _, m, _ in rows}):
        ns = [n for n, m, v in rows if m == name]
        vs = [v for n, m, v in rows if m == name]
        if len(ns) >= 3 and all(math.isfinite(v) and v > 0 for v in vs):
            fits[name] = metrics.fit_power_law(ns, vs)
    return fits


# ----------------------------------------------------------------------------
# surrogates and references

def per_axis(N: int, dim: int) -> int:
    return int(round(N ** (1.0 / dim))) if dim > 1 else N


@dataclass
class Fitted:
    """A fitted surrogate in problem coordinates."""

    evaluate: object
    derivative: Optional[object]  # 1-D only
    moments: Optional[metrics.MomentSummary]


def build_surrogate(problem: Problem, method: str, N: int, bc: str = "not_a_knot") -> Fitted:
    """Fit a surrogate of the problem's smooth map from N samples."""
    d = problem.dim
    smooth = problem.smooth_qoi
    if method == "spline":
        if d == 1 and problem.chart is not None:
            to_t, dt, f_t = problem.chart
            t = uniform_grid(float(to_t(problem.lo[0])), float(to_t(problem.hi[0])), N).nodes
            s = fit_cubic(t, f_t(t), bc)
            return Fitted(lambda x: s(to_t(x)), lambda x: s.derivative(to_t(x)) * dt(x), None)
        if d == 1:
            x = uniform_grid(problem.lo[0], problem.hi[0], N).nodes
            s = fit_cubic(x, problem.f(x), bc)
            mom = (metrics.moments_spline(s, problem.input)
                   if smooth and problem.input.kind == "uniform_box" else None)
            return Fitted(s, s.derivative, mom)
        n = per_axis(N, d)
        axes = [uniform_grid(problem.lo[k], problem.hi[k], n).nodes for k in range(d)]
        return Fitted(fit_tensor(GridSamples.from_function(problem.f, axes), bc), None, None)
    if method == "gpc":
        if problem.gpc_family is None:
            raise ConfigError(f"no gpc family for problem {problem.name!r}")
        if d == 1:
            rule = gauss_rule(problem.gpc_family, N)
            g = gpc_fit(problem.f(problem.from_unit(rule.nodes)), rule)
            scale = problem.unit_scale
            deriv = lambda x: g.derivative(problem.to_unit(x)) * scale  # noqa: E731
        else:
            n = int(math.ceil(N ** (1.0 / d) - 1e-9))
            g = tensor_gpc_fit(lambda u: problem.f(problem.from_unit(u)), d, n, problem.gpc_family)
            deriv = None
        mom = metrics.MomentSummary(g.mean, g.variance) if smooth else None
        return Fitted(lambda x: g(problem.to_unit(x)), deriv, mom)
    raise ValueError(f"method {method!r} has no surrogate")


def derivative_norm(problem: Problem, deriv, n: int = 4096) -> float:
    """``||f'||_2`` under the input law (1-D) by composite Gauss quadrature."""
    from .grids import composite_legendre

    x, w = composite_legendre(problem.lo[0], problem.hi[0], n // 8, 8)
    w = w * problem.input.pdf(x)
    return float(math.sqrt(np.dot(w, np.asarray(deriv(x)) ** 2) / w.sum()))


def extend_edges(edges: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Append equal-width bins so that ``[lo, hi]`` is covered."""
    w = edges[1] - edges[0]
    left = int(math.ceil((edges[0] - lo) / w - 1e-12)) if lo < edges[0] else 0
    right = int(math.ceil((hi - edges[-1]) / w - 1e-12)) if hi > edges[-1] else 0
    if not (left or right):
        return edges
    out = np.concatenate([edges[0] - w * np.arange(left, 0, -1), edges,
                          edges[-1] + w * np.arange(1, right + 1)])
    return out


def pad_reference(ref: HistogramDensity, edges: np.ndarray) -> HistogramDensity:
    """Reference heights on ``edges`` (which extend ``ref.edges``), zero outside."""
    start = int(np.argmin(np.abs(edges - ref.edges[0])))
    heights = np.zeros(len(edges) - 1)
    heights[start:start + len(ref.heights)] = ref.heights
    return HistogramDensity(edges, heights)


def histogram_on(y: np.ndarray, edges: np.ndarray) -> HistogramDensity:
    """Histogram of all of ``y`` with ``edges`` extended to cover the sample."""
    y = np.asarray(y, dtype=float)
    ext = extend_edges(edges, float(y.min()), float(y.max()))
    counts, _ = np.histogram(y, ext)
    return HistogramDensity(ext, counts / (y.size * np.diff(ext)))


def density_errors(approx: HistogramDensity, ref: HistogramDensity, wanted) -> dict:
    out = {}
    ref = pad_reference(ref, approx.edges) if len(ref.edges) != len(approx.edges) else ref
    if "l1" in wanted:
        out["l1"] = metrics.lp_distance(approx, ref, order=1)
    if "l2" in wanted:
        out["l2"] = metrics.lp_distance(approx, ref, order=2)
    if "hellinger" in wanted:
        out["hellinger"] = metrics.hellinger(approx, ref)
    if "kl" in wanted:
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            out["kl"] = metrics.kl_divergence(ref, approx)
    return out


@dataclass
class Reference:
    """Reference data shared by every N of a study."""

    hist: Optional[HistogramDensity]  # oracle histogram (None for exact problems)
    moments: Optional[metrics.MomentSummary]
    circ_std: Optional[float]
    y_range: Optional[tuple]


def build_reference(cfg: StudyConfig, problem: Problem) -> Reference:
    wanted = set(cfg.metrics)
    hist = y_range = mom = circ = None
    if wanted & set(DENSITY_METRICS):
        if problem.reference == "exact":
            y_range = problem.value_range()
        else:
            hist = oracle_histogram(problem, cfg.M_ref, cfg.L_ref, cfg.oracle_seed,
                                    root=cfg.cache_dir)
    if wanted & {"mean", "std", "circ"}:
        x, w = reference_quadrature(problem)
        if wanted & {"mean", "std"}:
            mom = metrics.moments_quadrature(problem.qoi, x, w)
        if "circ" in wanted:
            circ = metrics.circular_moments(problem.qoi(x), w)[1]
    return Reference(hist, mom, circ, y_range)


def reference_quadrature(problem: Problem):
    from .grids import composite_legendre

    if problem.dim == 1:
        x, w = composite_legendre(problem.lo[0], problem.hi[0], 2000, 8, problem.breakpoints)
        return x, w * problem.input.pdf(x)
    panels = {2: 200, 3: 30}[problem.dim]
    axes = [composite_legendre(problem.lo[k], problem.hi[k], panels, 5) for k in range(problem.dim)]
    mesh = np.meshgrid(*[a[0] for a in axes], indexing="ij")
    wmesh = np.meshgrid(*[a[1] for a in axes], indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    w = np.prod([m.ravel() for m in wmesh], axis=0) / problem.input.volume
    return pts, w


def _reference_bins(cfg: StudyConfig, problem: Problem, ref: Reference, l2_deriv) -> HistogramDensity:
    if ref.hist is not None:
        return ref.hist
    lo, hi = ref.y_range
    L = cfg.L if cfg.L != "auto" else density.optimal_bins(cfg.M, hi - lo, l2_deriv)
    return problem.exact_histogram(np.linspace(lo, hi, L + 1))


# ----------------------------------------------------------------------------
# one point of the sweep

def _moment_errors(cfg, ref: Reference, est: Optional[metrics.MomentSummary], y=None) -> dict:
    out = {}
    if est is None and y is not None and {"mean", "std"} & set(cfg.metrics):
        est = metrics.moments_mc(y)
    if "mean" in cfg.metrics:
        out["mean"] = abs(est.mean - ref.moments.mean)
    if "std" in cfg.metrics:
        out["std"] = abs(est.std - ref.moments.std)
    if "circ" in cfg.metrics:
        out["circ"] = abs(metrics.circular_moments(y)[1] - ref.circ_std)
    return out


def run_point(cfg: StudyConfig, problem: Problem, ref: Reference, N: int) -> dict:
    """Metric values for one sample size."""
    wanted = set(cfg.metrics)
    out = {}
    if cfg.method in ("spline", "gpc"):
        fitted = build_surrogate(problem, cfg.method, N, cfg.bc)
        y = problem.post(density.pushforward_samples(fitted.evaluate, problem.input, cfg.M,
                                                     cfg.seed, cfg.sampling))
        if wanted & set(DENSITY_METRICS):
            l2d = None
            if ref.hist is None and cfg.L == "auto":
                l2d = derivative_norm(problem, fitted.derivative)
            bins = _reference_bins(cfg, problem, ref, l2d)
            out.update(density_errors(histogram_on(y, bins.edges), bins, wanted))
        if wanted & set(MOMENT_METRICS):
            out.update(_moment_errors(cfg, ref, fitted.moments, y))
        return out

    # sampling baselines: N model evaluations at i.i.d. inputs
    per_rep = []
    for r in range(cfg.repeats):
        seed = int(np.random.SeedSequence([cfg.seed, r]).generate_state(1, np.uint64)[0])
        y = problem.qoi(problem.input.sample(N, seed, "iid"))
        vals = {}
        if wanted & set(DENSITY_METRICS):
            l2d = derivative_norm(problem, problem.gradient) if (ref.hist is None and problem.dim == 1) else None
            bins = _reference_bins(cfg, problem, ref, l2d)
            if cfg.method == "kde":
                approx = density.kde(y).bin_average(
                    extend_edges(bins.edges, float(y.min()) - 6 * density.silverman_bandwidth(y),
                                 float(y.max()) + 6 * density.silverman_bandwidth(y)))
            else:
                lo, hi = bins.edges[0], bins.edges[-1]
                L = density.optimal_bins(N, hi - lo, l2d) if l2d else max(1, round(N ** (1 / 3)))
                approx = histogram_on(y, np.linspace(lo, hi, L + 1))
                approx = _rebin(approx, bins.edges)
            vals.update(density_errors(approx, bins, wanted))
        if wanted & set(MOMENT_METRICS):
            vals.update(_moment_errors(cfg, ref, None, y))
        per_rep.append(vals)
    return {k: float(np.mean([v[k] for v in per_rep])) for k in per_rep[0]}


def _rebin(h: HistogramDensity, edges: np.ndarray) -> HistogramDensity:
    """Exact re-binning of a step density onto (an extension of) ``edges``."""
    ext = extend_edges(edges, h.edges[0], h.edges[-1])
    cum_src = np.concatenate([[0.0], np.cumsum(h.heights * h.widths)])
    F = np.interp(ext, h.edges, cum_src, left=0.0, right=cum_src[-1])
    return HistogramDensity(ext, np.diff(F) / np.diff(ext))


def _worker(args):
    cfg, N = args
    problem = cfg.make_problem()
    return N, run_point(cfg, problem, build_reference(cfg, problem), N)


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get(WORKERS_ENV)
    workers = os.cpu_count() or 1
    if cap:
        try:
            workers = min(workers, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {cap!r}") from None
    return max(1, min(workers, n_tasks))


def run_study(cfg: StudyConfig, workers: Optional[int] = None) -> ConvergenceReport:
    """Run the N-sweep; the result depends only on the configuration."""
    cfg.validate()
    problem = cfg.make_problem()
    workers = worker_count(len(cfg.N)) if workers is None else workers
    if workers > 1 and len(cfg.N) > 1:
        # build the oracle once so workers only read the cache
        build_reference(cfg, problem)
        with ProcessPoolExecutor(workers) as pool:
            results = dict(pool.map(_worker, [(cfg, n) for n in cfg.N]))
    else:
        ref = build_reference(cfg, problem)
        results = {n: run_point(cfg, problem, ref, n) for n in cfg.N}
    rows = [(n, m, v) for n in cfg.N for m, v in results[n].items()]
    return ConvergenceReport(rows)


# ----------------------------------------------------------------------------
# CSV

HEADER = ("N", "metric", "value")


def write_csv(report: ConvergenceReport, fh) -> None:
    """Write ``N,metric,value`` rows sorted by N then metric, 17 significant digits."""
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(HEADER)
    for n, m, v in sorted(report.rows):
        w.writerow([n, m, f"{v:.17g}"])


def emit_csv(report: ConvergenceReport, path) -> None:
    path = Path(path)
    try:
        with open(path, "w", newline="") as fh:
            write_csv(report, fh)
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc


def parse_csv(path) -> ConvergenceReport:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if tuple(header or ()) != HEADER:
            raise ValueError(f"{path}: expected header {','.join(HEADER)}")
        rows = [(int(n), m, float(v)) for n, m, v in r]
    return ConvergenceReport(rows)


def fits_to_json(report: ConvergenceReport) -> dict:
    return {m: asdict(f) for m, f in report.fits.items()}
