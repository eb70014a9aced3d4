import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from splinepdf import density
from splinepdf.density import (HistogramDensity, MonotonePieces, exact_cdf_1d, exact_histogram_1d,
                               exact_pdf_1d, histogram, kde, optimal_bins, pushforward_mc)
from splinepdf.metrics import lp_distance
from splinepdf.problems import lemma3_pair


def test_histogram_examples():
    h = histogram([0.5], 1, range=(0, 1))
    np.testing.assert_allclose(h.heights, [1.0])
    x = np.random.default_rng(0).uniform(0, 1, 10 ** 6)
    h = histogram(x, 10, range=(0, 1))
    assert np.all(np.abs(h.heights - 1) < 0.02)
    h = histogram(np.full(7, 3.0), 5)
    assert np.count_nonzero(h.heights) == 1


def test_histogram_rejects():
    with pytest.raises(ValueError):
        histogram([], 3)
    with pytest.raises(ValueError):
        histogram([1.0], 0)
    with pytest.raises(ValueError):
        histogram([5.0], 2, range=(0, 1))


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=200), st.integers(1, 60))
def test_histogram_normalized(xs, L):
    h = histogram(np.array(xs), L)
    assert h.integral() == pytest.approx(1.0, abs=1e-12)
    assert np.all(h.heights >= 0)


def test_optimal_bins():
    assert density.bin_constant(6.0, 1.0) == pytest.approx(1.0)
    assert optimal_bins(1000, 6.0, 1.0) == 10
    assert density.bin_constant(1.0, 1.0) == pytest.approx((1 / 6) ** (1 / 3), rel=1e-12)
    assert optimal_bins(10 ** 6, 6.0, 10.0) / optimal_bins(10 ** 3, 6.0, 10.0) == pytest.approx(10, rel=0.02)
    with pytest.raises(ValueError):
        optimal_bins(100, 0.0, 1.0)


def test_kde_single_kernel_and_normalization():
    k = kde([0.0], bandwidth=1.0)
    y = np.linspace(-3, 3, 13)
    np.testing.assert_allclose(k(y), stats.norm.pdf(y), rtol=1e-13)
    x = np.random.default_rng(2).normal(size=500)
    k = kde(x)
    g = np.linspace(-10, 10, 20001)
    assert np.trapezoid(k(g), g) == pytest.approx(1.0, abs=1e-4)
    with pytest.raises(ValueError):
        kde(x, bandwidth=0.0)
    with pytest.raises(ValueError):
        kde([1.0])


def test_silverman_against_closed_form():
    x = np.random.default_rng(3).normal(size=1000)
    q75, q25 = np.percentile(x, [75, 25])
    h = 0.9 * min(x.std(ddof=1), (q75 - q25) / 1.34) * 1000 ** -0.2
    assert density.silverman_bandwidth(x) == pytest.approx(h)


def test_kde_bin_average_matches_quadrature():
    x = np.random.default_rng(4).normal(size=50)
    k = kde(x)
    edges = np.linspace(-4, 4, 9)
    avg = k.bin_average(edges)
    for i in range(8):
        t = np.linspace(edges[i], edges[i + 1], 4001)
        assert avg.heights[i] == pytest.approx(np.trapezoid(k(t), t) / (edges[i + 1] - edges[i]), rel=1e-6)


def test_pushforward_examples():
    c = density.uniform_box(0.0, 1.0)
    h = pushforward_mc(lambda a: a, c, 10 ** 6, 10, seed=1)
    assert np.all(np.abs(h.heights - 1) < 0.02)
    h = pushforward_mc(lambda a: 2 * a, c, 10 ** 6, 10, seed=1)
    np.testing.assert_allclose(h.heights, 0.5, atol=0.01)
    assert h.edges[0] >= 0 and h.edges[-1] <= 2
    with pytest.raises(ValueError):
        pushforward_mc(lambda a: a, c, 5, 10, seed=1)


@given(seed=st.integers(0, 2 ** 64 - 1), L=st.integers(1, 50))
def test_pushforward_seed_determinism(seed, L):
    c = density.uniform_box(-1.0, 1.0)
    f = lambda a: np.tanh(3 * a)  # noqa: E731
    a = pushforward_mc(f, c, 5000, L, seed)
    b = pushforward_mc(f, c, 5000, L, seed)
    np.testing.assert_array_equal(a.heights, b.heights)
    np.testing.assert_array_equal(a.edges, b.edges)


def test_chunked_draws_independent_of_chunking(monkeypatch):
    c = density.uniform_box(0.0, 1.0)
    big = c.sample(3000, seed=9)
    monkeypatch.setattr(density, "CHUNK", 1000)
    # chunk streams are keyed by index, so a smaller chunk changes the stream
    # but repeated calls with the same chunking agree
    np.testing.assert_array_equal(c.sample(3000, 9), c.sample(3000, 9))
    assert big.shape == (3000,)


@pytest.mark.parametrize("kind", ["uniform", "normal", "beta"])
def test_input_laws(kind):
    c = {"uniform": density.uniform_box(-2.0, 3.0), "normal": density.transformed_normal(0.6),
         "beta": density.beta(2.0, 3.0)}[kind]
    for sampling in density.SAMPLING:
        x = c.sample(4096, 5, sampling)
        assert np.all((x >= c.lo[0]) & (x <= c.hi[0]))
    t = np.linspace(c.lo[0], c.hi[0], 20001)
    assert np.trapezoid(c.pdf(t), t) == pytest.approx(1.0, abs=1e-6)
    u = np.linspace(0.01, 0.99, 9)
    np.testing.assert_allclose(c.cdf(c.ppf(u)), u, atol=1e-10)
    x = c.sample(200_000, 1, "sobol")
    assert stats.kstest(x, c.cdf).statistic < 5e-3


def test_uniform_box_multid():
    c = density.uniform_box([-1, 0, 2], [1, 1, 4])
    assert c.dim == 3 and c.volume == 4.0
    x = c.sample(100, 0)
    assert x.shape == (100, 3)
    np.testing.assert_allclose(c.pdf(x), 0.25)
    with pytest.raises(ValueError):
        density.uniform_box([0, 1], [1, 1])


def test_exact_pdf_examples():
    c = density.uniform_box(0.0, 1.0)
    ys = np.linspace(0.01, 0.99, 50)
    np.testing.assert_allclose(exact_pdf_1d(lambda a: a, lambda a: np.ones_like(a), c, ys).pdf, 1.0)
    ys = np.linspace(0.01, 1.99, 50)
    np.testing.assert_allclose(exact_pdf_1d(lambda a: 2 * a, lambda a: 2 + 0 * a, c, ys).pdf, 0.5)


def test_exact_pdf_two_branches():
    # y = a^2 on uniform(-1, 1): p(y) = 1 / (2 sqrt y)
    c = density.uniform_box(-1.0, 1.0)
    ys = np.linspace(0.01, 0.99, 40)
    p = exact_pdf_1d(lambda a: a * a, lambda a: 2 * a, c, ys)
    np.testing.assert_allclose(p.pdf, 0.5 / np.sqrt(ys), rtol=1e-9)
    sing = exact_pdf_1d(lambda a: a * a, lambda a: 2 * a, c, np.array([0.0, 0.5]))
    assert np.isinf(sing.pdf[0]) and sing.singular[0]


def test_exact_pdf_normalized_and_cdf():
    f = lambda a: np.tanh(9 * a) + a / 2  # noqa: E731
    df = lambda a: 9 / np.cosh(9 * a) ** 2 + 0.5  # noqa: E731
    c = density.uniform_box(-1.0, 1.0)
    ys = np.linspace(f(-1.0), f(1.0), 40001)
    assert exact_pdf_1d(f, df, c, ys).integral() == pytest.approx(1.0, abs=1e-3)
    # the CDF at f(a) equals P(alpha <= a) for monotone f
    a = np.linspace(-0.9, 0.9, 7)
    np.testing.assert_allclose(exact_cdf_1d(f, df, c, f(a)), (a + 1) / 2, atol=1e-10)
    edges = np.linspace(f(-1.0), f(1.0), 51)
    assert exact_histogram_1d(f, df, c, edges).integral() == pytest.approx(1.0, abs=1e-12)


def test_monotone_pieces_roots():
    f = lambda a: np.sin(3 * a)  # noqa: E731
    pieces = MonotonePieces(f, lambda a: 3 * np.cos(3 * a), -2.0, 2.0)
    assert len(pieces) == 5  # extrema at +-pi/6, +-pi/2
    for lo, hi, r in pieces.roots(np.array([0.3])):
        assert r.size <= 1
        if r.size:
            np.testing.assert_allclose(f(r), 0.3, atol=1e-11)


def test_oracle_equivalence_monotone():
    f = lambda a: a + 0.3 * a ** 3  # noqa: E731
    df = lambda a: 1 + 0.9 * a ** 2  # noqa: E731
    c = density.uniform_box(-1.0, 1.0)
    M, L = 10 ** 6, 40
    h = pushforward_mc(f, c, M, L, seed=4)
    ys = np.linspace(h.edges[0], h.edges[-1], 4001)
    exact = exact_pdf_1d(f, df, c, ys)
    assert lp_distance(h, exact, grid=ys) <= 3 / L + 5 * M ** (-1 / 3)


def test_lemma3_densities_far_apart():
    pair = lemma3_pair(1e-3)
    ys = np.linspace(0.05, 0.95, 20001)
    pf = exact_pdf_1d(pair.f, pair.df, pair.input, ys)
    pg = exact_pdf_1d(pair.g, pair.dg, pair.input, ys)
    assert np.max(np.abs(pf.pdf - pg.pdf)) >= 0.5


def test_histogram_density_call_sides():
    h = HistogramDensity(np.array([0.0, 1.0, 2.0]), np.array([0.25, 0.75]))
    assert h(1.0) == 0.75 and h(1.0, side="left") == 0.25
    assert h(-1.0) == 0.0 and h(2.5) == 0.0
