import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import hermite_e, legendre

from splinepdf.gpc import GpcSurrogate, gpc_fit, gpc_mean, ortho_basis, ortho_poly, tensor_gpc_fit
from splinepdf.grids import gauss_rule


def test_low_degree_values():
    assert ortho_poly("legendre", 0, 0.37) == 1.0
    assert ortho_poly("legendre", 1, 1.0) == pytest.approx(np.sqrt(3))
    assert ortho_poly("hermite", 2, 2.0) == pytest.approx((4 - 1) / np.sqrt(2))


@pytest.mark.parametrize("n", range(8))
def test_matches_numpy_bases(n):
    x = np.linspace(-1, 1, 17)
    c = np.zeros(n + 1)
    c[n] = 1.0
    # numpy Legendre P_n has E[P_n^2] = 1/(2n+1) under the uniform probability law
    np.testing.assert_allclose(ortho_poly("legendre", n, x), legendre.legval(x, c) * np.sqrt(2 * n + 1),
                               atol=1e-12)
    z = np.linspace(-3, 3, 17)
    np.testing.assert_allclose(ortho_poly("hermite", n, z),
                               hermite_e.hermeval(z, c) / np.sqrt(float(np.prod(range(1, n + 1)))),
                               atol=1e-10)


@pytest.mark.parametrize("family", ["legendre", "hermite"])
def test_orthonormal_on_rule(family):
    N = 10
    rule = gauss_rule(family, N)
    p = ortho_basis(family, N - 1, rule.nodes)
    gram = (p * rule.weights) @ p.T
    np.testing.assert_allclose(gram, np.eye(N), atol=1e-10)


@pytest.mark.parametrize("family", ["legendre", "hermite"])
def test_derivative_vs_finite_difference(family, rng):
    x = rng.uniform(-0.9, 0.9, 50) * (1 if family == "legendre" else 3)
    g = GpcSurrogate(family, rng.normal(size=9), gauss_rule(family, 9))
    h = 1e-6
    fd = (g(x + h) - g(x - h)) / (2 * h)
    d = g.derivative(x)
    assert np.max(np.abs(d - fd) / np.maximum(1.0, np.abs(d))) < 1e-6


def test_constant_and_unit_data():
    rule = gauss_rule("legendre", 8)
    g = gpc_fit(np.full(8, 2.5), rule)
    np.testing.assert_allclose(g.coefficients, [2.5] + [0] * 7, atol=1e-12)
    g2 = gpc_fit(ortho_poly("legendre", 2, rule.nodes), rule)
    np.testing.assert_allclose(g2.coefficients, np.eye(8)[2], atol=1e-10)
    assert GpcSurrogate("legendre", np.eye(3)[0], gauss_rule("legendre", 3))(0.77) == 1.0


def test_interpolates_nodes_and_mean_identity():
    f = lambda a: np.tanh(9 * a) + a / 2  # noqa: E731
    rule = gauss_rule("legendre", 18)
    g = gpc_fit(f(rule.nodes), rule)
    np.testing.assert_allclose(g(rule.nodes), f(rule.nodes), atol=1e-9)
    assert gpc_mean(g) == pytest.approx(rule.expect(f), abs=1e-15)
    assert abs(gpc_mean(g)) < 1e-12  # odd data on a symmetric rule


def test_artificial_extrema_at_18_points():
    f = lambda a: np.tanh(9 * a) + a / 2  # noqa: E731
    rule = gauss_rule("legendre", 18)
    g = gpc_fit(f(rule.nodes), rule)
    d = g.derivative(np.linspace(-1, 1, 4001))
    assert np.sum(np.diff(np.sign(d)) != 0) > 0  # f' > 0 has no sign changes


def test_spectral_decay_l2():
    f = lambda a: np.tanh(9 * a) + a / 2  # noqa: E731
    t = np.linspace(-1, 1, 10_000)
    w = np.full(t.size, 1.0)
    w[[0, -1]] = 0.5
    w /= w.sum()

    def l2(N):
        rule = gauss_rule("legendre", N)
        g = gpc_fit(f(rule.nodes), rule)
        return np.sqrt(np.dot(w, (g(t) - f(t)) ** 2))

    assert l2(80) * 10 <= l2(40)


def test_length_mismatch():
    with pytest.raises(ValueError):
        gpc_fit(np.zeros(5), gauss_rule("legendre", 6))


@given(family=st.sampled_from(["legendre", "hermite"]), N=st.integers(1, 12), data=st.data())
def test_polynomial_recovery(family, N, data):
    c = np.array(data.draw(st.lists(st.floats(-5, 5), min_size=N, max_size=N)))
    rule = gauss_rule(family, N)
    vals = c @ ortho_basis(family, N - 1, rule.nodes)
    g = gpc_fit(vals, rule)
    scale = max(1.0, np.abs(c).sum())
    np.testing.assert_allclose(g.coefficients, c, atol=1e-9 * scale)
    assert g.mean == pytest.approx(c[0], abs=1e-9 * scale)
    assert g.variance == pytest.approx(np.sum(c[1:] ** 2), rel=1e-8, abs=1e-9 * scale ** 2)


def test_tensor_recovers_product_polynomial():
    def f(p):
        return 1.0 + ortho_poly("legendre", 2, p[:, 0]) * ortho_poly("legendre", 1, p[:, 1])

    g = tensor_gpc_fit(f, 2, 4)
    expected = np.zeros((4, 4))
    expected[0, 0], expected[2, 1] = 1.0, 1.0
    np.testing.assert_allclose(g.coefficients, expected, atol=1e-12)
    pts = np.random.default_rng(0).uniform(-1, 1, (100, 2))
    np.testing.assert_allclose(g(pts), f(pts), atol=1e-12)
    assert g.mean == pytest.approx(1.0) and g.variance == pytest.approx(1.0)
