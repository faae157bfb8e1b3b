import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clairmap._linalg import SingularMatrixError, cholesky_ok, gauss_jordan_inverse, gauss_jordan_solve, jacobi_eigh
from clairmap.geom import (
    ManifoldChart,
    MetricError,
    christoffel_at,
    covariant_derivative_at,
    geodesic_integrate,
    gram_schmidt,
    inner,
    metric_at,
    speed_drift,
)

FLAT3 = ManifoldChart("R3", ["a", "b", "c"], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])


def _expected_semi_source():
    G = np.zeros((6, 6, 6))
    G[2, 2, 2] = 1.0
    G[2, 3, 3] = -1.0
    G[3, 2, 3] = G[3, 3, 2] = 1.0
    return G


def _expected_hemi_source():
    G = np.zeros((6, 6, 6))
    G[3, 2, 2] = -1.0
    G[3, 3, 3] = 1.0
    G[2, 2, 3] = G[2, 3, 2] = 1.0
    return G


@pytest.mark.parametrize("which, expected", [("semi", _expected_semi_source()), ("hemi", _expected_hemi_source())])
def test_fixture_christoffel_symbols(which, expected, semi, hemi, rng):
    chart = (semi if which == "semi" else hemi).scenario.source
    for p in rng.uniform(-1, 1, size=(20, 6)):
        assert np.max(np.abs(christoffel_at(chart, p) - expected)) < 1e-10


def test_christoffel_symmetric_and_metric_compatible(semi, rng):
    chart = semi.scenario.target
    p = rng.uniform(-1, 1, 6)
    Gam = christoffel_at(chart, p)
    assert np.max(np.abs(Gam - Gam.transpose(0, 2, 1))) < 1e-14
    G = metric_at(chart, p)
    h = 1e-6
    for k in range(6):
        e = np.eye(6)[k]
        dG = (metric_at(chart, p + h * e) - metric_at(chart, p - h * e)) / (2 * h)
        # d_k g_ij = g(Gamma_ki, e_j) + g(e_i, Gamma_kj)
        lower = np.einsum("ml,lij->mij", G, Gam)
        pred = lower[:, k, :].T + lower[:, k, :]
        assert np.max(np.abs(dG - pred)) < 1e-8


def test_polar_christoffel_non_diagonal_path():
    chart = ManifoldChart("skew", ["u", "v"], [["1", "u"], ["u", "1 + u^2"]])
    assert not chart.diagonal_metric
    Gam = christoffel_at(chart, [0.3, 0.1])
    assert np.all(np.isfinite(Gam))


@pytest.mark.parametrize("v0", [[1.0, 0.0, 0.0], [0.3, -2.0, 0.5], [1e-3, 1e-3, 1e-3]])
def test_euclidean_straight_lines(v0):
    p0 = np.array([0.5, -1.0, 2.0])
    c = geodesic_integrate(FLAT3, p0, v0, 1000, 1e-3)
    assert c.error is None
    assert np.max(np.abs(c.points - (p0 + np.outer(c.t, v0)))) < 1e-12
    assert np.max(np.abs(c.velocities - v0)) < 1e-12


def test_flat_block_closed_form(semi):
    # metric exp(2 x3)(dx3^2 + dx4^2) from the origin along d/dx4
    c = geodesic_integrate(semi.scenario.source, np.zeros(6), [0, 0, 0, 1.0, 0, 0], 2000, 1e-3)
    t = c.t
    assert np.max(np.abs(c.points[:, 2] - 0.5 * np.log1p(t * t))) < 1e-9
    assert np.max(np.abs(c.points[:, 3] - np.arctan(t))) < 1e-9


@pytest.mark.parametrize("name", ["semi", "hemi", "polar", "euclid"])
def test_speed_drift_all_fixture_charts(name, request):
    sf = request.getfixturevalue(name)
    for chart in (sf.scenario.source, sf.scenario.target):
        m = chart.dim
        p0 = np.zeros(m) + (1.0 if name == "polar" else 0.0)
        v0 = np.linspace(0.2, 0.9, m)
        c = geodesic_integrate(chart, p0, v0, 10_000, 1e-3)
        assert c.error is None
        assert speed_drift(c) < 1e-6


def test_geodesic_stops_on_metric_failure():
    chart = ManifoldChart("half", ["u"], [["u"]])
    c = geodesic_integrate(chart, [1.0], [-1.0], 5000, 1e-3)
    assert c.error is not None
    assert len(c) < 5001
    assert np.all(c.points[:, 0] > 0)


def test_metric_error_reports_eigenvalue():
    chart = ManifoldChart("bad", ["u", "v"], [["1", "2"], ["2", "1"]])
    with pytest.raises(MetricError) as info:
        metric_at(chart, [0.0, 0.0])
    assert info.value.smallest_eigenvalue == pytest.approx(-1.0)


def test_covariant_derivative_of_radial_field():
    polar = ManifoldChart("plane", ["r", "phi"], [["1", "0"], ["0", "r^2"]])
    # d/dphi is Killing; nabla_{d/dphi} d/dr = (1/r) d/dphi
    got = covariant_derivative_at(polar, [2.0, 0.3], ["1", "0"], [0.0, 1.0])
    assert np.allclose(got, [0.0, 0.5], atol=1e-14)


spd = arrays(np.float64, (4, 4), elements=st.floats(-1, 1)).map(lambda A: A @ A.T + 0.5 * np.eye(4))


@given(spd, arrays(np.float64, (4, 3), elements=st.floats(-2, 2)))
@settings(max_examples=100, deadline=None)
def test_gram_schmidt_orthonormal(G, V):
    kept, dropped = gram_schmidt(G, list(V.T))
    K = np.array(kept)
    if len(kept):
        assert np.max(np.abs(K @ G @ K.T - np.eye(len(kept)))) < 1e-9
    assert len(kept) + len(dropped) == 3


def test_gram_schmidt_drops_dependent():
    kept, dropped = gram_schmidt(np.eye(3), [[1, 0, 0], [2, 0, 0], [0, 1, 0]])
    assert len(kept) == 2 and dropped == [1]


@given(spd)
@settings(max_examples=100, deadline=None)
def test_jacobi_matches_numpy(A):
    w, V = jacobi_eigh(A)
    assert np.allclose(w, np.sort(np.linalg.eigvalsh(A))[::-1], atol=1e-10)
    assert np.allclose(A @ V, V * w, atol=1e-9)
    assert cholesky_ok(A)


@given(spd, arrays(np.float64, (4,), elements=st.floats(-3, 3)))
@settings(max_examples=100, deadline=None)
def test_gauss_jordan(A, b):
    x = gauss_jordan_solve(A, b)
    assert np.allclose(A @ x, b, atol=1e-9)
    assert np.allclose(gauss_jordan_inverse(A) @ A, np.eye(4), atol=1e-9)


def test_singular_and_indefinite():
    with pytest.raises(SingularMatrixError):
        gauss_jordan_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))
    assert not cholesky_ok(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_inner_is_metric():
    G = np.diag([1.0, 4.0])
    assert inner(G, [0, 1], [0, 1]) == 4.0
    assert math.isclose(inner(G, [1, 1], [1, -1]), -3.0)
