from functools import reduce

import numpy as np
import pytest

from clairmap import expr as ex
from clairmap.cstruct import (
    ComplexStructure,
    check_hermitian,
    check_j_square,
    check_kahler,
    check_kahler_in_frame,
    nabla_j,
)
from clairmap.geom import ManifoldChart, christoffel_at, gram_schmidt, metric_at
from clairmap.rmap import map_point, target_covariant_derivative


def _targets(request):
    for name in ("semi", "hemi"):
        sf = request.getfixturevalue(name)
        yield sf, [map_point(sf.scenario, p) for p in sf.scenario.samples]


def _chart(metric):
    coords = ["y1", "y2", "y3", "y4"]
    M = [["0"] * 4 for _ in range(4)]
    for i, g in enumerate(metric):
        M[i][i] = g
    return ManifoldChart("N", coords, M)


def test_fixture_targets_are_kahler(request):
    for sf, qs in _targets(request):
        J, chart = sf.complex_structure, sf.scenario.target
        for q in qs:
            assert check_j_square(J, chart, q) < 1e-8
            assert check_hermitian(J, chart, q) < 1e-8
            assert check_kahler(J, chart, q) < 1e-8


def test_flat_constant_j_is_kahler(euclid):
    J, chart = euclid.complex_structure, euclid.scenario.target
    assert check_kahler(J, chart, [0.1, 0.2, 0.3, 0.4]) == 0.0


def test_conformal_block_in_y4():
    chart = _chart(["1", "1", "exp(2*y4)", "exp(2*y4)"])
    J = ComplexStructure.standard(chart)
    assert check_kahler(J, chart, [0.3, -0.2, 0.5, 0.7]) < 1e-8


def test_mixed_conformal_factor_is_not_kahler():
    chart = _chart(["exp(2*y3)", "1", "exp(2*y3)", "1"])
    J = ComplexStructure.standard(chart)
    q = [0.1, 0.2, 0.3, 0.4]
    assert check_j_square(J, chart, q) < 1e-12
    assert check_hermitian(J, chart, q) > 0.1
    assert check_kahler(J, chart, q) > 0.1


def test_hermitian_but_not_parallel():
    chart = _chart(["exp(2*y3)", "exp(2*y3)", "1", "1"])
    J = ComplexStructure.standard(chart)
    q = [0.1, 0.2, 0.3, 0.4]
    assert check_hermitian(J, chart, q) < 1e-12
    assert check_kahler(J, chart, q) > 0.1


def test_odd_dimension_rejected():
    chart = ManifoldChart("N", ["y1", "y2", "y3"], [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]])
    with pytest.raises(ValueError):
        ComplexStructure.standard(chart)


def test_nabla_j_matches_finite_differences():
    chart = _chart(["exp(2*y3)", "exp(2*y3)", "1", "1"])
    J = ComplexStructure(chart, [["0", "-1", "0", "0"], ["1", "0", "0", "0"], ["0", "0", "0", "-exp(y1)"], ["0", "0", "exp(-y1)", "0"]])
    q = np.array([0.2, -0.1, 0.4, 0.3])
    eps = 1e-6
    R = nabla_j(J, chart, q)
    Gam = christoffel_at(chart, q)
    Jq = J.at(q)
    for c in range(4):
        e = np.eye(4)[c]
        dJ = (J.at(q + eps * e) - J.at(q - eps * e)) / (2 * eps)
        for b in range(4):
            ref = dJ[:, b] + Gam[:, c, :] @ Jq[:, b] - Jq @ Gam[:, c, b]
            assert np.max(np.abs(R[:, c, b] - ref)) < 1e-8


def test_kahler_residual_frame_independent(semi, rng):
    J, chart = semi.complex_structure, semi.scenario.target
    q = map_point(semi.scenario, semi.scenario.samples[4])
    G = metric_at(chart, q)
    frame, _ = gram_schmidt(G, list(rng.normal(size=(6, 6))), 1e-10)
    assert abs(check_kahler_in_frame(J, chart, q, np.column_stack(frame)) - check_kahler(J, chart, q)) < 1e-8


def test_parallel_j_along_random_fields(semi, rng):
    scn, J = semi.scenario, semi.complex_structure
    for _ in range(5):
        p = scn.samples[rng.integers(len(scn.samples))]
        q = map_point(scn, p)
        coeffs = rng.normal(size=6)
        Y = [ex.parse(f"{float(coeffs[a])!r}*y{(a + 2) % 6 + 1}", scn.target.coords) for a in range(6)]
        JY = [reduce(ex.add, [ex.mul(J.matrix[a][b], Y[b]) for b in range(6)]) for a in range(6)]
        w = rng.normal(size=6)
        lhs = target_covariant_derivative(scn, p, w, JY)
        rhs = J.at(q) @ target_covariant_derivative(scn, p, w, Y)
        assert np.max(np.abs(lhs - rhs)) < 1e-7
