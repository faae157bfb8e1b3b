import numpy as np
import pytest

from clairmap.geom import ManifoldChart, christoffel_at, inner, norm
from clairmap.rmap import (
    MapScenario,
    RankError,
    frame_split,
    is_riemannian_map,
    is_umbilical,
    jacobian_at,
    map_point,
    mean_curvature,
    normal_connection,
    second_fundamental_form,
    sff_component_matrix,
    sff_squared_norm,
    shape_operator,
    tension_field,
)

FIXTURES = ["semi", "hemi", "curved_semi"]
DRAWS = 100


def _scn(request, name):
    return request.getfixturevalue(name).scenario


def _draw_point(scn, rng):
    """Random point near a sample; hemi samples keep their x4 = 0 slice."""
    base = scn.samples[rng.integers(len(scn.samples))]
    p = base + rng.uniform(-0.2, 0.2, size=scn.m)
    p[base == 0.0] = 0.0
    return p


def _sff_oracle(scn, p, X, Y, eps=1e-5):
    """Covariant derivative of ``F_*Y`` along ``X`` with ``Y`` coordinate-constant."""
    q = map_point(scn, p)
    dJ = (jacobian_at(scn, p + eps * X) - jacobian_at(scn, p - eps * X)) / (2 * eps)
    J = jacobian_at(scn, p)
    GN, GM = christoffel_at(scn.target, q), christoffel_at(scn.source, p)
    return dJ @ Y + np.einsum("abc,b,c->a", GN, J @ X, J @ Y) - J @ np.einsum("kij,i,j->k", GM, X, Y)


def test_identity_map_is_totally_geodesic(euclid):
    scn = euclid.scenario
    p = scn.samples[0]
    fs = frame_split(scn, p)
    assert fs.kernel.shape[1] == 0 and fs.rank == scn.n
    assert np.allclose(second_fundamental_form(scn, p, np.ones(4), np.arange(4.0)), 0.0)
    assert np.allclose(tension_field(scn, p), 0.0)
    assert is_umbilical(scn, p)[0]


@pytest.mark.parametrize("name,kernel,rank,perp", [("semi", 2, 4, 2), ("hemi", 3, 3, 3)])
def test_frame_split_dimensions(request, name, kernel, rank, perp):
    scn = _scn(request, name)
    for p in scn.samples:
        fs = frame_split(scn, p)
        assert (fs.kernel.shape[1], fs.rank, fs.perp.shape[1]) == (kernel, rank, perp)


def test_semi_pushforward_of_e2(semi):
    scn = semi.scenario
    a = np.pi / 6
    col = jacobian_at(scn, scn.samples[3])[:, 1]
    assert np.allclose(col, [np.cos(a), 0, 0, 0, 0, np.sin(a)], atol=1e-14)


def test_hemi_x4_in_kernel(hemi):
    scn = hemi.scenario
    assert np.allclose(jacobian_at(scn, scn.samples[0])[:, 3], 0.0)


@pytest.mark.parametrize("name", ["semi", "hemi"])
def test_riemannian_verdict(request, name):
    scn = _scn(request, name)
    assert len(scn.samples) >= 20
    for p in scn.samples:
        ok, res = is_riemannian_map(scn, p)
        assert ok and res < 1e-9


def test_scaling_is_not_riemannian():
    line = ManifoldChart("R", ["x"], [["1"]])
    out = ManifoldChart("R", ["y"], [["1"]])
    scn = MapScenario(line, out, ["2*x"], samples=[[0.3]])
    ok, res = is_riemannian_map(scn, [0.3])
    assert not ok and res == pytest.approx(3.0)


def test_rank_mismatch_rejected():
    line = ManifoldChart("R", ["x"], [["1"]])
    with pytest.raises(RankError):
        MapScenario(line, line, ["x"], samples=[[0.0]], rank=0)


@pytest.mark.parametrize("name", FIXTURES)
def test_weingarten_duality(request, name, rng):
    scn = _scn(request, name)
    worst = 0.0
    for _ in range(DRAWS):
        p = _draw_point(scn, rng)
        fs = frame_split(scn, p)
        V = fs.perp @ rng.normal(size=fs.perp.shape[1])
        X = fs.horizontal @ rng.normal(size=fs.rank)
        Y = fs.horizontal @ rng.normal(size=fs.rank)
        S = shape_operator(scn, p, V, fs.pushforward(X), fs)
        lhs = inner(fs.G_N, S, fs.pushforward(Y))
        rhs = inner(fs.G_N, second_fundamental_form(scn, p, X, Y), V)
        worst = max(worst, abs(lhs - rhs))
        assert norm(fs.G_N, fs.project_perp(S)) < 1e-10
    assert worst < 1e-8


@pytest.mark.parametrize("name", FIXTURES)
def test_shape_operator_linear_in_v(request, name, rng):
    scn = _scn(request, name)
    for _ in range(20):
        p = _draw_point(scn, rng)
        fs = frame_split(scn, p)
        V = fs.perp @ rng.normal(size=fs.perp.shape[1])
        FX = fs.range @ rng.normal(size=fs.rank)
        a = shape_operator(scn, p, 2 * V, FX, fs)
        b = 2 * shape_operator(scn, p, V, FX, fs)
        assert np.max(np.abs(a - b)) < 1e-10


@pytest.mark.parametrize("name", FIXTURES)
def test_sff_symmetry_and_tensoriality(request, name, rng):
    scn = _scn(request, name)
    for _ in range(DRAWS):
        p = _draw_point(scn, rng)
        X, Y, Z = rng.normal(size=(3, scn.m))
        a, b = rng.normal(size=2)
        s_xy = second_fundamental_form(scn, p, X, Y)
        assert np.max(np.abs(s_xy - second_fundamental_form(scn, p, Y, X))) < 1e-10
        assert np.max(np.abs(second_fundamental_form(scn, p, 2 * X, Y) - 2 * s_xy)) < 1e-10
        lin = second_fundamental_form(scn, p, a * X + b * Z, Y)
        ref = a * s_xy + b * second_fundamental_form(scn, p, Z, Y)
        assert np.max(np.abs(lin - ref)) < 1e-10
        lin = second_fundamental_form(scn, p, X, a * Y + b * Z)
        ref = a * s_xy + b * second_fundamental_form(scn, p, X, Z)
        assert np.max(np.abs(lin - ref)) < 1e-10


@pytest.mark.parametrize("name", FIXTURES)
def test_sff_matches_finite_difference_oracle(request, name, rng):
    scn = _scn(request, name)
    for _ in range(10):
        p = _draw_point(scn, rng)
        X, Y = rng.normal(size=(2, scn.m))
        got = second_fundamental_form(scn, p, X, Y)
        assert np.max(np.abs(got - _sff_oracle(scn, p, X, Y))) < 1e-7


@pytest.mark.parametrize("name", FIXTURES)
def test_sff_has_no_range_part(request, name, rng):
    scn = _scn(request, name)
    for _ in range(20):
        p = _draw_point(scn, rng)
        fs = frame_split(scn, p)
        X, Y = (fs.horizontal @ rng.normal(size=fs.rank) for _ in range(2))
        assert norm(fs.G_N, fs.project_range(second_fundamental_form(scn, p, X, Y))) < 1e-7


@pytest.mark.parametrize("name", FIXTURES)
def test_resolution_of_identity(request, name, rng):
    scn = _scn(request, name)
    fs = frame_split(scn, scn.samples[0])
    for _ in range(10):
        w = rng.normal(size=scn.n)
        assert np.max(np.abs(fs.project_range(w) + fs.project_perp(w) - w)) < 1e-10


@pytest.mark.parametrize("name", FIXTURES)
def test_sff_components_symmetric_and_consistent(request, name):
    scn = _scn(request, name)
    for p in scn.samples[:5]:
        fs = frame_split(scn, p)
        B = sff_component_matrix(scn, p, fs)
        assert np.max(np.abs(B - np.transpose(B, (0, 2, 1)))) < 1e-10
        assert abs(float(np.sum(B * B)) - sff_squared_norm(scn, p, fs)) < 1e-9


def test_semi_is_totally_geodesic(semi):
    scn = semi.scenario
    for p in scn.samples:
        assert np.max(np.abs(mean_curvature(scn, p))) < 1e-12
        assert np.max(np.abs(tension_field(scn, p))) < 1e-8
        assert is_umbilical(scn, p)[0]
    e2 = np.eye(6)[1]
    assert np.allclose(second_fundamental_form(scn, scn.samples[0], e2, e2), 0.0)


def test_hemi_mean_curvature_and_tension(hemi):
    scn = hemi.scenario
    for p in scn.samples:
        H = mean_curvature(scn, p)
        assert np.allclose(H, [0, 0, 0, -1 / 3, 0, 0], atol=1e-12)
        assert np.allclose(tension_field(scn, p), [0, 0, 0, -1, 0, 0], atol=1e-12)
        ok, res = is_umbilical(scn, p)
        assert not ok and res == pytest.approx(2 / 3)


def test_normal_connection_is_perp(semi, rng):
    scn = semi.scenario
    p = scn.samples[2]
    fs = frame_split(scn, p)
    field_ = ["-sin(0.5235987755982988)", "0", "0", "0", "0", "cos(0.5235987755982988)"]
    for _ in range(5):
        X = fs.horizontal @ rng.normal(size=fs.rank)
        w = normal_connection(scn, p, X, field_, fs)
        assert max(abs(inner(fs.G_N, w, fs.range[:, k])) for k in range(fs.rank)) < 1e-10
        assert np.allclose(w, 0.0, atol=1e-12)


def test_normal_connection_rejects_range_field(semi):
    scn = semi.scenario
    fs = frame_split(scn, scn.samples[0])
    with pytest.raises(ValueError):
        normal_connection(scn, scn.samples[0], fs.horizontal[:, 0], ["0", "0", "1", "0", "0", "0"], fs)
