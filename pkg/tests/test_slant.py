import dataclasses
import math

import numpy as np
import pytest

from clairmap.cstruct import ComplexStructure
from clairmap.geom import ManifoldChart, norm
from clairmap.rmap import MapScenario, frame_split
from clairmap.slant import classify, decompose_J, decomposition_residuals, label_for, slant_spectrum

ALPHA = math.pi / 6


def _flat(prefix, n):
    M = [["1" if i == j else "0" for j in range(n)] for i in range(n)]
    return ManifoldChart(prefix.upper(), [f"{prefix}{i}" for i in range(1, n + 1)], M)


def _toy(components, samples):
    src, tgt = _flat("x", 2), _flat("y", 4)
    return MapScenario(src, tgt, components, samples=samples), ComplexStructure.standard(tgt)


def _direct_angle(ops, v):
    """Angle between ``J v`` and the range, from the projection length alone."""
    Jv = ops.J @ v
    G = ops.frames.G_N
    return math.acos(min(norm(G, ops.frames.project_range(Jv)) / norm(G, Jv), 1.0))


@pytest.mark.parametrize("name", ["semi", "hemi"])
def test_decomposition_invariants(request, name):
    sf = request.getfixturevalue(name)
    for p in sf.scenario.samples:
        ops = decompose_J(sf.scenario, sf.complex_structure, p)
        res = decomposition_residuals(ops)
        assert res["range"] < 1e-10 and res["perp"] < 1e-10
        assert res["phi_skew"] < 1e-9 and res["omega_B_adjoint"] < 1e-9
        w = slant_spectrum(ops).eigenvalues
        assert w.min() > -1e-9 and w.max() < 1 + 1e-9


def test_semi_classification(semi):
    cls = classify(semi.scenario, semi.complex_structure)
    assert cls.label == "semi-slant"
    assert cls.dims == {"invariant": 2, "slant": 2}
    assert cls.constancy < 1e-6
    ops = decompose_J(semi.scenario, semi.complex_structure, semi.scenario.samples[0])
    slant = [c for c in cls.clusters if c.classify(1e-6) == "slant"][0]
    for k in range(slant.basis.shape[1]):
        assert abs(_direct_angle(ops, slant.basis[:, k]) - cls.theta) < 1e-9


def test_hemi_classification(hemi):
    cls = classify(hemi.scenario, hemi.complex_structure)
    assert cls.label == "hemi-slant"
    assert cls.dims == {"slant": 2, "anti-invariant": 1}
    assert abs(cls.theta - ALPHA) < 1e-6
    assert [round(c.lam, 12) for c in cls.clusters] == [0.75, 0.0]


def test_hemi_x3_image_is_anti_invariant(hemi):
    scn, J = hemi.scenario, hemi.complex_structure
    p = scn.samples[0]
    fs = frame_split(scn, p)
    v = fs.pushforward(np.eye(6)[2])
    ops = decompose_J(scn, J, p, fs)
    assert np.allclose(J.at(fs.image) @ v, np.eye(6)[3])
    assert norm(fs.G_N, ops.phi_vec(v)) < 1e-12
    assert norm(fs.G_N, ops.omega_vec(v) - J.at(fs.image) @ v) < 1e-12


def test_semi_invariant_block(semi):
    scn, J = semi.scenario, semi.complex_structure
    p = scn.samples[0]
    fs = frame_split(scn, p)
    ops = decompose_J(scn, J, p, fs)
    e3 = np.eye(6)[2]
    assert norm(fs.G_N, ops.omega_vec(e3)) < 1e-12
    assert np.allclose(ops.phi_vec(e3), J.at(fs.image) @ e3)


@pytest.mark.parametrize("name", ["semi", "hemi"])
def test_phi_squared_identity(request, name):
    sf = request.getfixturevalue(name)
    cls = classify(sf.scenario, sf.complex_structure)
    c2 = math.cos(cls.theta) ** 2
    for p in sf.scenario.samples[:5]:
        ops = decompose_J(sf.scenario, sf.complex_structure, p)
        for c in slant_spectrum(ops).clusters:
            if c.classify(1e-6) != "slant":
                continue
            for k in range(c.basis.shape[1]):
                v = c.basis[:, k]
                assert norm(ops.frames.G_N, ops.phi_vec(ops.phi_vec(v)) + c2 * v) < 1e-8


def test_anti_invariant_cluster(hemi):
    ops = decompose_J(hemi.scenario, hemi.complex_structure, hemi.scenario.samples[1])
    G = ops.frames.G_N
    zero = [c for c in slant_spectrum(ops).clusters if c.classify(1e-6) == "anti-invariant"][0]
    v = zero.basis[:, 0]
    assert norm(G, ops.phi_vec(v)) < 1e-8
    assert abs(norm(G, ops.omega_vec(v)) - norm(G, v)) < 1e-8


def test_shuffled_frame_gives_same_spectrum(semi, rng):
    scn, J = semi.scenario, semi.complex_structure
    fs = frame_split(scn, scn.samples[0])
    perm = rng.permutation(fs.rank)
    shuffled = dataclasses.replace(fs, range=fs.range[:, perm], horizontal=fs.horizontal[:, perm])
    a = slant_spectrum(decompose_J(scn, J, None, fs))
    b = slant_spectrum(decompose_J(scn, J, None, shuffled))
    assert [c.multiplicity for c in a.clusters] == [c.multiplicity for c in b.clusters]
    assert np.max(np.abs(np.array(a.lambdas) - np.array(b.lambdas))) < 1e-9


def test_identity_map_is_invariant(euclid):
    cls = classify(euclid.scenario, euclid.complex_structure)
    assert cls.label == "invariant" and cls.theta == 0.0
    ops = decompose_J(euclid.scenario, euclid.complex_structure, euclid.scenario.samples[0])
    assert ops.omega.size == 0
    assert np.allclose(ops.phi.T @ ops.phi, np.eye(4))


def test_anti_invariant_toy():
    scn, J = _toy(["x1", "0", "x2", "0"], [[0.0, 0.0], [1.0, 2.0]])
    cls = classify(scn, J)
    assert cls.label == "anti-invariant"
    assert cls.theta == pytest.approx(math.pi / 2)
    assert [c.lam for c in cls.clusters] == pytest.approx([0.0])


def test_proper_slant_toy():
    c, s = math.cos(0.4), math.sin(0.4)
    scn, J = _toy(["x1", f"{c!r}*x2", "0", f"{s!r}*x2"], [[0.0, 0.0], [0.5, -0.3]])
    cls = classify(scn, J)
    assert cls.label == "slant"
    assert math.cos(cls.theta) == pytest.approx(c, abs=1e-9)


def test_varying_angle_is_generic():
    scn, J = _toy(["x1", "x1*x2", "0", "x2"], [[0.1, 0.2], [1.0, -0.7]])
    cls = classify(scn, J)
    assert cls.label == "generic"
    assert cls.diagnostic


@pytest.mark.parametrize(
    "kinds,label",
    [
        (["invariant"], "invariant"),
        (["anti-invariant"], "anti-invariant"),
        (["slant"], "slant"),
        (["invariant", "slant"], "semi-slant"),
        (["slant", "anti-invariant"], "hemi-slant"),
        (["invariant", "anti-invariant"], "generic"),
        (["invariant", "slant", "anti-invariant"], "generic"),
        (["slant", "slant"], "generic"),
    ],
)
def test_label_for(kinds, label):
    assert label_for(kinds) == label
