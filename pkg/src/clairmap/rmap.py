"""Smooth maps between charts: frame split, Riemannian-map test, SFF and friends."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from . import expr as ex
from ._linalg import SingularMatrixError, gauss_jordan_solve
from .geom import (
    DEFAULT_CHECK_TOL,
    DEFAULT_RANK_TOL,
    ManifoldChart,
    christoffel_at,
    gram_schmidt,
    inner,
    metric_at,
    norm,
)


class RankError(ValueError):
    """Jacobian rank differs from the declared or expected value."""


@dataclass(frozen=True)
class Tolerances:
    rank: float = DEFAULT_RANK_TOL
    check: float = DEFAULT_CHECK_TOL
    cluster: float = 1e-6
    angle: float = 1e-6
    drift: float = 1e-3


class MapScenario:
    """Map ``F: M -> N`` given by symbolic components in source coordinates.

    Parameters
    ----------
    source, target : ManifoldChart
    components : sequence of Expr or str
        ``F^a`` for each target coordinate.
    samples : sequence of m-vectors
    complex_structure : optional
        A :class:`clairmap.cstruct.ComplexStructure` on the target.
    potential : Expr or str, optional
        Clairaut potential ``g`` in target coordinates.
    rank : int, optional
        Declared rank; checked against every sample point.
    """

    def __init__(
        self,
        source: ManifoldChart,
        target: ManifoldChart,
        components: Sequence,
        samples: Sequence[Sequence[float]] = (),
        complex_structure: Any = None,
        potential=None,
        tolerances: Tolerances | None = None,
        name: str = "scenario",
        rank: int | None = None,
        options: dict | None = None,
    ):
        self.name = name
        self.source = source
        self.target = target
        comps = [ex.parse(c, source.coords) if isinstance(c, str) else c for c in components]
        if len(comps) != target.dim:
            raise ValueError(f"map has {len(comps)} components, target dimension is {target.dim}")
        for c in comps:
            extra = ex.variables(c) - set(source.coords)
            if extra:
                raise ValueError(f"map component uses non-source variables {sorted(extra)}")
        self.components = tuple(comps)
        self.complex_structure = complex_structure
        if isinstance(potential, str):
            potential = ex.parse(potential, target.coords)
        self.potential = potential
        self.tolerances = tolerances or Tolerances()
        self.options = dict(options or {})
        m = source.dim
        self._F = ex.CompiledBatch(self.components, source.coords)
        d1 = [[ex.derivative(c, v) for v in source.coords] for c in self.components]
        self._dF = ex.CompiledBatch([e for row in d1 for e in row], source.coords)
        d2 = [ex.derivative(d1[a][i], v) for a in range(target.dim) for i in range(m) for v in source.coords]
        self._d2F = ex.CompiledBatch(d2, source.coords)
        self.samples = [np.array(p, dtype=float) for p in samples]
        for p in self.samples:
            if p.shape != (m,):
                raise ValueError(f"sample point {list(p)} is not a {m}-vector")
        ranks = sorted({frame_split(self, p).rank for p in self.samples})
        if len(ranks) > 1:
            raise RankError(f"non-constant rank across sample points: {ranks}")
        self.rank = ranks[0] if ranks else rank
        if rank is not None and self.rank != rank:
            raise RankError(f"declared rank {rank} but Jacobian rank is {self.rank}")

    @property
    def m(self) -> int:
        return self.source.dim

    @property
    def n(self) -> int:
        return self.target.dim


@dataclass
class FrameSplit:
    """Orthonormal bases at ``p`` and ``F(p)``; vectors are the columns."""

    point: np.ndarray
    image: np.ndarray
    jacobian: np.ndarray
    G_M: np.ndarray
    G_N: np.ndarray
    kernel: np.ndarray
    horizontal: np.ndarray
    range: np.ndarray
    perp: np.ndarray

    @property
    def rank(self) -> int:
        return self.horizontal.shape[1]

    def project_range(self, w) -> np.ndarray:
        return self.range @ (self.range.T @ self.G_N @ np.asarray(w, dtype=float))

    def project_perp(self, w) -> np.ndarray:
        return self.perp @ (self.perp.T @ self.G_N @ np.asarray(w, dtype=float))

    def project_horizontal(self, x) -> np.ndarray:
        return self.horizontal @ (self.horizontal.T @ self.G_M @ np.asarray(x, dtype=float))

    def project_kernel(self, x) -> np.ndarray:
        return self.kernel @ (self.kernel.T @ self.G_M @ np.asarray(x, dtype=float))

    def pushforward(self, x) -> np.ndarray:
        return self.jacobian @ np.asarray(x, dtype=float)

    def horizontal_lift(self, w) -> np.ndarray:
        """Horizontal ``x`` with ``dF x`` closest to ``w`` in ``g_N``."""
        A = self.jacobian @ self.horizontal
        M = A.T @ self.G_N @ A
        rhs = A.T @ self.G_N @ np.asarray(w, dtype=float)
        return self.horizontal @ gauss_jordan_solve(M, rhs)


def _columns(vectors, dim) -> np.ndarray:
    return np.array(vectors, dtype=float).T if vectors else np.zeros((dim, 0))


def map_point(scn: MapScenario, p) -> np.ndarray:
    return np.array(scn._F(list(map(float, p))), dtype=float)


def jacobian_at(scn: MapScenario, p) -> np.ndarray:
    return np.array(scn._dF(list(map(float, p))), dtype=float).reshape(scn.n, scn.m)


def hessian_at(scn: MapScenario, p) -> np.ndarray:
    """``H[a, i, j] = d^2 F^a / dx^i dx^j``."""
    m = scn.m
    return np.array(scn._d2F(list(map(float, p))), dtype=float).reshape(scn.n, m, m)


def frame_split(scn: MapScenario, p, expected_rank: int | None = None) -> FrameSplit:
    """Split source and target tangent spaces at ``p``.

    The horizontal space is the ``g_M``-orthogonal complement of the
    kernel, which equals the column span of the adjoint
    ``G_M^{-1} dF^T G_N``; it is orthonormalized first and the kernel is
    taken as its complement.  Range and its complement are built in
    ``g_N`` from ``dF`` applied to the horizontal frame.
    """
    p = np.asarray(p, dtype=float)
    tol = scn.tolerances.rank
    q = map_point(scn, p)
    J = jacobian_at(scn, p)
    G_M = metric_at(scn.source, p)
    G_N = metric_at(scn.target, q)
    if scn.source.diagonal_metric:
        adj = (J.T @ G_N) / np.diag(G_M)[:, None]
    else:
        adj = gauss_jordan_solve(G_M, J.T @ G_N)
    horiz, _ = gram_schmidt(G_M, list(adj.T), tol)
    rest, _ = gram_schmidt(G_M, horiz + list(np.eye(scn.m)), tol)
    kernel = rest[len(horiz):]
    for k in kernel:
        if norm(G_N, J @ k) >= tol:
            raise RankError(f"kernel vector {k} has image norm {norm(G_N, J @ k):.3e}")
    rng, _ = gram_schmidt(G_N, [J @ h for h in horiz], tol)
    if len(rng) != len(horiz):
        raise RankError("pushforward of the horizontal frame lost rank")
    rest, _ = gram_schmidt(G_N, rng + list(np.eye(scn.n)), tol)
    perp = rest[len(rng):]
    r = len(horiz)
    if expected_rank is not None and r != expected_rank:
        raise RankError(f"rank {r} at {list(p)}, expected {expected_rank}")
    return FrameSplit(
        p, q, J, G_M, G_N,
        _columns(kernel, scn.m), _columns(horiz, scn.m),
        _columns(rng, scn.n), _columns(perp, scn.n),
    )


def is_riemannian_map(scn: MapScenario, p, fs: FrameSplit | None = None) -> tuple[bool, float]:
    fs = fs or frame_split(scn, p)
    A = fs.jacobian @ fs.horizontal
    lhs = A.T @ fs.G_N @ A
    rhs = fs.horizontal.T @ fs.G_M @ fs.horizontal
    resid = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    return resid < scn.tolerances.check, resid


def sff_tensor(scn: MapScenario, p) -> np.ndarray:
    """``T[a, i, j]`` with ``SFF(X, Y)^a = T[a, i, j] X^i Y^j``."""
    p = np.asarray(p, dtype=float)
    q = map_point(scn, p)
    J = jacobian_at(scn, p)
    T = hessian_at(scn, p)
    T = T + np.einsum("abc,bi,cj->aij", christoffel_at(scn.target, q), J, J)
    T = T - np.einsum("ak,kij->aij", J, christoffel_at(scn.source, p))
    return 0.5 * (T + np.transpose(T, (0, 2, 1)))


def second_fundamental_form(scn: MapScenario, p, X, Y) -> np.ndarray:
    return np.einsum("aij,i,j->a", sff_tensor(scn, p), np.asarray(X, float), np.asarray(Y, float))


def shape_operator(scn: MapScenario, p, V, FX, fs: FrameSplit | None = None) -> np.ndarray:
    """Range vector ``S_V F_*X`` defined by Weingarten duality."""
    fs = fs or frame_split(scn, p)
    T = sff_tensor(scn, p)
    X = fs.horizontal_lift(FX)
    V = np.asarray(V, dtype=float)
    H = fs.horizontal
    rhs = np.array([inner(fs.G_N, np.einsum("aij,i,j->a", T, X, H[:, j]), V) for j in range(fs.rank)])
    M = (fs.jacobian @ H).T @ fs.G_N @ fs.range
    try:
        c = gauss_jordan_solve(M, rhs)
    except SingularMatrixError as exc:
        raise ArithmeticError(f"Weingarten Gram system singular: {exc}") from None
    return fs.range @ c


def _field_exprs(chart: ManifoldChart, field_) -> list:
    comps = [ex.parse(c, chart.coords) if isinstance(c, str) else c for c in field_]
    if len(comps) != chart.dim:
        raise ValueError("field has wrong number of components")
    return comps


def target_covariant_derivative(scn: MapScenario, p, direction, Vfield) -> np.ndarray:
    """``nabla^N_w V`` at ``F(p)`` for a symbolic target field and ``w = direction``."""
    comps = _field_exprs(scn.target, Vfield)
    q = map_point(scn, p)
    binding = dict(zip(scn.target.coords, q))
    V = np.array([ex.evaluate(c, binding) for c in comps])
    D = np.array([[ex.evaluate(ex.derivative(c, y), binding) for y in scn.target.coords] for c in comps])
    w = np.asarray(direction, dtype=float)
    return D @ w + np.einsum("kij,i,j->k", christoffel_at(scn.target, q), w, V)


def normal_connection(scn: MapScenario, p, X, Vfield, fs: FrameSplit | None = None) -> np.ndarray:
    """Perp projection of ``nabla^N_{F_*X} V``."""
    fs = fs or frame_split(scn, p)
    comps = _field_exprs(scn.target, Vfield)
    V = np.array([ex.evaluate(c, dict(zip(scn.target.coords, fs.image))) for c in comps])
    off = norm(fs.G_N, fs.project_range(V))
    if off > scn.tolerances.check * max(1.0, norm(fs.G_N, V)):
        raise ValueError(f"field is not normal to the range at F(p) (range part {off:.3e})")
    return fs.project_perp(target_covariant_derivative(scn, p, fs.pushforward(X), comps))


def mean_curvature(scn: MapScenario, p, fs: FrameSplit | None = None) -> np.ndarray:
    fs = fs or frame_split(scn, p)
    if fs.rank == 0:
        return np.zeros(scn.n)
    T = sff_tensor(scn, p)
    H = fs.horizontal
    return sum(np.einsum("aij,i,j->a", T, H[:, i], H[:, i]) for i in range(fs.rank)) / fs.rank


def is_umbilical(scn: MapScenario, p, fs: FrameSplit | None = None) -> tuple[bool, float]:
    fs = fs or frame_split(scn, p)
    T = sff_tensor(scn, p)
    Hv = mean_curvature(scn, p, fs)
    X = fs.horizontal
    resid = 0.0
    for i in range(fs.rank):
        for j in range(fs.rank):
            s = np.einsum("aij,i,j->a", T, X[:, i], X[:, j]) - (Hv if i == j else 0.0)
            resid = max(resid, norm(fs.G_N, s))
    return resid < scn.tolerances.check, resid


def tension_field(scn: MapScenario, p, fs: FrameSplit | None = None) -> np.ndarray:
    fs = fs or frame_split(scn, p)
    T = sff_tensor(scn, p)
    E = np.hstack([fs.kernel, fs.horizontal])
    return np.einsum("aij,ie,je->a", T, E, E)


def sff_component_matrix(scn: MapScenario, p, fs: FrameSplit | None = None) -> np.ndarray:
    """``B[alpha, i, j] = g_N(SFF(e_i, e_j), V_alpha)`` in the adapted frames."""
    fs = fs or frame_split(scn, p)
    T = sff_tensor(scn, p)
    S = np.einsum("aij,ie,jf->aef", T, fs.horizontal, fs.horizontal)
    return np.einsum("ak,ab,bef->kef", fs.perp, fs.G_N, S)


def sff_squared_norm(scn: MapScenario, p, fs: FrameSplit | None = None) -> float:
    """Frame-free ``sum_ij |SFF(e_i, e_j)|^2`` over the horizontal frame."""
    fs = fs or frame_split(scn, p)
    T = sff_tensor(scn, p)
    total = 0.0
    for i in range(fs.rank):
        for j in range(fs.rank):
            s = np.einsum("aij,i,j->a", T, fs.horizontal[:, i], fs.horizontal[:, j])
            total += inner(fs.G_N, s, s)
    return total


def perp_totally_geodesic_residual(scn: MapScenario, p, fs: FrameSplit | None = None) -> float:
    """Range part of ``nabla^N_V W`` for perp fields frozen in coordinates.

    Uses the orthonormal perp frame at ``F(p)`` extended as
    coordinate-constant fields, so only the Christoffel term contributes.
    """
    fs = fs or frame_split(scn, p)
    Gam = christoffel_at(scn.target, fs.image)
    worst = 0.0
    for a in range(fs.perp.shape[1]):
        for b in range(fs.perp.shape[1]):
            w = np.einsum("kij,i,j->k", Gam, fs.perp[:, a], fs.perp[:, b])
            worst = max(worst, norm(fs.G_N, fs.project_range(w)))
    return worst
