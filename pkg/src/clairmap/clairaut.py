"""Clairaut certificates, potential fitting and relation checks along geodesics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from ._linalg import SingularMatrixError, gauss_jordan_solve, jacobi_eigh
from .geom import Curve, geodesic_integrate, inverse_metric_at, metric_at, norm
from .rmap import (
    FrameSplit,
    MapScenario,
    frame_split,
    is_riemannian_map,
    is_umbilical,
    jacobian_at,
    map_point,
    mean_curvature,
)

GN_MAX_ITER = 25
GN_STEP_TOL = 1e-12
INVERSION_TOL = 1e-8


class InversionError(ArithmeticError):
    pass


def potential_gradient(scn: MapScenario, g: ex.Expr, q) -> np.ndarray:
    """``grad g = G_N^{-1} dg`` at a target point."""
    binding = dict(zip(scn.target.coords, map(float, q)))
    dg = np.array([ex.evaluate(ex.derivative(g, y), binding) for y in scn.target.coords])
    return inverse_metric_at(scn.target, q) @ dg


def check_potential(scn: MapScenario, g, p, fs: FrameSplit | None = None) -> tuple[float, float]:
    """Return ``(umbilical_residual, gradient_residual)`` at ``p``."""
    if isinstance(g, str):
        g = ex.parse(g, scn.target.coords)
    fs = fs or frame_split(scn, p)
    _, umb = is_umbilical(scn, p, fs)
    H = mean_curvature(scn, p, fs)
    grad = potential_gradient(scn, g, fs.image)
    return umb, norm(fs.G_N, H + grad)


@dataclass
class PotentialFit:
    coefficients: np.ndarray
    constant: float
    residuals: list
    degenerate: list = field(default_factory=list)

    def expression(self, coords) -> ex.Expr:
        e: ex.Expr = ex.const(self.constant)
        for c, y in zip(self.coefficients, coords):
            e = ex.add(e, ex.mul(ex.const(float(c)), ex.var(y)))
        return e


def fit_potential(scn: MapScenario, points=None) -> PotentialFit:
    """Least-squares affine potential with ``G_N^{-1} c = -H`` over points."""
    points = list(scn.samples if points is None else points)
    if len(points) < 2:
        raise ValueError("fitting needs at least two points")
    n = scn.n
    rows, rhs, frames = [], [], []
    for p in points:
        fs = frame_split(scn, p)
        frames.append(fs)
        rows.append(inverse_metric_at(scn.target, fs.image))
        rhs.append(-mean_curvature(scn, p, fs))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    N = A.T @ A
    w, V = jacobi_eigh(N)
    scale = max(float(w[0]), 1e-300)
    degenerate = [V[:, k] for k in range(n) if w[k] <= 1e-12 * scale]
    try:
        c = gauss_jordan_solve(N, A.T @ b)
    except SingularMatrixError:
        c = sum((V[:, k] * (V[:, k] @ (A.T @ b)) / w[k] for k in range(n) if w[k] > 1e-12 * scale), np.zeros(n))
    residuals = []
    for fs, Ginv, h in zip(frames, rows, rhs):
        residuals.append(norm(fs.G_N, Ginv @ c - h))
    c = np.where(np.abs(c) < 1e-14, 0.0, c)
    return PotentialFit(c, 0.0, residuals, degenerate)


@dataclass
class ClairautCertificate:
    source: str  # supplied | fitted | constant
    potential: ex.Expr
    umbilical: list
    gradient: list
    riemannian: list
    relation_drift: float | None = None
    tol: float = 1e-8

    @property
    def umbilical_residual(self) -> float:
        return max(self.umbilical, default=0.0)

    @property
    def gradient_residual(self) -> float:
        return max(self.gradient, default=0.0)

    @property
    def verdict(self) -> bool:
        return (
            all(self.riemannian)
            and self.umbilical_residual < self.tol
            and self.gradient_residual < self.tol
        )


def certify(scn: MapScenario, potential=None, points=None) -> ClairautCertificate:
    """Clairaut certificate with a supplied potential or a fitted affine one."""
    points = list(scn.samples if points is None else points)
    if isinstance(potential, str):
        potential = ex.parse(potential, scn.target.coords)
    if potential is not None:
        source, g = "supplied", potential
    else:
        fit = fit_potential(scn, points)
        g = fit.expression(scn.target.coords)
        source = "constant" if not np.any(fit.coefficients) else "fitted"
    umb, grad, riem = [], [], []
    for p in points:
        fs = frame_split(scn, p)
        riem.append(is_riemannian_map(scn, p, fs)[0])
        u, gr = check_potential(scn, g, p, fs)
        umb.append(u)
        grad.append(gr)
    return ClairautCertificate(source, g, umb, grad, riem, tol=scn.tolerances.check)


def curve_angle(fs: FrameSplit, w) -> float:
    """``psi`` in ``[0, pi/2]`` with ``sin psi`` the range fraction of ``w``."""
    w = np.asarray(w, dtype=float)
    nw = norm(fs.G_N, w)
    if nw == 0.0:
        raise ValueError("curve angle of a zero vector")
    s = norm(fs.G_N, fs.project_range(w)) / nw
    return math.asin(min(max(s, 0.0), 1.0))


def preimage(scn: MapScenario, q, seed) -> tuple[np.ndarray, float]:
    """Gauss-Newton for ``F(p) = q`` using minimum-norm least-squares steps."""
    p = np.array(seed, dtype=float)
    q = np.asarray(q, dtype=float)
    for _ in range(GN_MAX_ITER):
        step = np.linalg.lstsq(jacobian_at(scn, p), q - map_point(scn, p), rcond=None)[0]
        p = p + step
        if float(np.linalg.norm(step)) < GN_STEP_TOL:
            break
    res = float(np.linalg.norm(map_point(scn, p) - q))
    return p, res


@dataclass
class RelationTrace:
    t: list
    psi: list
    product: list
    drift: float
    side: str
    error: str | None = None
    curve: Curve | None = None
    last_good_t: float | None = None


def _drift(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return 0.0
    return float((v.max() - v.min()) / max(abs(v.mean()), 1e-300))


def _stations(n: int, stride: int):
    last = n - 1
    return [k for k in range(n) if k % stride == 0 or k == last]


def clairaut_relation_check(scn: MapScenario, g, p0, w0, steps: int, h: float, stride: int = 1) -> RelationTrace:
    """Track ``e^{g(beta)} sin psi`` along the target geodesic from ``(F(p0), w0)``.

    The curve is integrated with every step; the relation is sampled
    every ``stride`` steps and at the final step.
    """
    if isinstance(g, str):
        g = ex.parse(g, scn.target.coords)
    q0 = map_point(scn, p0)
    curve = geodesic_integrate(scn.target, q0, w0, steps, h)
    gfun = ex.CompiledBatch([g], scn.target.coords)
    ts, psis, prods = [], [], []
    p = np.array(p0, dtype=float)
    error = curve.error
    for k in _stations(len(curve), max(int(stride), 1)):
        t, q, w = curve.t[k], curve.points[k], curve.velocities[k]
        p_new, res = preimage(scn, q, p)
        if not res <= INVERSION_TOL:
            error = f"curve left image at t={float(t)!r} (inversion residual {res:.3e}); last good t={ts[-1] if ts else None!r}"
            break
        p = p_new
        fs = frame_split(scn, p)
        psi = curve_angle(fs, w)
        ts.append(float(t))
        psis.append(psi)
        prods.append(math.exp(gfun(q)[0]) * math.sin(psi))
    return RelationTrace(ts, psis, prods, _drift(prods), "target", error, curve, ts[-1] if ts else None)


def _kernel_fraction(scn: MapScenario, x, q, v) -> float:
    """``|kernel part of v| / |v|`` in ``g_M``.

    The horizontal space is the column span of ``G_M^{-1} dF^T G_N``; the
    ``g_M``-orthogonal projection onto it is a least-squares problem in
    the Cholesky-whitened coordinates.
    """
    G = metric_at(scn.source, x)
    A = np.linalg.solve(G, jacobian_at(scn, x).T @ metric_at(scn.target, q))
    L = np.linalg.cholesky(G)
    c = np.linalg.lstsq(L.T @ A, L.T @ v, rcond=None)[0]
    nv = norm(G, v)
    if nv == 0.0:
        return 0.0
    return min(norm(G, v - A @ c) / nv, 1.0)


def source_relation_check(scn: MapScenario, g, p0, v0, steps: int, h: float, stride: int = 1) -> RelationTrace:
    """Track ``e^{g(F(alpha))} sin psi`` along a source geodesic.

    Here ``sin psi`` is the kernel (vertical) fraction of the velocity,
    the convention for maps whose fibres carry the Clairaut relation.
    """
    if isinstance(g, str):
        g = ex.parse(g, scn.target.coords)
    curve = geodesic_integrate(scn.source, p0, v0, steps, h)
    gfun = ex.CompiledBatch([g], scn.target.coords)
    ts, psis, prods = [], [], []
    for k in _stations(len(curve), max(int(stride), 1)):
        t, x, v = curve.t[k], curve.points[k], curve.velocities[k]
        q = map_point(scn, x)
        s = _kernel_fraction(scn, x, q, v)
        ts.append(float(t))
        psis.append(math.asin(s))
        prods.append(math.exp(gfun(q)[0]) * s)
    return RelationTrace(ts, psis, prods, _drift(prods), "source", curve.error, curve, ts[-1] if ts else None)
