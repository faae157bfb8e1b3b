"""Single-chart Riemannian geometry: metric, Christoffel symbols, geodesics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import expr as ex
from ._linalg import SingularMatrixError, cholesky_ok, gauss_jordan_inverse, jacobi_eigh

DEFAULT_RANK_TOL = 1e-8
DEFAULT_CHECK_TOL = 1e-8


class MetricError(ArithmeticError):
    """Metric is not symmetric positive definite at a point."""

    def __init__(self, message: str, smallest_eigenvalue: float | None = None):
        super().__init__(message)
        self.smallest_eigenvalue = smallest_eigenvalue


class ManifoldChart:
    """A manifold covered by one global chart with a symbolic metric.

    Parameters
    ----------
    name : str
    coords : sequence of str
        Coordinate names, ``2 <= n <= 16`` is the supported range but
        ``n = 1`` is accepted for line targets.
    metric : n x n nested sequence of Expr or str
        Metric components; strings are parsed over ``coords``.
    """

    def __init__(self, name: str, coords: Sequence[str], metric):
        self.name = name
        self.coords = tuple(coords)
        n = len(self.coords)
        if not 1 <= n <= 16:
            raise ValueError(f"chart {name!r}: dimension {n} outside 1..16")
        if len(set(self.coords)) != n:
            raise ValueError(f"chart {name!r}: duplicate coordinate names")
        rows = [[ex.parse(c, self.coords) if isinstance(c, str) else c for c in row] for row in metric]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"chart {name!r}: metric must be {n}x{n}")
        self.metric = tuple(tuple(r) for r in rows)
        flat = [self.metric[i][j] for i in range(n) for j in range(n)]
        self._g = ex.CompiledBatch(flat, self.coords)
        dflat = [ex.derivative(e, c) for c in self.coords for e in flat]
        self._dg_index = np.array([k for k, e in enumerate(dflat) if not (isinstance(e, ex.Const) and e.value == 0.0)], dtype=int)
        self._dg = ex.CompiledBatch([dflat[k] for k in self._dg_index], self.coords)
        self.constant_metric = all(isinstance(e, ex.Const) for e in flat)
        self.diagonal_metric = all(
            isinstance(self.metric[i][j], ex.Const) and self.metric[i][j].value == 0.0
            for i in range(n)
            for j in range(n)
            if i != j
        )
        self._gamma_index = None
        if self.diagonal_metric and not self.constant_metric:
            # closed form for diagonal metrics: Gamma^k_ij = (d_i g_jk + d_j g_ik - d_k g_ij) / (2 g_kk)
            entries, index = [], []
            for k in range(n):
                for i in range(n):
                    for j in range(n):
                        num = ex.ZERO
                        if j == k:
                            num = ex.add(num, ex.derivative(self.metric[k][k], self.coords[i]))
                        if i == k:
                            num = ex.add(num, ex.derivative(self.metric[k][k], self.coords[j]))
                        if i == j:
                            num = ex.sub(num, ex.derivative(self.metric[i][i], self.coords[k]))
                        if isinstance(num, ex.Const) and num.value == 0.0:
                            continue
                        entries.append(ex.div(num, ex.mul(ex.const(2.0), self.metric[k][k])))
                        index.append((k * n + i) * n + j)
            self._gamma_index = np.array(index, dtype=int)
            self._gamma = ex.CompiledBatch(entries, self.coords)
            vel = [f"__v{i}" for i in range(n)]
            acc = [ex.ZERO] * n
            for e, flat_idx in zip(entries, index):
                k, rem = divmod(flat_idx, n * n)
                i, j = divmod(rem, n)
                acc[k] = ex.sub(acc[k], ex.mul(e, ex.mul(ex.Var(vel[i]), ex.Var(vel[j]))))
            self._accel = ex.CompiledBatch(acc, self.coords + tuple(vel))

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __repr__(self) -> str:
        return f"ManifoldChart({self.name!r}, dim={self.dim})"


@dataclass
class Curve:
    """Uniformly sampled curve; ``error`` is set when integration stopped early."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    h: float
    chart: ManifoldChart
    error: str | None = None

    def __len__(self) -> int:
        return len(self.t)


def metric_at(chart: ManifoldChart, p, check: bool = True) -> np.ndarray:
    n = chart.dim
    G = np.array(chart._g(list(map(float, p))), dtype=float).reshape(n, n)
    if not np.all(np.isfinite(G)):
        raise MetricError(f"non-finite metric on {chart.name!r} at {list(p)}")
    if check and chart.diagonal_metric:
        d = np.diag(G)
        if np.min(d) <= 1e-10:
            lam = float(np.min(d))
            raise MetricError(
                f"metric on {chart.name!r} not positive definite at {list(p)} (smallest eigenvalue {lam:.3e})",
                lam,
            )
    elif check:
        if np.max(np.abs(G - G.T)) > 1e-12 * max(1.0, np.max(np.abs(G))):
            raise MetricError(f"metric on {chart.name!r} not symmetric at {list(p)}")
        lam = 1.0 if cholesky_ok(G) else smallest_eigenvalue(G)
        if lam <= 1e-10:
            raise MetricError(
                f"metric on {chart.name!r} not positive definite at {list(p)} (smallest eigenvalue {lam:.3e})",
                lam,
            )
    return G


def smallest_eigenvalue(G) -> float:
    w, _ = jacobi_eigh(G)
    return float(w[-1])


def inverse_metric_at(chart: ManifoldChart, p) -> np.ndarray:
    G = metric_at(chart, p)
    if chart.diagonal_metric:
        return np.diag(1.0 / np.diag(G))
    try:
        return gauss_jordan_inverse(G)
    except SingularMatrixError as exc:
        raise MetricError(str(exc)) from None


def metric_derivatives_at(chart: ManifoldChart, p) -> np.ndarray:
    """Array ``D[l, i, j] = d g_ij / d x^l``."""
    n = chart.dim
    D = np.zeros(n * n * n)
    if len(chart._dg_index):
        D[chart._dg_index] = chart._dg(list(map(float, p)))
    return D.reshape(n, n, n)


def christoffel_at(chart: ManifoldChart, p) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` of the Levi-Civita connection."""
    n = chart.dim
    if chart.constant_metric:
        return np.zeros((n, n, n))
    if chart._gamma_index is not None:
        metric_at(chart, p)
        out = np.zeros(n * n * n)
        out[chart._gamma_index] = chart._gamma(list(map(float, p)))
        return out.reshape(n, n, n)
    Ginv = inverse_metric_at(chart, p)
    D = metric_derivatives_at(chart, p)
    # lowered symbols Gamma_{l,ij} = (d_i g_jl + d_j g_il - d_l g_ij) / 2
    low = 0.5 * (np.transpose(D, (2, 0, 1)) + np.transpose(D, (2, 1, 0)) - D)
    low = 0.5 * (low + np.transpose(low, (0, 2, 1)))
    return np.einsum("kl,lij->kij", Ginv, low)


def inner(G, u, v) -> float:
    return float(np.asarray(u) @ G @ np.asarray(v))


def norm(G, u) -> float:
    return math.sqrt(max(inner(G, u, u), 0.0))


def covariant_derivative_at(chart: ManifoldChart, p, Yfield, X) -> np.ndarray:
    """``(nabla_X Y)^k = X^i d_i Y^k + Gamma^k_ij X^i Y^j`` for a symbolic field."""
    comps = [ex.parse(c, chart.coords) if isinstance(c, str) else c for c in Yfield]
    if len(comps) != chart.dim:
        raise ValueError("field has wrong number of components")
    binding = dict(zip(chart.coords, map(float, p)))
    X = np.asarray(X, dtype=float)
    Y = np.array([ex.evaluate(c, binding) for c in comps])
    J = np.array([[ex.evaluate(ex.derivative(c, v), binding) for v in chart.coords] for c in comps])
    return J @ X + np.einsum("kij,i,j->k", christoffel_at(chart, p), X, Y)


def geodesic_rhs(chart: ManifoldChart, x, v) -> np.ndarray:
    if chart._gamma_index is not None:
        return np.array(chart._accel([*map(float, x), *map(float, v)]))
    return -np.einsum("kij,i,j->k", christoffel_at(chart, x), v, v)


def geodesic_integrate(chart: ManifoldChart, p0, v0, steps: int, h: float) -> Curve:
    """Integrate the geodesic equation with classical fixed-step RK4.

    On metric failure or a non-finite state the samples computed so far
    are returned with ``error`` set.
    """
    n = chart.dim
    x = np.array(p0, dtype=float)
    v = np.array(v0, dtype=float)
    if x.shape != (n,) or v.shape != (n,):
        raise ValueError(f"seed must have {n} components")
    ts = [0.0]
    xs = [x.copy()]
    vs = [v.copy()]
    error = None
    try:
        metric_at(chart, x)
    except (MetricError, ex.DomainError) as exc:
        return Curve(np.array(ts), np.array(xs), np.array(vs), float(h), chart, f"invalid seed point: {exc}")
    for k in range(int(steps)):
        try:
            k1x, k1v = v, geodesic_rhs(chart, x, v)
            x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
            k2x, k2v = v2, geodesic_rhs(chart, x2, v2)
            x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
            k3x, k3v = v3, geodesic_rhs(chart, x3, v3)
            x4, v4 = x + h * k3x, v + h * k3v
            k4x, k4v = v4, geodesic_rhs(chart, x4, v4)
        except (MetricError, ex.DomainError, FloatingPointError) as exc:
            error = f"integration stopped at t={ts[-1]!r}: {exc}"
            break
        xn = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        vn = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(vn))):
            error = f"non-finite state after t={ts[-1]!r}"
            break
        try:
            metric_at(chart, xn)
        except (MetricError, ex.DomainError) as exc:
            error = f"integration stopped at t={ts[-1]!r}: {exc}"
            break
        x, v = xn, vn
        ts.append((k + 1) * h)
        xs.append(x.copy())
        vs.append(v.copy())
    return Curve(np.array(ts), np.array(xs), np.array(vs), float(h), chart, error)


def speed_drift(curve: Curve) -> float:
    """Max relative change of ``g(v, v)`` along a curve."""
    s0 = None
    worst = 0.0
    for x, v in zip(curve.points, curve.velocities):
        s = inner(metric_at(curve.chart, x, check=False), v, v)
        if s0 is None:
            s0 = s
            continue
        worst = max(worst, abs(s - s0) / max(abs(s0), 1e-300))
    return worst


def gram_schmidt(G, vectors, rank_tol: float = DEFAULT_RANK_TOL):
    """Orthonormalize ``vectors`` in the inner product ``G``.

    Uses classical Gram-Schmidt with one re-orthogonalization pass.

    Returns
    -------
    kept : list of ndarray
        ``G``-orthonormal vectors spanning the input span.
    dropped : list of int
        Indices of inputs whose residual norm fell below ``rank_tol``.
    """
    G = np.asarray(G, dtype=float)
    n = G.shape[0]
    vecs = [np.array(v, dtype=float) for v in vectors]
    K = np.zeros((max(len(vecs), 1), n))
    KG = np.zeros_like(K)
    k = 0
    dropped: list[int] = []
    for idx, w in enumerate(vecs):
        if k:
            w = w - K[:k].T @ (KG[:k] @ w)
            w = w - K[:k].T @ (KG[:k] @ w)
        nw = math.sqrt(max(float(w @ G @ w), 0.0))
        if nw < rank_tol:
            dropped.append(idx)
            continue
        K[k] = w / nw
        KG[k] = K[k] @ G
        k += 1
    return list(K[:k]), dropped
