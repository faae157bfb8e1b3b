"""Catalog of tensor identities for semi-slant and hemi-slant maps.

Every identity is evaluated twice: once as the long expression assembled
from ``phi, omega, B, C``, shape operators, normal connections and
pushforwards (the *expression side*), and once through an independent
direct quantity such as the second fundamental form, a pushforward
bracket or the acceleration of an image curve (the *direct side*).  The
reported residual is the discrepancy between the two.

Vector fields needed for derivatives are built as follows.

* A vector ``X`` at ``p`` tangent to a distribution ``D`` of the range is
  extended by projecting the constant coordinate vector ``F_* X`` onto
  ``D`` at nearby points and lifting horizontally (``D-extension``).
* A normal vector ``V`` is extended along ``F`` by normal projection.
* Derivatives along a normal direction ``V`` off the image use the
  coordinate-constant extension in the target chart.
* Curve identities differentiate fields along the source geodesic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import expr as ex
from ._linalg import gauss_jordan_solve
from .clairaut import certify, fit_potential, potential_gradient
from .cstruct import ComplexStructure
from .geom import christoffel_at, geodesic_integrate, inner, norm
from .rmap import MapScenario, frame_split, jacobian_at, map_point, sff_tensor
from .slant import Classification, classify, decompose_J, slant_spectrum

POINT_TOL = 1e-6
CURVE_TOL = 1e-5
FD_EPS = 1e-5
CURVE_DELTA = 1e-4


class IdentityError(ValueError):
    pass


class UnknownIdentityError(IdentityError):
    pass


@dataclass
class IdentityResult:
    name: str
    description: str
    residual: float
    tol: float
    expression: float = 0.0
    direct: float = 0.0
    terms: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    hypotheses: dict = field(default_factory=dict)
    status: str = "pass"
    general: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class Context:
    """Inputs for identity evaluation; unset entries get defaults."""

    point: np.ndarray | None = None
    X: np.ndarray | None = None
    Y: np.ndarray | None = None
    Z: np.ndarray | None = None
    V: np.ndarray | None = None
    seed_point: np.ndarray | None = None
    seed_velocity: np.ndarray | None = None
    steps: int = 400
    h: float = 1e-3
    samples: int = 5
    potential: ex.Expr | None = None


class _Local:
    """Pointwise operators at a source point."""

    def __init__(self, ev: "Evaluator", x):
        scn = ev.scn
        self.x = np.asarray(x, dtype=float)
        fs = frame_split(scn, self.x)
        self.fs = fs
        ops = decompose_J(scn, ev.J, self.x, fs)
        G = fs.G_N
        self.G = G
        self.Jm = ops.J
        self.Pr = fs.range @ fs.range.T @ G
        self.Pp = fs.perp @ fs.perp.T @ G
        self.phi = self.Pr @ ops.J @ self.Pr
        self.omega = self.Pp @ ops.J @ self.Pr
        self.B = self.Pr @ ops.J @ self.Pp
        self.C = self.Pp @ ops.J @ self.Pp
        spec = slant_spectrum(ops, scn.tolerances.cluster)
        n = scn.n
        self.proj = {"invariant": np.zeros((n, n)), "slant": np.zeros((n, n)), "anti-invariant": np.zeros((n, n))}
        self.cos2 = None
        for c in spec.clusters:
            kind = c.classify(scn.tolerances.cluster)
            self.proj[kind] = self.proj[kind] + c.basis @ c.basis.T @ G
            if kind == "slant":
                self.cos2 = c.lam
        self.T = sff_tensor(scn, self.x)
        self.GamN = christoffel_at(scn.target, fs.image)
        self.GamM = christoffel_at(scn.source, self.x)
        self.grad = potential_gradient(scn, ev.g, fs.image) if ev.g is not None else np.zeros(n)

    def push(self, X):
        return self.fs.jacobian @ X

    def lift(self, w):
        return self.fs.horizontal_lift(w)

    def sff(self, X, Y):
        return np.einsum("aij,i,j->a", self.T, X, Y)

    def shape(self, V, FX):
        """Range vector ``S_V F_* X`` by Weingarten duality."""
        X = self.lift(FX)
        H = self.fs.horizontal
        rhs = np.array([inner(self.G, self.sff(X, H[:, j]), V) for j in range(H.shape[1])])
        M = (self.fs.jacobian @ H).T @ self.G @ self.fs.range
        return self.fs.range @ gauss_jordan_solve(M, rhs)

    def dg(self, w) -> float:
        return inner(self.G, self.grad, w)

    def g(self, u, v) -> float:
        return inner(self.G, u, v)


class Evaluator:
    """Shared machinery for evaluating catalog identities on a scenario."""

    def __init__(self, scn: MapScenario, J: ComplexStructure, g: ex.Expr | None = None, cls: Classification | None = None):
        self.scn = scn
        self.J = J
        self.g = g
        self.cls = cls or classify(scn, J)
        self._cache: dict = {}

    def at(self, x) -> _Local:
        key = tuple(np.round(np.asarray(x, dtype=float), 15))
        loc = self._cache.get(key)
        if loc is None:
            if len(self._cache) > 4096:
                self._cache.clear()
            loc = _Local(self, x)
            self._cache[key] = loc
        return loc

    # -- fields ---------------------------------------------------------
    def extend(self, kind: str, x0, X0) -> Callable:
        """``D``-extension of a horizontal vector as a source field."""
        c = self.at(x0).push(X0)

        def fieldfn(x):
            loc = self.at(x)
            P = loc.Pr if kind == "range" else loc.proj[kind]
            return loc.lift(P @ c)

        return fieldfn

    def normal_extension(self, V0) -> Callable:
        V0 = np.asarray(V0, dtype=float)
        return lambda x: self.at(x).Pp @ V0

    # -- derivatives ----------------------------------------------------
    def directional(self, f: Callable, x, X):
        X = np.asarray(X, dtype=float)
        scale = max(float(np.max(np.abs(X))), 1e-300)
        h = FD_EPS / scale
        return (np.asarray(f(x + h * X)) - np.asarray(f(x - h * X))) / (2 * h)

    def nabla_M(self, Yf: Callable, x, X):
        loc = self.at(x)
        return self.directional(Yf, x, X) + np.einsum("kij,i,j->k", loc.GamM, X, Yf(x))

    def nabla_NF(self, Wf: Callable, x, X):
        """Pullback connection ``nabla^{N_F}_X W`` for a section along ``F``."""
        loc = self.at(x)
        return self.directional(Wf, x, X) + np.einsum("kij,i,j->k", loc.GamN, loc.push(X), Wf(x))

    def nabla_perp(self, Wf: Callable, x, X):
        return self.at(x).Pp @ self.nabla_NF(Wf, x, X)

    def nabla_N_const(self, x, V, W):
        """``nabla^N_V W`` with ``W`` frozen in target coordinates."""
        return np.einsum("kij,i,j->k", self.at(x).GamN, V, W)

    def push_field(self, Yf: Callable) -> Callable:
        return lambda x: self.at(x).push(Yf(x))


# ---------------------------------------------------------------------------
# context defaults

def _unit(loc: _Local, w):
    nw = norm(loc.G, w)
    return w / nw if nw > 0 else w


def _cluster_vectors(loc: _Local, kind: str) -> list:
    P = loc.proj[kind]
    vecs = []
    for k in range(loc.fs.range.shape[1]):
        w = P @ loc.fs.range[:, k]
        if norm(loc.G, w) > 1e-8:
            vecs.append(w)
    out = []
    for w in vecs:
        for u in out:
            w = w - loc.g(u, w) * u
        if norm(loc.G, w) > 1e-8:
            out.append(_unit(loc, w))
    return out


def _pick(loc: _Local, kind: str, which: int):
    """Deterministic unit range vector in a distribution (source lift)."""
    vecs = _cluster_vectors(loc, kind)
    if not vecs:
        raise IdentityError(f"distribution {kind!r} is empty at this point")
    if which == 0:
        w = sum(vecs)
    else:
        w = sum((-1) ** k * (k + 1) * v for k, v in enumerate(vecs))
    return loc.lift(_unit(loc, w))


def _default_perp(loc: _Local):
    P = loc.fs.perp
    if P.shape[1] == 0:
        raise IdentityError("range has no normal complement")
    return _unit(loc, P @ np.arange(1.0, P.shape[1] + 1.0))


# ---------------------------------------------------------------------------
# curve identities

def _curve_states(ev: Evaluator, ctx: Context):
    scn = ev.scn
    p0 = ctx.seed_point if ctx.seed_point is not None else scn.samples[0]
    if ctx.seed_velocity is not None:
        v0 = np.asarray(ctx.seed_velocity, dtype=float)
    else:
        loc = ev.at(p0)
        v0 = loc.fs.horizontal @ np.ones(loc.fs.rank) / math.sqrt(loc.fs.rank)
    curve = geodesic_integrate(scn.source, p0, v0, ctx.steps, ctx.h)
    if curve.error:
        raise IdentityError(curve.error)
    idx = np.unique(np.linspace(0, len(curve) - 1, max(ctx.samples, 1)).astype(int))
    return curve, [(float(curve.t[i]), curve.points[i], curve.velocities[i]) for i in idx]


def _shift(ev: Evaluator, x, v, d):
    c = geodesic_integrate(ev.scn.source, x, v, 1, d)
    return c.points[-1], c.velocities[-1]


def _along(ev: Evaluator, f: Callable, x, v):
    xp, vp = _shift(ev, x, v, CURVE_DELTA)
    xm, vm = _shift(ev, x, v, -CURVE_DELTA)
    return (np.asarray(f(xp, vp)) - np.asarray(f(xm, vm))) / (2 * CURVE_DELTA)


def _geodesic_terms(ev: Evaluator, x, v, hemi: bool):
    """Expression and direct sides of the image-curve geodesic lemma."""
    loc = ev.at(x)
    k_inv = "anti-invariant" if hemi else "invariant"

    def parts(xx, vv):
        L = ev.at(xx)
        FX = L.push(vv)
        return FX, L.proj[k_inv] @ FX, L.proj["slant"] @ FX

    def X1f(xx, vv):
        L = ev.at(xx)
        return L.lift(parts(xx, vv)[1])

    def X2f(xx, vv):
        L = ev.at(xx)
        return L.lift(parts(xx, vv)[2])

    def omegaX2(xx, vv):
        L = ev.at(xx)
        return L.omega @ parts(xx, vv)[2]

    def omegaphiX2(xx, vv):
        L = ev.at(xx)
        return L.omega @ (L.phi @ parts(xx, vv)[2])

    def Wf(xx, vv):
        L = ev.at(xx)
        return L.Jm @ parts(xx, vv)[1]

    def betadot(xx, vv):
        return ev.at(xx).push(vv)

    FX, FX1, FX2 = parts(x, v)
    X1, X2 = loc.lift(FX1), loc.lift(FX2)
    cos2 = loc.cos2 if loc.cos2 is not None else 0.0
    GamN, GamM = loc.GamN, loc.GamM

    def nabla_nf(f):
        return _along(ev, f, x, v) + np.einsum("kij,i,j->k", GamN, FX, f(x, v))

    def nabla_m(f):
        return _along(ev, f, x, v) + np.einsum("kij,i,j->k", GamM, v, f(x, v))

    t = {}
    t["F*(nabla_X X2)"] = loc.push(nabla_m(X2f))
    t["S_{omega phi X2} X"] = loc.shape(omegaphiX2(x, v), FX)
    t["S_{omega X2} X"] = loc.shape(omegaX2(x, v), FX)
    t["perp nabla_X omega X2"] = loc.Pp @ nabla_nf(omegaX2)
    t["perp nabla_X omega phi X2"] = loc.Pp @ nabla_nf(omegaphiX2)
    t["sff(X, X2)"] = loc.sff(v, X2)
    rng = (
        cos2 * t["F*(nabla_X X2)"]
        + t["S_{omega phi X2} X"]
        + loc.phi @ t["S_{omega X2} X"]
        - loc.B @ t["perp nabla_X omega X2"]
    )
    prp = (
        cos2 * t["sff(X, X2)"]
        - t["perp nabla_X omega phi X2"]
        + loc.omega @ t["S_{omega X2} X"]
        - loc.C @ t["perp nabla_X omega X2"]
    )
    if hemi:
        W = Wf(x, v)
        t["S_W X"] = loc.shape(W, FX)
        t["perp nabla_X W"] = loc.Pp @ nabla_nf(Wf)
        rng = rng + loc.phi @ t["S_W X"] - loc.B @ t["perp nabla_X W"]
        prp = prp + loc.omega @ t["S_W X"] - loc.C @ t["perp nabla_X W"]
    else:
        t["F*(nabla_X X1)"] = loc.push(nabla_m(X1f))
        t["sff(X, X1)"] = loc.sff(v, X1)
        rng = rng + t["F*(nabla_X X1)"]
        prp = prp + t["sff(X, X1)"]
    acc = nabla_nf(betadot)
    vert = norm(loc.fs.G_M, loc.fs.project_kernel(v))
    return rng, prp, acc, loc, vert, t


def _geodesic_identity(ev: Evaluator, ctx: Context, hemi: bool, part: str) -> IdentityResult:
    curve, states = _curve_states(ev, ctx)
    rows = []
    worst = worst_expr = worst_acc = 0.0
    worst_vert = 0.0
    for t, x, v in states:
        rng, prp, acc, loc, vert, _ = _geodesic_terms(ev, x, v, hemi)
        expr_v = rng if part == "range" else prp
        direct = (loc.Pr if part == "range" else loc.Pp) @ acc
        res = norm(loc.G, expr_v - direct)
        rows.append({"t": t, "expression": norm(loc.G, expr_v), "direct": norm(loc.G, direct), "acceleration": norm(loc.G, acc), "residual": res})
        worst = max(worst, res)
        worst_expr = max(worst_expr, norm(loc.G, expr_v))
        worst_acc = max(worst_acc, norm(loc.G, acc))
        worst_vert = max(worst_vert, vert)
    notes = ["fields are differentiated along the source geodesic"]
    if worst_vert > 1e-8:
        notes.append(f"source velocity has a kernel component up to {worst_vert:.3e}; the identity assumes horizontal velocity")
    return IdentityResult(
        "", "", worst, CURVE_TOL, worst_expr, worst_acc,
        terms={"max_acceleration": worst_acc, "max_vertical_velocity": worst_vert},
        rows=rows, notes=notes,
    )


# ---------------------------------------------------------------------------
# point identities

def _point(ev: Evaluator, ctx: Context):
    return np.asarray(ctx.point if ctx.point is not None else ev.scn.samples[0], dtype=float)


def _nsc(ev: Evaluator, ctx: Context, hemi: bool) -> IdentityResult:
    x = _point(ev, ctx)
    loc = ev.at(x)
    X0 = ctx.X if ctx.X is not None else loc.lift(_unit(loc, loc.fs.range @ np.ones(loc.fs.rank)))
    V0 = ctx.V if ctx.V is not None else _default_perp(loc)
    Xf = ev.extend("range", x, X0)
    Vf = ev.normal_extension(V0)

    def BVf(xx):
        return ev.at(xx).B @ Vf(xx)

    def starBV(xx):
        return ev.at(xx).lift(BVf(xx))

    def CVf(xx):
        return ev.at(xx).C @ Vf(xx)

    X = Xf(x)
    FX = loc.push(X)
    V = Vf(x)
    CV = CVf(x)
    t = {}
    t["B sff(X, *BV)"] = loc.B @ loc.sff(X, starBV(x))
    t["phi F*(nabla_X *BV)"] = loc.phi @ loc.push(ev.nabla_M(starBV, x, X))
    t["phi S_CV X"] = loc.phi @ loc.shape(CV, FX)
    t["B perp nabla_X CV"] = loc.B @ ev.nabla_perp(CVf, x, X)
    nVCV = ev.nabla_N_const(x, V, CV)
    t["B perp nabla_V CV"] = loc.B @ (loc.Pp @ nVCV)
    t["phi nabla_V CV"] = loc.phi @ nVCV
    Q = (
        t["B sff(X, *BV)"] + t["phi F*(nabla_X *BV)"] - t["phi S_CV X"]
        + t["B perp nabla_X CV"] + t["B perp nabla_V CV"] + t["phi nabla_V CV"]
    )
    E = loc.g(Q, FX)
    lhs = loc.dg(FX + V) * loc.g(FX, FX)
    res = abs(lhs + E)
    direct = loc.g(loc.shape(V, FX), FX) + loc.dg(V) * loc.g(FX, FX)
    terms = {k: norm(loc.G, v) for k, v in t.items()}
    terms.update({"dg(beta') |F*X|^2": lhs, "g(Q, F*X)": E, "shape_condition": direct})
    r = IdentityResult("", "", res, POINT_TOL, abs(E), abs(direct), terms=terms)
    r.notes.append("derivatives along V use the coordinate-constant extension of CV")
    r.hypotheses["consistent_with_shape_condition"] = (res < POINT_TOL) == (abs(direct) < POINT_TOL)
    return r


def _harmonic(ev: Evaluator, ctx: Context, hemi: bool) -> IdentityResult:
    from .rmap import tension_field

    x = _point(ev, ctx)
    loc = ev.at(x)
    k_inv = "anti-invariant" if hemi else "invariant"
    total = np.zeros(ev.scn.n)
    for i in range(loc.fs.rank):
        e = loc.fs.horizontal[:, i]
        X2f = ev.extend("slant", x, loc.lift(loc.proj["slant"] @ loc.push(e)))

        def om_phi(xx, X2f=X2f):
            L = ev.at(xx)
            return L.omega @ (L.phi @ L.push(X2f(xx)))

        def om(xx, X2f=X2f):
            L = ev.at(xx)
            return L.omega @ L.push(X2f(xx))

        total = total + ev.nabla_perp(om_phi, x, e) + loc.C @ ev.nabla_perp(om, x, e)
        if hemi:
            X1f = ev.extend(k_inv, x, loc.lift(loc.proj[k_inv] @ loc.push(e)))

            def Wf(xx, X1f=X1f):
                L = ev.at(xx)
                return L.Jm @ L.push(X1f(xx))

            total = total + loc.C @ ev.nabla_perp(Wf, x, e)
    tau = tension_field(ev.scn, x, loc.fs)
    tr = norm(loc.G, total)
    tn = norm(loc.G, tau)
    ker = sum((loc.sff(loc.fs.kernel[:, k], loc.fs.kernel[:, k]) for k in range(loc.fs.kernel.shape[1])), np.zeros(ev.scn.n))
    r = IdentityResult("", "", float(abs((tr < POINT_TOL) - (tn < POINT_TOL))), 0.5, tr, tn)
    r.terms = {"trace": tr, "tension": tn, "kernel_mean_curvature": norm(loc.G, ker)}
    r.hypotheses["kernel_minimal"] = norm(loc.G, ker) < POINT_TOL
    r.notes.append("residual is 0 when the trace criterion and the tension field agree on harmonicity")
    return r


def _nabla_push(ev: Evaluator, Yf, x, X):
    return ev.nabla_NF(ev.push_field(Yf), x, X)


def _foliation_D1_ii(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else _pick(loc, "invariant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "invariant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "slant", 0)
    V = ctx.V if ctx.V is not None else _default_perp(loc)
    Yf = ev.extend("invariant", x, Y0)

    def starJY(xx):
        L = ev.at(xx)
        return L.lift(L.Jm @ L.push(Yf(xx)))

    FZ, FX, FY = loc.push(Z), loc.push(X), loc.push(Yf(x))
    a = loc.push(ev.nabla_M(starJY, x, X))
    c1 = loc.g(a, loc.phi @ FZ) - inner(loc.fs.G_M, X, starJY(x)) * loc.g(loc.grad, loc.omega @ FZ)
    c2 = loc.g(a, loc.B @ V) - loc.dg(loc.C @ V) * loc.g(FX, loc.Jm @ FY)
    s = loc.sff(X, starJY(x))
    g1 = loc.g(a, loc.phi @ FZ) + loc.g(s, loc.omega @ FZ)
    g2 = loc.g(a, loc.B @ V) + loc.g(s, loc.C @ V)
    d = _nabla_push(ev, Yf, x, X)
    d1, d2 = loc.g(d, FZ), loc.g(d, V)
    res = abs(c1 - d1) + abs(c2 - d2)
    return IdentityResult("", "", res, POINT_TOL, abs(c1) + abs(c2), abs(d1) + abs(d2),
                          terms={"condition_range": c1, "condition_perp": c2, "direct_range": d1, "direct_perp": d2},
                          general=abs(g1 - d1) + abs(g2 - d2))


def _foliation_D1_iii(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else _pick(loc, "invariant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "invariant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "slant", 0)
    Yf = ev.extend("invariant", x, Y0)
    FZ = loc.push(Z)
    cos2 = loc.cos2 or 0.0
    nXY = loc.push(ev.nabla_M(Yf, x, X))
    gXY = inner(loc.fs.G_M, X, Yf(x))
    expr = (
        -gXY * loc.g(loc.B @ loc.grad + loc.C @ loc.grad, loc.phi @ FZ + loc.omega @ FZ)
        + cos2 * loc.g(nXY, FZ)
        - loc.g(nXY, loc.B @ (loc.omega @ FZ))
    )
    Js = loc.Jm @ loc.sff(X, Yf(x))
    gen = loc.g(Js, loc.phi @ FZ + loc.omega @ FZ) + cos2 * loc.g(nXY, FZ) - loc.g(nXY, loc.B @ (loc.omega @ FZ))
    d = loc.g(_nabla_push(ev, Yf, x, X), FZ)
    return IdentityResult("", "", abs(expr - d), POINT_TOL, abs(expr), abs(d), terms={"expression": expr, "direct": d},
                          general=abs(gen - d))


def _foliation_D2(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else _pick(loc, "slant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "slant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "invariant", 0)
    V = ctx.V if ctx.V is not None else _default_perp(loc)
    Yf = ev.extend("slant", x, Y0)

    def starphiY(xx):
        L = ev.at(xx)
        return L.lift(L.phi @ L.push(Yf(xx)))

    def omegaY(xx):
        L = ev.at(xx)
        return L.omega @ L.push(Yf(xx))

    FX, FZ = loc.push(X), loc.push(Z)
    a = loc.push(ev.nabla_M(starphiY, x, X))
    c1 = loc.g(a, loc.Jm @ FZ)
    c2 = (
        inner(loc.fs.G_M, X, starphiY(x)) * loc.g(loc.C @ loc.grad, V)
        - loc.g(loc.omega @ a, V)
        - loc.dg(omegaY(x)) * loc.g(loc.omega @ FX, V)
        - loc.g(loc.C @ ev.nabla_perp(omegaY, x, X), V)
    )
    SoY = loc.shape(omegaY(x), FX)
    g1 = c1 - loc.g(SoY, loc.Jm @ FZ)
    g2 = (
        -loc.g(loc.C @ loc.sff(X, starphiY(x)), V)
        - loc.g(loc.omega @ a, V)
        + loc.g(loc.omega @ SoY, V)
        - loc.g(loc.C @ ev.nabla_perp(omegaY, x, X), V)
    )
    d = _nabla_push(ev, Yf, x, X)
    d1, d2 = loc.g(d, FZ), loc.g(d, V)
    res = abs(c1 - d1) + abs(c2 - d2)
    return IdentityResult("", "", res, POINT_TOL, abs(c1) + abs(c2), abs(d1) + abs(d2),
                          terms={"condition_range": c1, "condition_perp": c2, "direct_range": d1, "direct_perp": d2},
                          general=abs(g1 - d1) + abs(g2 - d2))


def _foliation_Dperp(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else _pick(loc, "anti-invariant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "anti-invariant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "slant", 0)
    V = ctx.V if ctx.V is not None else _default_perp(loc)
    Yf = ev.extend("anti-invariant", x, Y0)

    def JY(xx):
        L = ev.at(xx)
        return L.Jm @ L.push(Yf(xx))

    FX, FY, FZ = loc.push(X), loc.push(Yf(x)), loc.push(Z)
    sin2 = 1.0 - (loc.cos2 or 0.0)
    nJY = ev.nabla_perp(JY, x, X)
    c1 = loc.dg(JY(x)) * loc.g(FX, loc.phi @ FZ) + loc.g(nJY, loc.omega @ FZ)
    c2 = inner(loc.fs.G_M, X, loc.lift(loc.B @ V)) * loc.g(loc.grad, JY(x)) + loc.g(nJY, loc.C @ V)
    nXY = loc.push(ev.nabla_M(Yf, x, X))
    c3 = loc.dg(loc.omega @ (loc.phi @ FZ)) * loc.g(FX, FY) + loc.g(
        -inner(loc.fs.G_M, X, Yf(x)) * (loc.C @ loc.grad) + loc.omega @ nXY, loc.omega @ FZ
    )
    sXY = loc.sff(X, Yf(x))
    g1 = -loc.g(loc.shape(JY(x), FX), loc.phi @ FZ) + loc.g(nJY, loc.omega @ FZ)
    g2 = -loc.g(JY(x), loc.sff(X, loc.lift(loc.B @ V))) + loc.g(nJY, loc.C @ V)
    g3 = -loc.g(sXY, loc.omega @ (loc.phi @ FZ)) + loc.g(loc.C @ sXY + loc.omega @ nXY, loc.omega @ FZ)
    d = _nabla_push(ev, Yf, x, X)
    d1, d2 = loc.g(d, FZ), loc.g(d, V)
    res = abs(c1 - d1) + abs(c2 - d2) + abs(c3 - sin2 * d1)
    return IdentityResult("", "", res, POINT_TOL, abs(c1) + abs(c2) + abs(c3), abs(d1) + abs(d2),
                          terms={"condition_ii_range": c1, "condition_ii_perp": c2, "condition_iii": c3,
                                 "direct_range": d1, "direct_perp": d2},
                          general=abs(g1 - d1) + abs(g2 - d2) + abs(g3 - sin2 * d1))


def _foliation_Dpsi(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else _pick(loc, "slant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "slant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "anti-invariant", 0)
    V = ctx.V if ctx.V is not None else _default_perp(loc)
    Yf = ev.extend("slant", x, Y0)

    def starphiY(xx):
        L = ev.at(xx)
        return L.lift(L.phi @ L.push(Yf(xx)))

    def omegaY(xx):
        L = ev.at(xx)
        return L.omega @ L.push(Yf(xx))

    FX, FZ = loc.push(X), loc.push(Z)
    sin2 = 1.0 - (loc.cos2 or 0.0)
    gXphiY = inner(loc.fs.G_M, X, starphiY(x))
    nomY = ev.nabla_perp(omegaY, x, X)
    c1 = -gXphiY * loc.g(loc.grad, loc.omega @ FZ) + loc.g(nomY, loc.omega @ FZ)
    a = loc.push(ev.nabla_M(starphiY, x, X))
    c2 = (
        gXphiY * loc.g(loc.C @ loc.grad, V)
        - loc.g(loc.omega @ a, V)
        + loc.dg(omegaY(x)) * loc.g(FX, loc.B @ V)
        + loc.g(nomY, loc.C @ V)
    )
    c3 = -loc.dg(omegaY(x)) * loc.g(loc.phi @ FX, FZ) - loc.g(loc.B @ nomY, FZ)
    sphi = loc.sff(X, starphiY(x))
    SoY = loc.shape(omegaY(x), FX)
    FY = loc.push(Yf(x))
    g1 = loc.g(sphi, loc.omega @ FZ) + loc.g(nomY, loc.omega @ FZ)
    g2 = -loc.g(loc.C @ sphi, V) - loc.g(loc.omega @ a, V) - loc.g(SoY, loc.B @ V) + loc.g(nomY, loc.C @ V)
    g3 = (
        loc.g(loc.shape(loc.omega @ (loc.phi @ FY), FX), FZ)
        + loc.g(loc.phi @ SoY, FZ)
        - loc.g(loc.B @ nomY, FZ)
    )
    d = _nabla_push(ev, Yf, x, X)
    d1, d2 = loc.g(d, FZ), loc.g(d, V)
    res = abs(c1 - d1) + abs(c2 - d2) + abs(c3 - sin2 * d1)
    return IdentityResult("", "", res, POINT_TOL, abs(c1) + abs(c2) + abs(c3), abs(d1) + abs(d2),
                          terms={"condition_ii_range": c1, "condition_ii_perp": c2, "condition_iii": c3,
                                 "direct_range": d1, "direct_perp": d2},
                          general=abs(g1 - d1) + abs(g2 - d2) + abs(g3 - sin2 * d1))


def _bracket(ev, Xf, Yf, x):
    return ev.directional(Yf, x, Xf(x)) - ev.directional(Xf, x, Yf(x))


def _integrable_D2(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X0 = ctx.X if ctx.X is not None else _pick(loc, "slant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "slant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "invariant", 0)
    Xf, Yf = ev.extend("slant", x, X0), ev.extend("slant", x, Y0)

    def starphi(f):
        return lambda xx: ev.at(xx).lift(ev.at(xx).phi @ ev.at(xx).push(f(xx)))

    X, Y, FZ = Xf(x), Yf(x), loc.push(Z)
    spY, spX = starphi(Yf), starphi(Xf)
    expr = (
        inner(loc.fs.G_M, X, spY(x)) * loc.g(loc.B @ loc.grad, FZ)
        - loc.g(loc.phi @ loc.push(ev.nabla_M(spY, x, X)), FZ)
        - loc.g(loc.push(ev.nabla_M(spX, x, Y)), loc.Jm @ FZ)
    )
    JZ = loc.Jm @ FZ

    def om(f):
        return lambda xx: ev.at(xx).omega @ ev.at(xx).push(f(xx))

    gen = (
        loc.g(loc.push(ev.nabla_M(spY, x, X)), JZ) - loc.g(loc.shape(om(Yf)(x), loc.push(X)), JZ)
        - loc.g(loc.push(ev.nabla_M(spX, x, Y)), JZ) + loc.g(loc.shape(om(Xf)(x), loc.push(Y)), JZ)
    )
    br = loc.push(_bracket(ev, Xf, Yf, x))
    d = loc.g(br, FZ)
    alt = _nabla_push(ev, Yf, x, X) - _nabla_push(ev, Xf, x, Y)
    coherence = norm(loc.G, alt - br)
    return IdentityResult("", "", abs(expr - d), POINT_TOL, abs(expr), abs(d),
                          terms={"expression": expr, "bracket": d, "bracket_coherence": coherence,
                                 "bracket_perp_defect": norm(loc.G, loc.Pp @ alt)},
                          general=abs(gen - d))


def _integrable_Dpsi(ev, ctx):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X0 = ctx.X if ctx.X is not None else _pick(loc, "slant", 0)
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "slant", 1)
    Z = ctx.Z if ctx.Z is not None else _pick(loc, "anti-invariant", 0)
    Xf, Yf = ev.extend("slant", x, X0), ev.extend("slant", x, Y0)

    def om(f):
        return lambda xx: ev.at(xx).omega @ ev.at(xx).push(f(xx))

    X, Y, FZ = Xf(x), Yf(x), loc.push(Z)
    FX = loc.push(X)
    sin2 = 1.0 - (loc.cos2 or 0.0)
    expr = (
        -loc.g(loc.dg(om(Yf)(x)) * (loc.phi @ FX) + loc.B @ ev.nabla_perp(om(Yf), x, X), FZ)
        - loc.g(ev.nabla_perp(om(Xf), x, Y), loc.Jm @ FZ)
    )
    FY = loc.push(Y)

    def omphi(f):
        return lambda xx: ev.at(xx).omega @ (ev.at(xx).phi @ ev.at(xx).push(f(xx)))

    gen = (
        loc.g(loc.shape(omphi(Yf)(x), FX), FZ)
        - loc.g(loc.shape(omphi(Xf)(x), FY), FZ)
        + loc.g(loc.phi @ loc.shape(om(Yf)(x), FX), FZ)
        - loc.g(loc.B @ ev.nabla_perp(om(Yf), x, X), FZ)
        - loc.g(ev.nabla_perp(om(Xf), x, Y), loc.Jm @ FZ)
    )
    br = loc.push(_bracket(ev, Xf, Yf, x))
    d = sin2 * loc.g(br, FZ)
    alt = _nabla_push(ev, Yf, x, X) - _nabla_push(ev, Xf, x, Y)
    return IdentityResult("", "", abs(expr - d), POINT_TOL, abs(expr), abs(d),
                          terms={"expression": expr, "sin2_bracket": d,
                                 "bracket_coherence": norm(loc.G, alt - br),
                                 "bracket_perp_defect": norm(loc.G, loc.Pp @ alt)},
                          general=abs(gen - d))


def _slant_tg_expression(ev, loc, x, X, Yf):
    """Second fundamental form of a slant field, rewritten through J."""
    def om(xx):
        return ev.at(xx).omega @ ev.at(xx).push(Yf(xx))

    def omphi(xx):
        L = ev.at(xx)
        return L.omega @ (L.phi @ L.push(Yf(xx)))

    FX = loc.push(X)
    cos2 = loc.cos2 or 0.0
    nom = ev.nabla_perp(om, x, X)
    common = cos2 * _nabla_push(ev, Yf, x, X) - ev.nabla_perp(omphi, x, X) - loc.B @ nom - loc.C @ nom - loc.push(ev.nabla_M(Yf, x, X))
    clairaut = common - loc.dg(omphi(x)) * FX - loc.dg(om(x)) * (loc.phi @ FX + loc.omega @ FX)
    general = common + loc.shape(omphi(x), FX) + loc.Jm @ loc.shape(om(x), FX)
    return clairaut, general


def _totally_geodesic(ev, ctx, hemi: bool):
    x = _point(ev, ctx)
    loc = ev.at(x)
    X = ctx.X if ctx.X is not None else loc.lift(_unit(loc, loc.fs.range @ np.ones(loc.fs.rank)))
    terms = {}
    res = 0.0
    expr_norm = direct_norm = 0.0
    # slant part
    Y0 = ctx.Y if ctx.Y is not None else _pick(loc, "slant", 1)
    Yf = ev.extend("slant", x, Y0)
    e_slant, gen_slant = _slant_tg_expression(ev, loc, x, X, Yf)
    d_slant = loc.sff(X, Yf(x))
    terms["slant_residual"] = norm(loc.G, e_slant - d_slant)
    res += terms["slant_residual"]
    expr_norm += norm(loc.G, e_slant)
    direct_norm += norm(loc.G, d_slant)
    if hemi:
        Y1 = _pick(loc, "anti-invariant", 0)
        Y1f = ev.extend("anti-invariant", x, Y1)

        def Wf(xx):
            L = ev.at(xx)
            return L.Jm @ L.push(Y1f(xx))

        FX = loc.push(X)
        nW = ev.nabla_perp(Wf, x, X)
        e_other = -loc.dg(Wf(x)) * (loc.phi @ FX + loc.omega @ FX) - loc.B @ nW - loc.C @ nW - loc.push(ev.nabla_M(Y1f, x, X))
        gen_other = loc.Jm @ loc.shape(Wf(x), FX) - loc.B @ nW - loc.C @ nW - loc.push(ev.nabla_M(Y1f, x, X))
        d_other = loc.sff(X, Y1f(x))
    else:
        Y1 = _pick(loc, "invariant", 0)
        Y1f = ev.extend("invariant", x, Y1)

        def Zf(xx):
            L = ev.at(xx)
            return L.lift(L.Jm @ L.push(Y1f(xx)))

        g_xz = inner(loc.fs.G_M, X, Zf(x))
        nZ = loc.push(ev.nabla_M(Zf, x, X))
        e_other = g_xz * (loc.B @ loc.grad + loc.C @ loc.grad) - loc.phi @ nZ - loc.omega @ nZ - loc.push(ev.nabla_M(Y1f, x, X))
        gen_other = -loc.Jm @ loc.sff(X, Zf(x)) - loc.phi @ nZ - loc.omega @ nZ - loc.push(ev.nabla_M(Y1f, x, X))
        d_other = loc.sff(X, Y1f(x))
    terms["other_residual"] = norm(loc.G, e_other - d_other)
    res += terms["other_residual"]
    expr_norm += norm(loc.G, e_other)
    direct_norm += norm(loc.G, d_other)
    ker = loc.fs.kernel
    kk = max((norm(loc.G, loc.sff(ker[:, a], ker[:, b])) for a in range(ker.shape[1]) for b in range(ker.shape[1])), default=0.0)
    kh = max((norm(loc.G, loc.sff(ker[:, a], loc.fs.horizontal[:, b])) for a in range(ker.shape[1]) for b in range(loc.fs.rank)), default=0.0)
    terms["sff_kernel_kernel"] = kk
    terms["sff_kernel_horizontal"] = kh
    gen = norm(loc.G, gen_slant - d_slant) + norm(loc.G, gen_other - d_other)
    r = IdentityResult("", "", res, POINT_TOL, expr_norm, direct_norm, terms=terms, general=gen)
    r.hypotheses["totally_geodesic"] = max(kk, kh, direct_norm) < POINT_TOL
    return r


# ---------------------------------------------------------------------------
# catalog

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    label: str
    inputs: tuple
    needs_clairaut: bool
    fn: Callable


CATALOG = {
    e.name: e
    for e in [
        CatalogEntry("geodesic-semi-slant-range", "range part of the acceleration of an image curve, semi-slant form", "semi-slant",
                     ("seed_point", "seed_velocity"), False, lambda ev, c: _geodesic_identity(ev, c, False, "range")),
        CatalogEntry("geodesic-semi-slant-perp", "normal part of the acceleration of an image curve, semi-slant form", "semi-slant",
                     ("seed_point", "seed_velocity"), False, lambda ev, c: _geodesic_identity(ev, c, False, "perp")),
        CatalogEntry("geodesic-hemi-slant-range", "range part of the acceleration of an image curve, hemi-slant form", "hemi-slant",
                     ("seed_point", "seed_velocity"), False, lambda ev, c: _geodesic_identity(ev, c, True, "range")),
        CatalogEntry("geodesic-hemi-slant-perp", "normal part of the acceleration of an image curve, hemi-slant form", "hemi-slant",
                     ("seed_point", "seed_velocity"), False, lambda ev, c: _geodesic_identity(ev, c, True, "perp")),
        CatalogEntry("clairaut-nsc-semi-slant", "Clairaut condition along a geodesic direction, semi-slant form", "semi-slant",
                     ("point", "X", "V", "potential"), False, lambda ev, c: _nsc(ev, c, False)),
        CatalogEntry("clairaut-nsc-hemi-slant", "Clairaut condition along a geodesic direction, hemi-slant form", "hemi-slant",
                     ("point", "X", "V", "potential"), False, lambda ev, c: _nsc(ev, c, True)),
        CatalogEntry("harmonic-semi-slant", "trace criterion for harmonicity, semi-slant form", "semi-slant",
                     ("point", "potential"), True, lambda ev, c: _harmonic(ev, c, False)),
        CatalogEntry("harmonic-hemi-slant", "trace criterion for harmonicity, hemi-slant form", "hemi-slant",
                     ("point", "potential"), True, lambda ev, c: _harmonic(ev, c, True)),
        CatalogEntry("foliation-D1-ii", "invariant distribution totally geodesic, first criterion", "semi-slant",
                     ("point", "X", "Y", "Z", "V", "potential"), True, _foliation_D1_ii),
        CatalogEntry("foliation-D1-iii", "invariant distribution totally geodesic, second criterion", "semi-slant",
                     ("point", "X", "Y", "Z", "potential"), True, _foliation_D1_iii),
        CatalogEntry("foliation-D2", "slant distribution totally geodesic, semi-slant case", "semi-slant",
                     ("point", "X", "Y", "Z", "V", "potential"), True, _foliation_D2),
        CatalogEntry("foliation-Dperp", "anti-invariant distribution totally geodesic", "hemi-slant",
                     ("point", "X", "Y", "Z", "V", "potential"), True, _foliation_Dperp),
        CatalogEntry("foliation-Dpsi", "slant distribution totally geodesic, hemi-slant case", "hemi-slant",
                     ("point", "X", "Y", "Z", "V", "potential"), True, _foliation_Dpsi),
        CatalogEntry("integrable-D2", "integrability of the slant distribution, semi-slant case", "semi-slant",
                     ("point", "X", "Y", "Z", "potential"), True, _integrable_D2),
        CatalogEntry("integrable-Dpsi", "integrability of the slant distribution, hemi-slant case", "hemi-slant",
                     ("point", "X", "Y", "Z", "potential"), True, _integrable_Dpsi),
        CatalogEntry("totally-geodesic-semi-slant", "second fundamental form rewritten through J, semi-slant case", "semi-slant",
                     ("point", "X", "Y", "potential"), True, lambda ev, c: _totally_geodesic(ev, c, False)),
        CatalogEntry("totally-geodesic-hemi-slant", "second fundamental form rewritten through J, hemi-slant case", "hemi-slant",
                     ("point", "X", "Y", "potential"), True, lambda ev, c: _totally_geodesic(ev, c, True)),
    ]
}


def list_identities() -> list:
    return [(e.name, e.description, e.label, e.inputs) for e in CATALOG.values()]


def evaluate_identity(name: str, scn: MapScenario, J: ComplexStructure | None, context: Context | None = None,
                      evaluator: Evaluator | None = None) -> IdentityResult:
    """Evaluate a catalog identity; see the module docstring for conventions."""
    entry = CATALOG.get(name)
    if entry is None:
        import difflib

        near = difflib.get_close_matches(name, list(CATALOG), n=1)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        raise UnknownIdentityError(f"unknown identity {name!r}{hint}")
    if J is None:
        raise IdentityError("identity needs a complex structure on the target")
    ctx = context or Context()
    g = ctx.potential if ctx.potential is not None else scn.potential
    cert = None
    if g is None:
        fit = fit_potential(scn)
        g = fit.expression(scn.target.coords)
    ev = evaluator or Evaluator(scn, J, g)
    if ev.cls.label != entry.label:
        raise IdentityError(f"{name} needs a {entry.label} map, classification is {ev.cls.label}")
    hyp = {}
    if entry.needs_clairaut:
        cert = certify(scn, g)
        hyp["clairaut"] = cert.verdict
    result = entry.fn(ev, ctx)
    result.name = name
    result.description = entry.description
    result.hypotheses = {**hyp, **result.hypotheses}
    if entry.needs_clairaut and not hyp["clairaut"]:
        result.status = "skipped"
        result.notes.append("Clairaut certificate fails for this scenario; identity evaluated but not judged")
    else:
        result.status = "pass" if result.residual < result.tol else "fail"
    return result
