"""J-frame sums, Casorati curvature and curvature-inequality slack.

The intrinsic scalars (scalar curvature, ``||tau||^2``, sectional
curvature ``K(P)`` and the Casorati invariant ``delta_C``) are inputs:
this module evaluates the extrinsic side of each inequality only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._linalg import jacobi_eigh
from .cstruct import ComplexStructure
from .geom import inner, norm
from .rmap import FrameSplit, MapScenario, frame_split, second_fundamental_form, sff_component_matrix
from .slant import Classification, classify, decompose_J, slant_spectrum

EQUALITY_TOL = 1e-8


class InequalityError(ValueError):
    pass


def frame_sum_in(G, J, frame) -> float:
    """``sum_{i,j} g(e_i, J e_j)^2`` over the columns of ``frame``."""
    M = frame.T @ G @ J @ frame
    return float(np.sum(M * M))


def adapted_frame(scn: MapScenario, J: ComplexStructure, p, fs: FrameSplit | None = None) -> np.ndarray:
    """Orthonormal range frame ordered invariant pairs, slant pairs, rest.

    Invariant pairs are ``(u, J u)``; slant pairs are ``(u, sec(theta) phi u)``;
    anti-invariant vectors have no partner and come last.
    """
    fs = fs or frame_split(scn, p)
    ops = decompose_J(scn, J, p, fs)
    spec = slant_spectrum(ops, scn.tolerances.cluster)
    G = fs.G_N
    chosen: list[np.ndarray] = []

    def orth(w):
        for u in chosen:
            w = w - inner(G, u, w) * u
        return w

    tail = []
    for c in spec.clusters:
        kind = c.classify(scn.tolerances.cluster)
        if kind == "anti-invariant":
            tail.extend(c.basis[:, k] for k in range(c.basis.shape[1]))
            continue
        cand = [c.basis[:, k] for k in range(c.basis.shape[1])]
        used = 0
        for w in cand:
            if used >= c.multiplicity:
                break
            w = orth(w)
            nw = norm(G, w)
            if nw < 1e-6:
                continue
            u = w / nw
            partner = ops.phi_vec(u)
            npart = norm(G, partner)
            if npart < 1e-12:
                continue
            chosen.append(u)
            chosen.append(partner / npart)
            used += 2
    frame = chosen + tail
    return np.column_stack(frame) if frame else np.zeros((scn.n, 0))


def closed_form(cls: Classification) -> float | None:
    """Closed form of the frame sum for a classified map, else ``None``."""
    cos2 = math.cos(cls.theta) ** 2 if cls.theta is not None else 0.0
    if cls.label == "semi-slant":
        return 2 * cls.r1 + 2 * cls.r2 * cos2
    if cls.label in ("hemi-slant", "slant"):
        return 2 * cls.r2 * cos2
    if cls.label == "invariant":
        return 2.0 * cls.r1
    if cls.label == "anti-invariant":
        return 0.0
    return None


def casorati_from_components(B: np.ndarray, r: int) -> float:
    """``(1/r) sum_{a,i,j} (B^a_ij)^2``."""
    if r == 0:
        return 0.0
    return float(np.sum(B * B)) / r


def casorati(scn: MapScenario, p, fs: FrameSplit | None = None) -> float:
    fs = fs or frame_split(scn, p)
    return casorati_from_components(sff_component_matrix(scn, p, fs), fs.rank)


def casorati_frame_free(scn: MapScenario, p, fs: FrameSplit | None = None) -> float:
    """Same quantity summed as ``(1/r) sum ||SFF(e_i, e_j)||^2``."""
    fs = fs or frame_split(scn, p)
    H = fs.horizontal
    total = 0.0
    for i in range(fs.rank):
        for j in range(fs.rank):
            v = second_fundamental_form(scn, p, H[:, i], H[:, j])
            total += inner(fs.G_N, v, v)
    return total / fs.rank if fs.rank else 0.0


def casorati_equality(B: np.ndarray, tol: float = EQUALITY_TOL) -> bool:
    """Whether every ``B^a`` equals ``a_a (I + u u^T)`` for one unit ``u``.

    This is the basis-free form of ``B_11 = ... = B_{r-1,r-1} = B_rr / 2``
    with vanishing off-diagonal entries.
    """
    if B.size == 0 or float(np.max(np.abs(B))) < tol:
        return True
    r = B.shape[1]
    k = int(np.argmax([np.sum(b * b) for b in B]))
    w, V = jacobi_eigh(B[k])
    a = float(np.trace(B[k])) / (r + 1)
    idx = int(np.argmin(np.abs(w - 2 * a)))
    u = V[:, idx]
    P = np.eye(r) + np.outer(u, u)
    for b in B:
        ab = float(np.trace(b)) / (r + 1)
        if float(np.max(np.abs(b - ab * P))) > tol:
            return False
    return True


def chen_equality(B: np.ndarray, tol: float = EQUALITY_TOL) -> bool:
    """Basis-free test of the shape-operator pattern in the Chen equality case.

    Along the mean-curvature normal the shape operator is
    ``diag(b1, b2, b1+b2, ..., b1+b2)``; every orthogonal normal has a
    traceless block on the same 2-plane and vanishes elsewhere.
    """
    if B.size == 0:
        return True
    s, r = B.shape[0], B.shape[1]
    if r < 2:
        return True
    tr = np.array([np.trace(b) for b in B])
    ntr = float(np.linalg.norm(tr))
    if ntr > tol:
        e = tr / ntr
        SH = np.einsum("a,aij->ij", e, B)
        w, V = jacobi_eigh(SH)
        mu = float(np.trace(SH)) / (r - 1)
        close = [k for k in range(r) if abs(w[k] - mu) <= tol]
        if len(close) < r - 2:
            return False
        far = [k for k in range(r) if k not in close[: r - 2]]
        plane = V[:, far]
        if abs(float(np.sum(w[far])) - mu) > tol:
            return False
        basis = np.linalg.svd(np.eye(s) - np.outer(e, e))[0][:, : s - 1]
        others = np.einsum("ab,aij->bij", basis, B)
    else:
        others = B
        M = sum((b @ b for b in B), np.zeros((r, r)))
        w, V = jacobi_eigh(M)
        plane = V[:, :2]
    Q = plane @ plane.T
    for b in others:
        if abs(float(np.trace(b))) > tol:
            return False
        if float(np.max(np.abs(b - Q @ b @ Q))) > tol:
            return False
    return True


@dataclass
class FrameSumReport:
    label: str
    r: int
    r1: int
    r2: int
    anti_dim: int
    theta: float | None
    sum_computed: float
    sum_orthonormal: float
    sum_closed_form: float | None
    pair: float
    casorati: float
    casorati_equality: bool
    chen_equality: bool
    c: float = 0.0

    @property
    def closed_form_residual(self) -> float | None:
        if self.sum_closed_form is None:
            return None
        return abs(self.sum_computed - self.sum_closed_form)


def frame_j_sum(scn: MapScenario, J: ComplexStructure, p, fs: FrameSplit | None = None) -> float:
    """Frame sum over the adapted orthonormal range frame."""
    fs = fs or frame_split(scn, p)
    return frame_sum_in(fs.G_N, J.at(fs.image), adapted_frame(scn, J, p, fs))


def frame_sum_report(scn: MapScenario, J: ComplexStructure, p, c: float = 0.0, cls: Classification | None = None) -> FrameSumReport:
    cls = cls or classify(scn, J)
    fs = frame_split(scn, p)
    Jq = J.at(fs.image)
    frame = adapted_frame(scn, J, p, fs)
    s_adapted = frame_sum_in(fs.G_N, Jq, frame)
    s_on = frame_sum_in(fs.G_N, Jq, fs.range)
    pair = inner(fs.G_N, frame[:, 0], Jq @ frame[:, 1]) ** 2 if frame.shape[1] >= 2 else 0.0
    B = sff_component_matrix(scn, p, fs)
    return FrameSumReport(
        label=cls.label,
        r=fs.rank,
        r1=cls.r1,
        r2=cls.r2,
        anti_dim=cls.dims.get("anti-invariant", 0),
        theta=cls.theta,
        sum_computed=s_adapted,
        sum_orthonormal=s_on,
        sum_closed_form=closed_form(cls),
        pair=pair,
        casorati=casorati_from_components(B, fs.rank),
        casorati_equality=casorati_equality(B),
        chen_equality=chen_equality(B),
        c=c,
    )


def casorati_slack(r: int, frame_sum: float, c: float, rho: float, deltac: float) -> float:
    if r < 3:
        raise InequalityError(f"Casorati inequality needs rank >= 3, got {r}")
    return deltac * (r - 1) + c / 4 + 3 * c * frame_sum / (4 * r * (r - 1)) - rho


def chen_slack(r: int, frame_sum: float, pair: float, c: float, rho: float, tau2: float, K: float) -> float:
    if r < 2:
        raise InequalityError(f"Chen inequality needs rank >= 2, got {r}")
    inner_ = 2 * rho - (r - 2) / (r - 1) * tau2 - c * (r * r - r - 2) - 3 * c * (frame_sum - 2 * pair)
    return K - 0.5 * inner_


def inequality_slack(report: FrameSumReport, c: float, rho: float, tau2: float, K: float, deltac: float,
                     use_closed_form: bool = False) -> dict:
    """Slack of both inequalities; nonnegative means the inequality holds."""
    s = report.sum_closed_form if use_closed_form and report.sum_closed_form is not None else report.sum_computed
    return {
        "casorati": casorati_slack(report.r, s, c, rho, deltac),
        "chen": chen_slack(report.r, s, report.pair, c, rho, tau2, K),
    }
