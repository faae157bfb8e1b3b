"""Tangential and normal parts of J on the range, slant spectra, classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._linalg import jacobi_eigh
from .cstruct import ComplexStructure
from .geom import norm
from .rmap import FrameSplit, MapScenario, frame_split

LABELS = ("invariant", "anti-invariant", "slant", "semi-slant", "hemi-slant", "generic")


@dataclass
class TangencyOperators:
    """Matrices of ``phi, omega, B, C`` in the orthonormal range/perp frames.

    ``phi[i, j] = g_N(J R_j, R_i)``, ``omega[a, j] = g_N(J R_j, P_a)``,
    ``B[i, a] = g_N(J P_a, R_i)``, ``C[b, a] = g_N(J P_a, P_b)``.
    """

    phi: np.ndarray
    omega: np.ndarray
    B: np.ndarray
    C: np.ndarray
    J: np.ndarray
    frames: FrameSplit

    def phi_vec(self, w) -> np.ndarray:
        """``phi`` applied to a target vector (range part of ``J`` of its range part)."""
        fs = self.frames
        return fs.project_range(self.J @ fs.project_range(w))

    def omega_vec(self, w) -> np.ndarray:
        fs = self.frames
        return fs.project_perp(self.J @ fs.project_range(w))

    def B_vec(self, w) -> np.ndarray:
        fs = self.frames
        return fs.project_range(self.J @ fs.project_perp(w))

    def C_vec(self, w) -> np.ndarray:
        fs = self.frames
        return fs.project_perp(self.J @ fs.project_perp(w))


@dataclass
class SlantCluster:
    lam: float
    multiplicity: int
    angle: float
    basis: np.ndarray  # target vectors as columns

    def classify(self, tol: float) -> str:
        if abs(self.lam - 1.0) < tol:
            return "invariant"
        if abs(self.lam) < tol:
            return "anti-invariant"
        return "slant"


@dataclass
class SlantSpectrum:
    clusters: list
    eigenvalues: np.ndarray

    @property
    def lambdas(self) -> list:
        return [c.lam for c in self.clusters]


def decompose_J(scn: MapScenario, J: ComplexStructure, p, fs: FrameSplit | None = None) -> TangencyOperators:
    fs = fs or frame_split(scn, p)
    Jq = J.at(fs.image)
    R, P, G = fs.range, fs.perp, fs.G_N
    return TangencyOperators(
        phi=R.T @ G @ Jq @ R,
        omega=P.T @ G @ Jq @ R,
        B=R.T @ G @ Jq @ P,
        C=P.T @ G @ Jq @ P,
        J=Jq,
        frames=fs,
    )


def decomposition_residuals(ops: TangencyOperators) -> dict:
    """Residuals of the structural invariants of :class:`TangencyOperators`."""
    fs = ops.frames
    R, P, G = fs.range, fs.perp, fs.G_N
    range_res = max((norm(G, ops.J @ R[:, j] - R @ ops.phi[:, j] - P @ ops.omega[:, j]) for j in range(R.shape[1])), default=0.0)
    perp_res = max((norm(G, ops.J @ P[:, a] - R @ ops.B[:, a] - P @ ops.C[:, a]) for a in range(P.shape[1])), default=0.0)
    skew = float(np.max(np.abs(ops.phi + ops.phi.T))) if ops.phi.size else 0.0
    adj = float(np.max(np.abs(ops.omega + ops.B.T))) if ops.omega.size else 0.0
    return {"range": range_res, "perp": perp_res, "phi_skew": skew, "omega_B_adjoint": adj}


def slant_spectrum(ops: TangencyOperators, cluster_tol: float = 1e-6) -> SlantSpectrum:
    """Cluster the eigenvalues of ``-phi^2`` (sorted by lambda descending)."""
    phi = ops.phi
    r = phi.shape[0]
    if r == 0:
        return SlantSpectrum([], np.zeros(0))
    w, V = jacobi_eigh(-(phi @ phi))
    groups: list[list[int]] = []
    for k in range(r):
        if groups and abs(w[groups[-1][-1]] - w[k]) <= cluster_tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    clusters = []
    for g in groups:
        lam = float(np.mean(w[g]))
        lam_c = min(max(lam, 0.0), 1.0)
        clusters.append(SlantCluster(lam, len(g), math.acos(math.sqrt(lam_c)), ops.frames.range @ V[:, g]))
    return SlantSpectrum(clusters, w)


@dataclass
class Classification:
    label: str
    dims: dict
    theta: float | None
    clusters: list
    constancy: float
    diagnostic: str = ""
    per_point: list = field(default_factory=list)

    @property
    def r1(self) -> int:
        return self.dims.get("invariant", 0) // 2

    @property
    def r2(self) -> int:
        return self.dims.get("slant", 0) // 2


def label_for(kinds: list[str]) -> str:
    ks = tuple(kinds)
    if ks == ("invariant",):
        return "invariant"
    if ks == ("anti-invariant",):
        return "anti-invariant"
    if ks == ("slant",):
        return "slant"
    if ks == ("invariant", "slant"):
        return "semi-slant"
    if ks == ("slant", "anti-invariant"):
        return "hemi-slant"
    return "generic"


def classify(scn: MapScenario, J: ComplexStructure, points=None) -> Classification:
    """Classify the range against ``J`` over sample points."""
    tol = scn.tolerances
    points = list(scn.samples if points is None else points)
    if not points:
        raise ValueError("classification needs at least one sample point")
    spectra = []
    for p in points:
        spectra.append(slant_spectrum(decompose_J(scn, J, p), tol.cluster))
    first = spectra[0]
    kinds = [c.classify(tol.cluster) for c in first.clusters]
    dims: dict[str, int] = {}
    for c, k in zip(first.clusters, kinds):
        dims[k] = dims.get(k, 0) + c.multiplicity
    label = label_for(kinds)
    diagnostic = ""
    constancy = 0.0
    shape = [c.multiplicity for c in first.clusters]
    for p, sp in zip(points, spectra):
        if [c.multiplicity for c in sp.clusters] != shape:
            label = "generic"
            diagnostic = f"cluster structure changes at point {list(map(float, p))}"
            constancy = math.inf
            break
        for c0, c in zip(first.clusters, sp.clusters):
            constancy = max(constancy, abs(c.lam - c0.lam))
    if label != "generic" and constancy >= tol.angle:
        diagnostic = f"cluster eigenvalues vary by {constancy:.3e} across points"
        label = "generic"
    theta = None
    slant = [c for c, k in zip(first.clusters, kinds) if k == "slant"]
    if label in ("slant", "semi-slant", "hemi-slant") and slant:
        theta = slant[0].angle
    elif label == "invariant":
        theta = 0.0
    elif label == "anti-invariant":
        theta = math.pi / 2
    per_point = [[(c.lam, c.multiplicity) for c in sp.clusters] for sp in spectra]
    return Classification(label, dims, theta, first.clusters, constancy, diagnostic, per_point)
