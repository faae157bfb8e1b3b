"""Almost complex structures on a target chart."""

from __future__ import annotations

import numpy as np

from . import expr as ex
from .geom import ManifoldChart, christoffel_at, metric_at, norm


class ComplexStructure:
    """Endomorphism field ``J`` with components ``J^a_b`` (row a, column b).

    Column ``b`` is ``J(d/dy^b)``.
    """

    def __init__(self, chart: ManifoldChart, matrix):
        n = chart.dim
        if n % 2:
            raise ValueError(f"complex structure needs an even dimension, got {n}")
        rows = [[ex.parse(c, chart.coords) if isinstance(c, str) else c for c in row] for row in matrix]
        if len(rows) != n or any(len(r) != n for r in rows):
            raise ValueError(f"complex structure must be {n}x{n}")
        self.chart = chart
        self.matrix = tuple(tuple(r) for r in rows)
        flat = [e for r in rows for e in r]
        self._J = ex.CompiledBatch(flat, chart.coords)
        self._dJ = ex.CompiledBatch([ex.derivative(e, y) for y in chart.coords for e in flat], chart.coords)

    @classmethod
    def standard(cls, chart: ManifoldChart) -> "ComplexStructure":
        """``J d/dy_{2k-1} = d/dy_{2k}``, ``J d/dy_{2k} = -d/dy_{2k-1}``."""
        n = chart.dim
        if n % 2:
            raise ValueError(f"complex structure needs an even dimension, got {n}")
        M = [["0"] * n for _ in range(n)]
        for k in range(0, n, 2):
            M[k + 1][k] = "1"
            M[k][k + 1] = "-1"
        return cls(chart, M)

    def at(self, q) -> np.ndarray:
        n = self.chart.dim
        return np.array(self._J(list(map(float, q))), dtype=float).reshape(n, n)

    def derivatives_at(self, q) -> np.ndarray:
        """``D[c, a, b] = d J^a_b / d y^c``."""
        n = self.chart.dim
        return np.array(self._dJ(list(map(float, q))), dtype=float).reshape(n, n, n)


def check_j_square(J: ComplexStructure, chart: ManifoldChart, q) -> float:
    Jq = J.at(q)
    return float(np.max(np.abs(Jq @ Jq + np.eye(chart.dim))))


def check_hermitian(J: ComplexStructure, chart: ManifoldChart, q) -> float:
    Jq = J.at(q)
    G = metric_at(chart, q)
    return float(np.max(np.abs(Jq.T @ G @ Jq - G)))


def nabla_j(J: ComplexStructure, chart: ManifoldChart, q) -> np.ndarray:
    """``R[:, c, b] = nabla_{e_c}(J e_b) - J(nabla_{e_c} e_b)`` at ``q``."""
    Gam = christoffel_at(chart, q)
    Jq = J.at(q)
    dJ = J.derivatives_at(q)
    # nabla_c (J e_b)^k = d_c J^k_b + Gamma^k_{c i} J^i_b
    first = np.transpose(dJ, (1, 0, 2)) + np.einsum("kci,ib->kcb", Gam, Jq)
    # J(nabla_c e_b) = J^k_i Gamma^i_{cb}
    second = np.einsum("ki,icb->kcb", Jq, Gam)
    return first - second


def check_kahler(J: ComplexStructure, chart: ManifoldChart, q) -> float:
    R = nabla_j(J, chart, q)
    G = metric_at(chart, q)
    n = chart.dim
    return max(norm(G, R[:, c, b]) for c in range(n) for b in range(n))


def check_kahler_in_frame(J: ComplexStructure, chart: ManifoldChart, q, frame) -> float:
    """Kähler residual ``|(nabla_X J) Y|`` over pairs of a given frame (columns)."""
    R = nabla_j(J, chart, q)
    G = metric_at(chart, q)
    E = np.asarray(frame, dtype=float)
    T = np.einsum("kcb,cu,bv->kuv", R, E, E)
    return max(norm(G, T[:, u, v]) for u in range(E.shape[1]) for v in range(E.shape[1]))
