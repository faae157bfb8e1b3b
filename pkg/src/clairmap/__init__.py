"""Numerical checks for semi-slant and hemi-slant Riemannian maps into Kähler manifolds."""

from .clairaut import certify, clairaut_relation_check, fit_potential, source_relation_check
from .cstruct import ComplexStructure
from .expr import parse
from .fixtures import load_fixture
from .geom import ManifoldChart, geodesic_integrate
from .rmap import MapScenario, frame_split
from .scenario import load_scenario, load_text
from .slant import classify
from .theorems import evaluate_identity, list_identities

__all__ = [
    "ComplexStructure",
    "ManifoldChart",
    "MapScenario",
    "certify",
    "clairaut_relation_check",
    "classify",
    "evaluate_identity",
    "fit_potential",
    "frame_split",
    "geodesic_integrate",
    "list_identities",
    "load_fixture",
    "load_scenario",
    "load_text",
    "parse",
    "source_relation_check",
]
