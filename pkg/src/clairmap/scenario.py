"""Scenario files: TOML text describing charts, a map, J, potentials and samples.

Layout::

    name = "demo"
    rank = 4                      # optional
    [source]
    name = "M"
    coords = ["x1", "x2"]
    metric.1.1 = "1"              # 1-based, upper triangle, rest symmetric
    metric.2.2 = "exp(2*x1)"
    [target]   ...same keys...
    [map]
    y1 = "x1"                     # one entry per target coordinate
    [complex_structure]
    J.2.1 = "1"                   # J^a_b, column b is J(d/dy_b); missing = 0
    [clairaut]
    potential = "0"
    relation_side = "target"      # or "source"
    relation_potential = "log(y1)"
    [samples]
    point = [[0.0, 1.0], [0.5, 0.2]]
    random = 20                   # extra uniform draws in [low, high]^m
    seed = 7
    low = -1.0
    high = 1.0
    [tolerances]
    rank = 1e-8
    check = 1e-8
    cluster = 1e-6
    angle = 1e-6
    drift = 1e-3
    [curve]
    seed_point = [0.0, 1.0]
    seed_velocity = [0.0, 1.0]
    steps = 10000
    h = 1e-3
"""

from __future__ import annotations

import difflib
import sys
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .cstruct import ComplexStructure
from .geom import ManifoldChart, MetricError
from .rmap import MapScenario, RankError, Tolerances

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCHEMA = {
    "": {"name", "rank", "description", "source", "target", "map", "complex_structure", "clairaut", "samples", "tolerances", "curve"},
    "source": {"name", "coords", "metric"},
    "target": {"name", "coords", "metric"},
    "complex_structure": {"J"},
    "clairaut": {"potential", "relation_side", "relation_potential"},
    "samples": {"point", "random", "seed", "low", "high"},
    "tolerances": {"rank", "check", "cluster", "angle", "drift"},
    "curve": {"seed_point", "seed_velocity", "steps", "h"},
}


class ScenarioError(ValueError):
    """Invalid scenario file; ``line`` is set for syntax errors when known."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


@dataclass
class CurveSpec:
    seed_point: np.ndarray | None = None
    seed_velocity: np.ndarray | None = None
    steps: int = 10000
    h: float = 1e-3


@dataclass
class ScenarioFile:
    name: str
    scenario: MapScenario
    complex_structure: ComplexStructure | None
    potential: ex.Expr | None
    relation_side: str = "target"
    relation_potential: ex.Expr | None = None
    curve: CurveSpec = field(default_factory=CurveSpec)
    source_text: str = ""


def _unknown(key: str, valid, where: str) -> ScenarioError:
    near = difflib.get_close_matches(key, sorted(valid), n=1)
    hint = f"; did you mean {near[0]!r}?" if near else ""
    return ScenarioError(f"unknown key {key!r} in {where}{hint}")


def _check_keys(table: dict, section: str) -> None:
    valid = SCHEMA[section]
    for k in table:
        if k not in valid:
            raise _unknown(k, valid, f"[{section}]" if section else "top level")


def _index(key: str, dim: int, what: str) -> int:
    try:
        i = int(key)
    except ValueError:
        raise ScenarioError(f"{what}: index {key!r} is not an integer") from None
    if not 1 <= i <= dim:
        raise ScenarioError(f"{what}: index {i} outside 1..{dim}")
    return i - 1


def _matrix(entries, dim: int, what: str, symmetric: bool):
    M = [["0"] * dim for _ in range(dim)]
    if not isinstance(entries, dict):
        raise ScenarioError(f"{what} must be given as {what}.i.j = \"expr\" entries")
    for ki, row in entries.items():
        i = _index(ki, dim, what)
        if not isinstance(row, dict):
            raise ScenarioError(f"{what}.{ki} must be followed by a column index")
        for kj, val in row.items():
            j = _index(kj, dim, what)
            if not isinstance(val, (str, int, float)):
                raise ScenarioError(f"{what}.{ki}.{kj} must be an expression string")
            text = str(val)
            if symmetric and i > j:
                i, j = j, i
            M[i][j] = text
            if symmetric:
                M[j][i] = text
    return M


def _chart(tab, section: str) -> ManifoldChart:
    if not isinstance(tab, dict):
        raise ScenarioError(f"missing [{section}] section")
    _check_keys(tab, section)
    coords = tab.get("coords")
    if not isinstance(coords, list) or not all(isinstance(c, str) for c in coords):
        raise ScenarioError(f"[{section}] coords must be a list of names")
    n = len(coords)
    metric = _matrix(tab.get("metric", {}), n, f"[{section}] metric", symmetric=True)
    try:
        return ManifoldChart(tab.get("name", section), coords, metric)
    except ex.ExprError as exc:
        raise ScenarioError(f"[{section}] metric: {exc}") from None
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None


def _line_of(text: str, section: str, key: str) -> int | None:
    """1-based line of ``key = ...`` inside ``[section]``, if it can be found."""
    current = ""
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line.strip("[]").strip()
        elif current == section and line.split("=", 1)[0].strip() == key:
            return no
    return None


def _vector(val, dim: int, what: str) -> np.ndarray:
    if not isinstance(val, list) or len(val) != dim or not all(isinstance(x, (int, float)) for x in val):
        raise ScenarioError(f"{what} must be a list of {dim} numbers")
    return np.array(val, dtype=float)


def load_text(text: str, name: str | None = None) -> ScenarioFile:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = None
        msg = str(exc)
        if "line " in msg:
            try:
                line = int(msg.split("line ")[1].split(",")[0].split(")")[0])
            except ValueError:
                line = None
        raise ScenarioError(f"parse error: {msg}", line) from None
    return build(data, name=name, text=text)


def load_scenario(path: str) -> ScenarioFile:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    return load_text(text, name=None)


def build(data: dict, name: str | None = None, text: str = "") -> ScenarioFile:
    _check_keys(data, "")
    for sec in ("complex_structure", "clairaut", "samples", "tolerances", "curve", "map"):
        if sec in data and not isinstance(data[sec], dict):
            raise ScenarioError(f"[{sec}] must be a table")
        if sec in data and sec != "map":
            _check_keys(data[sec], sec)
    source = _chart(data.get("source"), "source")
    target = _chart(data.get("target"), "target")
    m, n = source.dim, target.dim

    mp = data.get("map")
    if not mp:
        raise ScenarioError("missing [map] section")
    for k in mp:
        if k not in target.coords:
            raise _unknown(k, target.coords, "[map]")
    if len(mp) != n:
        raise ScenarioError(f"dimension mismatch: [map] has {len(mp)} components but the target has dimension {n}")
    comps = []
    for y in target.coords:
        try:
            comps.append(ex.parse(str(mp[y]), source.coords))
        except ex.ExprError as exc:
            line = _line_of(text, "map", y)
            where = f" (line {line})" if line else ""
            raise ScenarioError(f"[map] {y}{where}: {exc}", line) from None

    tol_tab = data.get("tolerances", {})
    try:
        tols = Tolerances(**{k: float(v) for k, v in tol_tab.items()})
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[tolerances]: {exc}") from None

    J = None
    if "complex_structure" in data:
        Jm = _matrix(data["complex_structure"].get("J", {}), n, "[complex_structure] J", symmetric=False)
        try:
            J = ComplexStructure(target, Jm)
        except (ex.ExprError, ValueError) as exc:
            raise ScenarioError(f"[complex_structure]: {exc}") from None

    cl = data.get("clairaut", {})
    exprs = {}
    for key in ("potential", "relation_potential"):
        if key not in cl:
            exprs[key] = None
            continue
        try:
            exprs[key] = ex.parse(str(cl[key]), target.coords)
        except ex.ExprError as exc:
            line = _line_of(text, "clairaut", key)
            where = f" (line {line})" if line else ""
            raise ScenarioError(f"[clairaut] {key}{where}: {exc}", line) from None
    potential, rel_pot = exprs["potential"], exprs["relation_potential"]
    side = cl.get("relation_side", "target")
    if side not in ("target", "source"):
        raise ScenarioError("[clairaut] relation_side must be 'target' or 'source'")

    smp = data.get("samples", {})
    pts = smp.get("point", [])
    if pts and isinstance(pts[0], (int, float)):
        pts = [pts]
    points = [_vector(p, m, "[samples] point") for p in pts]
    count = int(smp.get("random", 0))
    if count:
        rng = np.random.default_rng(int(smp.get("seed", 0)))
        lo, hi = float(smp.get("low", -1.0)), float(smp.get("high", 1.0))
        points += list(rng.uniform(lo, hi, size=(count, m)))
    if not points:
        raise ScenarioError("no sample points given")

    cv = data.get("curve", {})
    curve = CurveSpec(
        seed_point=_vector(cv["seed_point"], m, "[curve] seed_point") if "seed_point" in cv else None,
        seed_velocity=_vector(cv["seed_velocity"], m, "[curve] seed_velocity") if "seed_velocity" in cv else None,
        steps=int(cv.get("steps", 10000)),
        h=float(cv.get("h", 1e-3)),
    )

    rank = data.get("rank")
    title = name or str(data.get("name", "scenario"))
    try:
        scn = MapScenario(source, target, comps, points, J, potential, tols, title, rank)
    except (MetricError, ex.DomainError) as exc:
        raise ScenarioError(f"invalid at sample points: {exc}") from None
    except RankError as exc:
        raise ScenarioError(str(exc)) from None
    if scn.rank is None or scn.rank == 0:
        raise ScenarioError("map has rank 0 at the sample points")
    return ScenarioFile(title, scn, J, potential, side, rel_pot, curve, text)
