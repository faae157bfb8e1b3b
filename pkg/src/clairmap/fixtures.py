"""Built-in scenarios."""

from __future__ import annotations

import math

import numpy as np

from .scenario import ScenarioError, ScenarioFile, load_text

ALPHA = math.pi / 6

_J6 = """
[complex_structure]
J.2.1 = "1"
J.1.2 = "-1"
J.4.3 = "1"
J.3.4 = "-1"
J.6.5 = "1"
J.5.6 = "-1"
"""


def _points(seed: int, count: int, dim: int, fixed: dict | None = None, low=-1.0, high=1.0) -> str:
    rng = np.random.default_rng(seed)
    rows = rng.uniform(low, high, size=(count, dim))
    for k, v in (fixed or {}).items():
        rows[:, k] = v
    body = ",\n  ".join("[" + ", ".join(repr(float(round(x, 6))) for x in row) + "]" for row in rows)
    return f"point = [\n  {body},\n]\n"


def _chart6(section: str, prefix: str, conformal: str) -> str:
    lines = [f"[{section}]", f'name = "{"M" if section == "source" else "N"}"']
    lines.append("coords = [" + ", ".join(f'"{prefix}{i}"' for i in range(1, 7)) + "]")
    for i in range(1, 7):
        val = f"exp(2*{prefix}{conformal})" if i in (3, 4) else "1"
        lines.append(f'metric.{i}.{i} = "{val}"')
    return "\n".join(lines) + "\n"


def _semi_slant() -> str:
    c, s = repr(ALPHA), repr(ALPHA)
    return (
        'name = "paper-semi-slant"\nrank = 4\n'
        + _chart6("source", "x", "3")
        + _chart6("target", "y", "3")
        + f"""
[map]
y1 = "x2*cos({c})"
y2 = "0"
y3 = "x3"
y4 = "x4"
y5 = "x5"
y6 = "x2*sin({s})"
"""
        + _J6
        + """
[clairaut]
potential = "0"

[samples]
"""
        + _points(11, 20, 6)
        + """
[curve]
seed_point = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
seed_velocity = [0.0, 0.6, 0.0, 0.8, 0.0, 0.0]
steps = 10000
h = 1e-3
"""
    )


def _hemi_slant() -> str:
    a = repr(ALPHA)
    return (
        'name = "paper-hemi-slant"\nrank = 3\n'
        + _chart6("source", "x", "4")
        + _chart6("target", "y", "4")
        + f"""
[map]
y1 = "x2*sin({a})"
y2 = "0"
y3 = "x3"
y4 = "0"
y5 = "x5"
y6 = "x2*cos({a})"
"""
        + _J6
        + """
[samples]
"""
        + _points(12, 20, 6, fixed={3: 0.0})
        + """
[curve]
seed_point = [0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
seed_velocity = [0.0, 0.6, 0.0, 0.0, 0.8, 0.0]
steps = 10000
h = 1e-3
"""
    )


_POLAR = """
name = "polar-plane"
rank = 1

[source]
name = "plane"
coords = ["r", "phi"]
metric.1.1 = "1"
metric.2.2 = "r^2"

[target]
name = "line"
coords = ["y"]
metric.1.1 = "1"

[map]
y = "r"

[clairaut]
relation_side = "source"
relation_potential = "log(y)"

[samples]
point = [[1.0, 0.0], [1.5, 0.7], [2.0, -1.2], [2.5, 2.0], [3.0, 3.0]]

[curve]
seed_point = [1.0, 0.0]
seed_velocity = [0.0, 1.0]
steps = 10000
h = 1e-3
"""

_EUCLID = """
name = "euclidean-identity"
rank = 4

[source]
name = "R4"
coords = ["x1", "x2", "x3", "x4"]
metric.1.1 = "1"
metric.2.2 = "1"
metric.3.3 = "1"
metric.4.4 = "1"

[target]
name = "R4"
coords = ["y1", "y2", "y3", "y4"]
metric.1.1 = "1"
metric.2.2 = "1"
metric.3.3 = "1"
metric.4.4 = "1"

[map]
y1 = "x1"
y2 = "x2"
y3 = "x3"
y4 = "x4"

[complex_structure]
J.2.1 = "1"
J.1.2 = "-1"
J.4.3 = "1"
J.3.4 = "-1"

[clairaut]
potential = "0"

[samples]
random = 10
seed = 3

[curve]
seed_point = [0.0, 0.0, 0.0, 0.0]
seed_velocity = [1.0, 0.5, 0.0, -0.25]
steps = 1000
h = 1e-3
"""

FIXTURES = {
    "paper-semi-slant": _semi_slant,
    "paper-hemi-slant": _hemi_slant,
    "polar-plane": lambda: _POLAR,
    "euclidean-identity": lambda: _EUCLID,
}

_cache: dict[str, ScenarioFile] = {}


def fixture_text(name: str) -> str:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise ScenarioError(f"unknown fixture {name!r}; choose from {', '.join(FIXTURES)}") from None


def load_fixture(name: str) -> ScenarioFile:
    if name not in _cache:
        _cache[name] = load_text(fixture_text(name), name=name)
    return _cache[name]
