"""Command-line interface: ``clairmap COMMAND (--scenario PATH | --fixture NAME) [options]``.

Exit codes: 0 all verdicts pass, 2 invalid scenario or arguments,
3 a check failed, 4 numeric failure, 5 unknown identity name.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from ._linalg import SingularMatrixError
from .clairaut import (
    InversionError,
    certify,
    clairaut_relation_check,
    source_relation_check,
)
from .cstruct import check_hermitian, check_j_square, check_kahler
from .fixtures import FIXTURES, load_fixture
from .geom import MetricError, geodesic_integrate, norm, speed_drift
from .ineq import InequalityError, casorati_slack, chen_slack, frame_sum_report
from .rmap import (
    RankError,
    frame_split,
    is_riemannian_map,
    is_umbilical,
    mean_curvature,
    perp_totally_geodesic_residual,
    second_fundamental_form,
    sff_squared_norm,
    shape_operator,
    tension_field,
)
from .scenario import ScenarioError, ScenarioFile, load_scenario
from .slant import classify, decompose_J, decomposition_residuals, slant_spectrum
from .theorems import CATALOG, Context, IdentityError, UnknownIdentityError, evaluate_identity

COMMANDS = ("validate", "classify", "kahler", "sff", "clairaut", "geodesic", "identity", "inequality", "all")
EXIT_OK, EXIT_INVALID, EXIT_CHECK, EXIT_NUMERIC, EXIT_UNKNOWN = 0, 2, 3, 4, 5
RELATION_SAMPLES = 1000
SPEED_DRIFT_TOL = 1e-6


def fmt_machine(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return ",".join(fmt_machine(x) for x in v)
    if v is None:
        return "none"
    return str(v)


def fmt_human(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".6g")
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(fmt_human(x) for x in v) + "]"
    if v is None:
        return "-"
    return str(v)


@dataclass
class Report:
    records: list = field(default_factory=list)
    headlines: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def add(self, key: str, value) -> None:
        self.records.append((key, value))

    def check(self, key: str, ok: bool) -> bool:
        self.records.append((key + ".verdict", "pass" if ok else "fail"))
        if not ok:
            self.failures.append(key)
        return ok

    def headline(self, text: str) -> None:
        self.headlines.append(text)

    @property
    def passed(self) -> bool:
        return not self.failures

    def machine(self) -> str:
        lines = [f"{k}\t{fmt_machine(v)}" for k, v in self.records]
        lines.append(f"verdict\t{'pass' if self.passed else 'fail'}")
        return "\n".join(lines) + "\n"

    def human(self) -> str:
        lines = list(self.headlines)
        width = max((len(k) for k, _ in self.records), default=0)
        lines += [f"{k.ljust(width)}  {fmt_human(v)}" for k, v in self.records]
        lines.append("verdict: " + ("pass" if self.passed else "fail: " + ", ".join(self.failures)))
        return "\n".join(lines) + "\n"


class UsageError(ValueError):
    pass


def parse_list(text: str | None):
    if text is None:
        return None
    t = text.strip()
    try:
        vals = json.loads(t) if t.startswith("[") else [float(x) for x in t.replace(";", ",").split(",") if x.strip()]
    except (ValueError, json.JSONDecodeError):
        raise UsageError(f"cannot parse number list {text!r}") from None
    return np.array(vals, dtype=float)


def _points(sf: ScenarioFile, args) -> list:
    pts = sf.scenario.samples
    if args.point is None:
        return list(enumerate(pts))
    if not 0 <= args.point < len(pts):
        raise UsageError(f"--point {args.point} outside 0..{len(pts) - 1}")
    return [(args.point, pts[args.point])]


def _need_J(sf: ScenarioFile):
    if sf.complex_structure is None:
        raise ScenarioError("scenario has no [complex_structure]")
    return sf.complex_structure


def _seed(sf: ScenarioFile, args):
    scn = sf.scenario
    p0 = parse_list(args.seed_point)
    v0 = parse_list(args.seed_velocity)
    if p0 is None:
        p0 = sf.curve.seed_point if sf.curve.seed_point is not None else scn.samples[0]
    if v0 is None:
        v0 = sf.curve.seed_velocity
    if v0 is None:
        fs = frame_split(scn, p0)
        v0 = fs.horizontal[:, 0]
    if len(p0) != scn.m:
        raise UsageError(f"seed point must have {scn.m} entries")
    steps = args.steps if args.steps is not None else sf.curve.steps
    h = args.h if args.h is not None else sf.curve.h
    if steps <= 0 or not h > 0:
        raise UsageError("--steps and --h must be positive")
    return np.asarray(p0, dtype=float), np.asarray(v0, dtype=float), int(steps), float(h)


# ---------------------------------------------------------------------------
# commands

def cmd_validate(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    rep.add("scenario.name", sf.name)
    rep.add("scenario.m", scn.m)
    rep.add("scenario.n", scn.n)
    rep.add("scenario.rank", scn.rank)
    rep.add("scenario.samples", len(scn.samples))
    worst = 0.0
    for i, p in _points(sf, args):
        ok, res = is_riemannian_map(scn, p)
        worst = max(worst, res)
    rep.add("riemannian.max_residual", worst)
    rep.check("riemannian", worst < scn.tolerances.check)
    rep.headline(f"{sf.name}: m={scn.m}, n={scn.n}, rank {scn.rank}, {len(scn.samples)} sample points")


def cmd_classify(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    J = _need_J(sf)
    pts = _points(sf, args)
    cls = classify(scn, J, [p for _, p in pts])
    rep.add("classify.label", cls.label)
    rep.add("classify.theta", cls.theta)
    for k in ("invariant", "slant", "anti-invariant"):
        rep.add(f"classify.dims.{k}", cls.dims.get(k, 0))
    rep.add("classify.constancy", cls.constancy)
    if cls.diagnostic:
        rep.add("classify.diagnostic", cls.diagnostic)
    worst_dec = worst_slant = 0.0
    tol = scn.tolerances
    for i, p in pts:
        ops = decompose_J(scn, J, p)
        worst_dec = max(worst_dec, max(decomposition_residuals(ops).values()))
        for c in slant_spectrum(ops, tol.cluster).clusters:
            if c.classify(tol.cluster) != "slant":
                continue
            cos2 = math.cos(cls.theta) ** 2 if cls.theta is not None else c.lam
            for k in range(c.basis.shape[1]):
                v = c.basis[:, k]
                worst_slant = max(worst_slant, norm(ops.frames.G_N, ops.phi_vec(ops.phi_vec(v)) + cos2 * v))
    rep.add("classify.decomposition_residual", worst_dec)
    rep.add("classify.slant_identity_residual", worst_slant)
    rep.check("classify", worst_dec < tol.check and worst_slant < tol.check and not cls.diagnostic)
    dims = "+".join(str(cls.dims[k]) for k in ("invariant", "slant", "anti-invariant") if k in cls.dims)
    theta = f", θ = {cls.theta:.6f} rad" if cls.theta is not None else ""
    rep.headline(f"{cls.label}{theta}, dims {dims}")


def cmd_kahler(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    J = _need_J(sf)
    sq = herm = kah = 0.0
    for i, p in _points(sf, args):
        q = frame_split(scn, p).image
        sq = max(sq, check_j_square(J, scn.target, q))
        herm = max(herm, check_hermitian(J, scn.target, q))
        kah = max(kah, check_kahler(J, scn.target, q))
    tol = scn.tolerances.check
    rep.add("kahler.j_square_residual", sq)
    rep.add("kahler.hermitian_residual", herm)
    rep.add("kahler.parallel_residual", kah)
    rep.check("kahler", sq < tol and herm < tol and kah < tol)


def cmd_sff(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    tol = scn.tolerances.check
    worst_sym = worst_dual = 0.0
    for i, p in _points(sf, args):
        fs = frame_split(scn, p)
        _, umb = is_umbilical(scn, p, fs)
        pre = f"point.{i}"
        rep.add(pre + ".sff_squared_norm", sff_squared_norm(scn, p, fs))
        rep.add(pre + ".mean_curvature_norm", norm(fs.G_N, mean_curvature(scn, p, fs)))
        rep.add(pre + ".umbilical_residual", umb)
        rep.add(pre + ".tension_norm", norm(fs.G_N, tension_field(scn, p, fs)))
        rep.add(pre + ".perp_totally_geodesic_residual", perp_totally_geodesic_residual(scn, p, fs))
        H = fs.horizontal
        for a in range(fs.rank):
            for b in range(fs.rank):
                s_ab = second_fundamental_form(scn, p, H[:, a], H[:, b])
                s_ba = second_fundamental_form(scn, p, H[:, b], H[:, a])
                worst_sym = max(worst_sym, norm(fs.G_N, s_ab - s_ba))
                for k in range(fs.perp.shape[1]):
                    V = fs.perp[:, k]
                    lhs = float(fs.pushforward(H[:, b]) @ fs.G_N @ shape_operator(scn, p, V, fs.pushforward(H[:, a]), fs))
                    rhs = float(s_ab @ fs.G_N @ V)
                    worst_dual = max(worst_dual, abs(lhs - rhs))
    rep.add("sff.symmetry_residual", worst_sym)
    rep.add("sff.weingarten_residual", worst_dual)
    rep.check("sff", worst_sym < tol and worst_dual < tol)


def cmd_clairaut(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    pot = args.potential if args.potential is not None else sf.potential
    pts = [p for _, p in _points(sf, args)]
    cert = certify(scn, pot, pts if len(pts) > 1 or args.point is not None else None)
    rep.add("clairaut.potential_source", cert.source)
    rep.add("clairaut.potential", ex.to_string(cert.potential))
    rep.add("clairaut.riemannian", all(cert.riemannian))
    rep.add("clairaut.umbilical_residual", cert.umbilical_residual)
    rep.add("clairaut.gradient_residual", cert.gradient_residual)
    rep.check("clairaut.certificate", cert.verdict)
    if args.relation_potential is not None:
        rel = ex.parse(args.relation_potential, scn.target.coords)
    else:
        rel = sf.relation_potential if sf.relation_potential is not None else cert.potential
    p0, v0, steps, h = _seed(sf, args)
    stride = max(1, steps // RELATION_SAMPLES)
    if sf.relation_side == "source":
        if len(v0) != scn.m:
            raise UsageError(f"seed velocity must have {scn.m} entries")
        trace = source_relation_check(scn, rel, p0, v0, steps, h, stride)
    else:
        w0 = v0 if len(v0) == scn.n and len(v0) != scn.m else frame_split(scn, p0).jacobian @ v0
        if len(w0) != scn.n:
            raise UsageError(f"seed velocity must have {scn.m} or {scn.n} entries")
        trace = clairaut_relation_check(scn, rel, p0, w0, steps, h, stride)
    rep.add("relation.side", trace.side)
    rep.add("relation.potential", ex.to_string(rel))
    rep.add("relation.samples", len(trace.t))
    rep.add("relation.last_good_t", trace.last_good_t)
    rep.add("relation.drift", trace.drift)
    if trace.error:
        rep.add("relation.error", trace.error)
    ok = trace.drift < scn.tolerances.drift
    rep.check("relation", ok)


def cmd_geodesic(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    p0, v0, steps, h = _seed(sf, args)
    if len(v0) != scn.m:
        raise UsageError(f"seed velocity must have {scn.m} entries")
    curve = geodesic_integrate(scn.source, p0, v0, steps, h)
    rep.add("geodesic.steps", len(curve) - 1)
    rep.add("geodesic.h", h)
    rep.add("geodesic.final_t", float(curve.t[-1]))
    rep.add("geodesic.final_point", curve.points[-1])
    rep.add("geodesic.final_velocity", curve.velocities[-1])
    drift = speed_drift(curve)
    rep.add("geodesic.speed_drift", drift)
    if curve.error:
        rep.add("geodesic.error", curve.error)
    rep.check("geodesic", curve.error is None and drift < SPEED_DRIFT_TOL)


def _identity_context(sf: ScenarioFile, args, point) -> Context:
    p0, v0, steps, h = _seed(sf, args)
    pot = ex.parse(args.potential, sf.scenario.target.coords) if args.potential is not None else None
    return Context(point=point, seed_point=p0, seed_velocity=v0, steps=steps, h=h, potential=pot)


def _report_identity(rep: Report, res, prefix: str) -> None:
    rep.add(prefix + ".residual", res.residual)
    rep.add(prefix + ".tolerance", res.tol)
    rep.add(prefix + ".expression", res.expression)
    rep.add(prefix + ".direct", res.direct)
    if res.general is not None:
        rep.add(prefix + ".general_residual", res.general)
    for k, v in res.hypotheses.items():
        rep.add(f"{prefix}.hypothesis.{k}", bool(v))
    for k, v in res.terms.items():
        rep.add(f"{prefix}.term.{k}", v)
    for j, row in enumerate(res.rows):
        for k, v in row.items():
            rep.add(f"{prefix}.row.{j}.{k}", v)
    rep.add(prefix + ".status", res.status)


def cmd_identity(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    if not args.name:
        for name, e in CATALOG.items():
            rep.add(f"catalog.{name}", e.label)
            rep.headline(f"{name}  [{e.label}]  {e.description}; inputs: {', '.join(e.inputs)}")
        return
    if args.name not in CATALOG:
        evaluate_identity(args.name, scn, sf.complex_structure)
    J = _need_J(sf)
    for i, p in _points(sf, args) if args.point is not None else [(0, scn.samples[0])]:
        res = evaluate_identity(args.name, scn, J, _identity_context(sf, args, p))
        _report_identity(rep, res, f"identity.{args.name}")
        rep.check(f"identity.{args.name}", res.passed)
        rep.headline(f"{args.name}: {res.description}")
        rep.headline(f"  residual {res.residual:.3e} (tol {res.tol:g}), {res.status}")
        for note in res.notes:
            rep.headline(f"  note: {note}")


def cmd_inequality(sf: ScenarioFile, args, rep: Report) -> None:
    scn = sf.scenario
    J = _need_J(sf)
    cls = classify(scn, J)
    scalars = (args.c, args.rho, args.tau2, args.k, args.deltac)
    want_slack = any(v is not None for v in scalars)
    c, rho, tau2, K, dc = (0.0 if v is None else v for v in scalars)
    worst = 0.0
    for i, p in _points(sf, args):
        r = frame_sum_report(scn, J, p, c, cls)
        pre = f"point.{i}"
        rep.add(pre + ".rank", r.r)
        rep.add(pre + ".r1", r.r1)
        rep.add(pre + ".r2", r.r2)
        rep.add(pre + ".frame_sum", r.sum_computed)
        rep.add(pre + ".frame_sum_orthonormal", r.sum_orthonormal)
        rep.add(pre + ".frame_sum_closed_form", r.sum_closed_form)
        rep.add(pre + ".pair_term", r.pair)
        rep.add(pre + ".casorati", r.casorati)
        rep.add(pre + ".casorati_equality", r.casorati_equality)
        rep.add(pre + ".chen_equality", r.chen_equality)
        if r.closed_form_residual is not None:
            worst = max(worst, r.closed_form_residual)
        if want_slack:
            try:
                rep.add(pre + ".casorati_slack", casorati_slack(r.r, r.sum_computed, c, rho, dc))
            except InequalityError as exc:
                rep.add(pre + ".casorati_slack", f"n/a ({exc})")
            try:
                rep.add(pre + ".chen_slack", chen_slack(r.r, r.sum_computed, r.pair, c, rho, tau2, K))
            except InequalityError as exc:
                rep.add(pre + ".chen_slack", f"n/a ({exc})")
    rep.add("inequality.label", cls.label)
    rep.add("inequality.closed_form_residual", worst)
    rep.check("inequality.closed_form", worst < 1e-8)


def cmd_all(sf: ScenarioFile, args, rep: Report) -> None:
    cmd_validate(sf, args, rep)
    has_J = sf.complex_structure is not None
    if has_J:
        cmd_kahler(sf, args, rep)
        cmd_classify(sf, args, rep)
    cmd_sff(sf, args, rep)
    cmd_clairaut(sf, args, rep)
    cmd_geodesic(sf, args, rep)
    if has_J:
        cmd_inequality(sf, args, rep)
        label = classify(sf.scenario, sf.complex_structure).label
        p = sf.scenario.samples[args.point if args.point is not None else 0]
        for name, e in CATALOG.items():
            if e.label != label:
                continue
            res = evaluate_identity(name, sf.scenario, sf.complex_structure, _identity_context(sf, args, p))
            pre = f"identity.{name}"
            rep.add(pre + ".residual", res.residual)
            rep.add(pre + ".status", res.status)
            if res.status != "skipped":
                rep.check(pre, res.passed)


HANDLERS = {
    "validate": cmd_validate,
    "classify": cmd_classify,
    "kahler": cmd_kahler,
    "sff": cmd_sff,
    "clairaut": cmd_clairaut,
    "geodesic": cmd_geodesic,
    "identity": cmd_identity,
    "inequality": cmd_inequality,
    "all": cmd_all,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="clairmap", description="Checks for semi-slant and hemi-slant Riemannian maps into Kähler manifolds.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("name", nargs="?", help="identity name (identity command); omit to list the catalog")
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--scenario", metavar="PATH")
    src.add_argument("--fixture", metavar="NAME", help="one of: " + ", ".join(FIXTURES))
    ap.add_argument("--format", choices=("human", "machine"), default="human")
    ap.add_argument("--point", type=int, metavar="INDEX")
    ap.add_argument("--potential", metavar="EXPR")
    ap.add_argument("--relation-potential", metavar="EXPR")
    ap.add_argument("--c", type=float)
    ap.add_argument("--rho", type=float)
    ap.add_argument("--tau2", type=float)
    ap.add_argument("--k", type=float)
    ap.add_argument("--deltac", type=float)
    ap.add_argument("--seed-point", metavar="LIST")
    ap.add_argument("--seed-velocity", metavar="LIST")
    ap.add_argument("--steps", type=int)
    ap.add_argument("--h", type=float)
    return ap


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    rep = Report()
    try:
        sf = load_fixture(args.fixture) if args.fixture else load_scenario(args.scenario)
        if args.potential is not None:
            ex.parse(args.potential, sf.scenario.target.coords)
        HANDLERS[args.command](sf, args, rep)
    except UnknownIdentityError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_UNKNOWN
    except ex.DomainError as exc:
        print(f"numeric failure: {exc}", file=err)
        return EXIT_NUMERIC
    except (ScenarioError, UsageError, IdentityError, RankError, ex.ExprError) as exc:
        line = getattr(exc, "line", None)
        where = f" (line {line})" if line and f"line {line}" not in str(exc) else ""
        print(f"error: {exc}{where}", file=err)
        return EXIT_INVALID
    except (InversionError, SingularMatrixError, MetricError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=err)
        return EXIT_NUMERIC
    out.write(rep.machine() if args.format == "machine" else rep.human())
    return EXIT_OK if rep.passed else EXIT_CHECK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
