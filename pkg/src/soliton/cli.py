"""Command-line front-end.

Every command prints a JSON result record (or CSV for curves) on standard
output and diagnostics on standard error.  Exit codes: 0 ok, 1 verify
failure, 2 invalid spec or usage, 3 no convergence, 4 Reeb violation,
5 pipeline type error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import checks, filtrations as fl, germ, valuations as va
from .errors import (
    FiltrationAxiomError,
    NoConvergence,
    NotEquivariant,
    ReebViolation,
    SpecInvalid,
    UnboundedLevel,
)
from .polyhedra import rational

SCHEMA_VERSION = 1

EXIT_OK, EXIT_VERIFY, EXIT_SPEC, EXIT_CONVERGENCE, EXIT_REEB, EXIT_PIPELINE = range(6)


class PipelineError(Exception):
    pass


# -- serialization ------------------------------------------------------------------------

def _fmt(obj) -> str:
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, Fraction):
        return json.dumps(str(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return format(x, ".17g")
        return json.dumps(str(x))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 17 significant digits,
    exact rationals as ``"p/q"`` strings."""
    return _fmt(obj)


def digest(payload) -> str:
    return hashlib.sha256(dumps(payload).encode()).hexdigest()


def record(command: str, inputs, outputs: dict, diagnostics: dict) -> dict:
    return {"command": command, "inputs_digest": digest(inputs), "outputs": outputs, "diagnostics": diagnostics}


# -- germ-spec files ------------------------------------------------------------------------

_FIXTURE_PREFIX = "fixture:"


def _parse_rational(text, where: str) -> Fraction:
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise SpecInvalid(f"{where}: rationals must be \"p/q\" strings")
    try:
        q = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise SpecInvalid(f"{where}: malformed rational {text!r}") from None
    if isinstance(text, str) and "/" in text and int(text.split("/")[1]) <= 0:
        raise SpecInvalid(f"{where}: denominator must be positive")
    return q


def spec_from_dict(data: dict) -> tuple[germ.GermSpec, Fraction | None]:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise SpecInvalid(f"unsupported schema_version {data.get('schema_version')!r}")
    try:
        raw = data["facets"]
        dim = int(data["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SpecInvalid(f"missing or malformed field: {exc}") from None
    facets = []
    for i, f in enumerate(raw):
        normal = f.get("normal") if isinstance(f, dict) else None
        if not isinstance(normal, list) or len(normal) != dim or not all(isinstance(c, int) for c in normal):
            raise SpecInvalid(f"facet {i}: normal must be a list of {dim} integers", facet=i)
        facets.append((tuple(normal), _parse_rational(f.get("discrepancy"), f"facet {i}")))
    cutoff = data.get("cutoff")
    cutoff = None if cutoff is None else rational(cutoff)
    return germ.GermSpec(tuple(facets), label=str(data.get("label", ""))), cutoff


def spec_to_dict(spec: germ.GermSpec, cutoff=None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "label": spec.label,
        "dim": spec.dim_x,
        "facets": [{"normal": list(n), "discrepancy": str(a)} for n, a in spec.facets],
    }
    if cutoff is not None:
        out["cutoff"] = float(cutoff)
    return out


def load_spec(arg: str) -> tuple[germ.GermSpec, Fraction | None, dict]:
    """Load a germ-spec file, or a built-in fixture given as ``fixture:NAME``."""
    if arg.startswith(_FIXTURE_PREFIX):
        name = arg[len(_FIXTURE_PREFIX):]
        if name not in checks.FIXTURES:
            raise SpecInvalid(f"unknown fixture {name!r}; choose from {sorted(checks.FIXTURES)}")
        spec = checks.FIXTURES[name]()
        return spec, None, spec_to_dict(spec)
    try:
        data = json.loads(Path(arg).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecInvalid(f"cannot read germ spec {arg}: {exc}") from None
    spec, cutoff = spec_from_dict(data)
    return spec, cutoff, data


def _vector(text: str) -> list[Fraction]:
    try:
        return [Fraction(c.strip()) for c in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated rational vector: {text!r}") from None


# -- commands ----------------------------------------------------------------------------------

def cmd_minimize(args) -> tuple[int, str]:
    spec, _, data = load_spec(args.germ)
    cert = germ.minimize_h(spec, tol=args.tol, max_iters=args.max_iters)
    outputs = cert.as_dict()
    diag = {"tolerance": args.tol, "seed": args.seed, "newton_iters": cert.newton_iters}
    return EXIT_OK, dumps(record("minimize", [data, args.tol, args.seed], outputs, diag))


def cmd_h_curve(args) -> tuple[int, str]:
    spec, _, data = load_spec(args.germ)
    eta = np.array([float(c) for c in args.direction])
    if len(eta) != spec.dim_x:
        raise SpecInvalid(f"direction must have {spec.dim_x} entries")
    base = germ.minimize_h(spec).xi0 if args.base is None else np.array([float(c) for c in args.base])
    t0, t1 = args.t_range
    cone = germ.reeb_cone(spec)
    for t in (t0, t1):
        if not cone.contains(base + t * eta):
            raise ReebViolation(f"endpoint t={t} leaves the open Reeb cone")
    lines = ["t,h"]
    for t in np.linspace(t0, t1, args.points):
        lines.append(f"{format(float(t), '.17g')},{format(germ.h_eval(spec, base + t * eta), '.17g')}")
    return EXIT_OK, "\n".join(lines)


def _valuation(spec, xi) -> va.MonomialValuation:
    return va.MonomialValuation(xi, spec)


def dh_gap(v: va.MonomialValuation, m: int, t_max=None) -> Fraction:
    """Exact sup-norm distance between the level-``m`` and limit DH CDFs
    (on ``[0, t_max)`` when given)."""
    spec = v.spec
    if spec.polyhedron.is_bounded:
        level = fl.level_from_germ(spec, m)
    else:
        level = fl.level_from_germ(spec, m, cutoff=t_max, xi_ref=v.weights)
    atoms = fl.dh_discrete(fl.filtration_from_wt(level, v.weights, v.a_exact)).atoms
    gap = Fraction(0)
    below = Fraction(0)
    for x, mass in atoms:
        lim = va.vol_fn_limit(v, x, exact=True)
        gap = max(gap, abs(below - lim), abs(below + mass - lim))
        below += mass
    if spec.polyhedron.is_bounded:
        gap = max(gap, abs(below - va.vol_fn_limit(v, atoms[-1][0], exact=True)))
    return gap


def cmd_dh(args) -> tuple[int, str]:
    spec, cutoff, data = load_spec(args.germ)
    xi = args.xi if args.xi is not None else [Fraction(0)] * spec.dim_x
    if len(xi) != spec.dim_x:
        raise SpecInvalid(f"xi must have {spec.dim_x} entries")
    v = _valuation(spec, xi)
    t_max = args.t_max if args.t_max is not None else cutoff
    bounded = spec.polyhedron.is_bounded
    if not bounded:
        if t_max is None or t_max <= 0:
            raise UnboundedLevel("an unbounded germ needs --t-max > 0")
        if not germ.reeb_cone(spec).contains([float(c) for c in xi]):
            raise ReebViolation("xi is not in the open Reeb cone")
    hi = float(t_max) if t_max is not None else float(
        max(sum(a * b for a, b in zip(p, xi)) for p in spec.polyhedron.vertices) + v.a_exact)
    grid = [Fraction(k, args.points - 1) * rational(hi) for k in range(args.points)]
    lines = ["m,t,cdf"]
    atoms_out = {}
    gaps = {}
    if args.m:
        for m in args.m:
            level = fl.level_from_germ(spec, m) if bounded else \
                fl.level_from_germ(spec, m, cutoff=t_max, xi_ref=v.weights)
            measure = fl.dh_discrete(fl.filtration_from_wt(level, v.weights, v.a_exact))
            atoms_out[str(m)] = [[x, mass] for x, mass in measure.atoms]
            gaps[str(m)] = float(dh_gap(v, m, t_max))
            lines += [f"{m},{format(float(t), '.17g')},{format(measure.cdf(t), '.17g')}" for t in grid]
    if args.limit or not args.m:
        lines += [f"limit,{format(float(t), '.17g')},{format(va.vol_fn_limit(v, t), '.17g')}" for t in grid]
    if args.atoms:
        rec = record("dh", [data, [str(c) for c in xi], args.m, str(t_max)],
                     {"atoms": atoms_out, "sup_gaps": gaps}, {"t_max": t_max, "points": args.points})
        Path(args.atoms).write_text(dumps(rec) + "\n")
    elif gaps:
        print(dumps({"sup_gaps": gaps}), file=sys.stderr)
    return EXIT_OK, "\n".join(lines)


def _level_from_json(obj: dict):
    if "germ_file" in obj:
        spec, _, _ = load_spec(obj["germ_file"])
    elif "germ" in obj:
        spec = obj["germ"]
        spec = load_spec(spec)[0] if isinstance(spec, str) else spec_from_dict(spec)[0]
    else:
        raise PipelineError("level needs 'germ' or 'germ_file'")
    xi_ref = obj.get("xi_ref")
    return fl.level_from_germ(spec, int(obj["m"]), cutoff=obj.get("cutoff"),
                              xi_ref=None if xi_ref is None else [Fraction(c) for c in xi_ref])


def _filtration_from_json(level, obj: dict):
    kind = obj.get("kind")
    if kind == "wt":
        return fl.filtration_from_wt(level, [Fraction(c) for c in obj["xi"]])
    if kind == "trivial":
        return fl.trivial(level)
    if kind == "monomial":
        return fl.MonomialFiltration(level, tuple(Fraction(c) for c in obj["values"]))
    if kind == "flag":
        jumps = [(Fraction(j["lambda"]), [[Fraction(c) for c in g] for g in j["generators"]]) for j in obj["jumps"]]
        return fl.FlagFiltration.from_jumps(level, jumps)
    raise PipelineError(f"unknown filtration kind {kind!r}")


def _measure_json(measure: fl.AtomicMeasure) -> list:
    return [[list(loc) if isinstance(loc, tuple) else loc, mass] for loc, mass in measure.atoms]


def _jumps_json(F: fl.Filtration) -> dict:
    return {
        "kind": F.kind,
        "successive_minima": [[lam, k] for lam, k in F.successive_minima()],
        "jump_table": [[lam, d] for lam, d in F.jump_table()],
    }


def run_pipeline(doc: dict) -> list:
    level = _level_from_json(doc["level"])
    env = {name: _filtration_from_json(level, obj) for name, obj in doc.get("filtrations", {}).items()}
    results = []

    def get(name):
        if name not in env:
            raise PipelineError(f"unknown filtration {name!r}")
        return env[name]

    for k, step in enumerate(doc.get("pipeline", [])):
        op = step.get("op")
        inputs = step.get("inputs") or ([step["input"]] if "input" in step else [])
        out: dict = {"step": k, "op": op}
        if op in ("identity", "jumps"):
            F = get(inputs[0])
            out.update(_jumps_json(F))
        elif op in ("geodesic", "twist", "shift", "rescale"):
            F = get(inputs[0])
            if op == "geodesic":
                G = fl.geodesic(F, get(inputs[1]), Fraction(step["t"]))
            elif op == "twist":
                G = fl.twist(F, [Fraction(c) for c in step["xi"]])
            elif op == "shift":
                G = fl.shift(F, Fraction(step["b"]))
            else:
                G = fl.rescale(F, Fraction(step["a"]))
            if "as" in step:
                env[step["as"]] = G
            out.update(_jumps_json(G))
        elif op == "measure":
            out["atoms"] = _measure_json(fl.dh_discrete(get(inputs[0])))
        elif op == "bivariate":
            out["atoms"] = _measure_json(fl.dh_bivariate(get(inputs[0]), get(inputs[1])))
        elif op == "geodesic_dh":
            holds, dev = fl.geodesic_dh_identity(get(inputs[0]), get(inputs[1]), t=Fraction(step.get("t", "1/2")))
            out["holds"] = holds
            out["deviation"] = dev
        elif op == "s_tilde":
            F = get(inputs[0])
            out["s_tilde"] = fl.s_tilde_m(F)
            if "mu" in step:
                out["h_m"] = fl.h_m(F, Fraction(step["mu"]))
        elif op == "s_weighted":
            F0, F = get(inputs[0]), get(inputs[1])
            if not isinstance(F0, fl.MonomialFiltration):
                raise PipelineError("s_weighted needs a monomial reference filtration")
            t_cut = step.get("t_cut")
            out["s_weighted"] = fl.s_weighted_m(F0, Fraction(step["mu0"]), F,
                                                t_cut=None if t_cut is None else Fraction(t_cut))
        else:
            raise PipelineError(f"unknown pipeline op {op!r}")
        results.append(out)
    return results


def cmd_filtration(args) -> tuple[int, str]:
    try:
        doc = json.loads(Path(args.pipeline).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PipelineError(f"cannot read pipeline: {exc}") from None
    try:
        steps = run_pipeline(doc)
    except (KeyError, TypeError, IndexError, ValueError, ZeroDivisionError) as exc:
        raise PipelineError(f"malformed pipeline: {exc!r}") from None
    return EXIT_OK, dumps(record("filtration", doc, {"steps": steps}, {"exact": True}))


def cmd_okounkov(args) -> tuple[int, str]:
    spec, _, data = load_spec(args.germ)
    v = _valuation(spec, args.xi)
    okb = va.okounkov_body(v)
    body = okb.body
    outputs = {
        "vertices": [list(p) for p in body.vertices],
        "rays": [list(r) for r in body.rays],
        "halfspaces": [{"normal": list(h.normal), "offset": h.offset} for h in body.halfspaces],
        "transform": {"slope": list(okb.slope), "constant": okb.constant},
    }
    return EXIT_OK, dumps(record("okounkov", [data, [str(c) for c in args.xi]], outputs, {"exact": True}))


def cmd_slope(args) -> tuple[int, str]:
    v = va.MonomialValuation(args.xi)
    res = va.lc_slope_monomial(v, m_max=args.m_max, tol=args.tol, twist=args.twist)
    outputs = {
        "mu": res.value,
        "a_value": v.a_exact,
        "per_m": {str(m): val for m, val in res.per_m.items()},
    }
    inputs = [[str(c) for c in args.xi], args.m_max, args.tol, None if args.twist is None else [str(c) for c in args.twist]]
    return EXIT_OK, dumps(record("slope", inputs, outputs, {"tolerance": args.tol, "m_values": list(res.per_m)}))


def cmd_delta(args) -> tuple[int, str]:
    spec, _, data = load_spec(args.germ)
    xi0 = germ.minimize_h(spec).xi0 if args.xi0 is None else np.array([float(c) for c in args.xi0])
    res = germ.delta_toric(spec, xi0, tol=args.tol, starts=args.starts, seed=args.seed)
    outputs = {"delta": res.value, "argmin": res.argmin, "xi0": xi0}
    diag = {"tolerance": args.tol, "starts": res.starts, "seed": args.seed}
    return EXIT_OK, dumps(record("delta", [data, args.tol, args.starts, args.seed], outputs, diag))


def cmd_verify(args) -> tuple[int, str]:
    suite = checks.SUITES[args.suite]
    results = suite(quick=args.quick, seed=args.seed)
    ok = all(c.passed for c in results)
    outputs = {"suite": args.suite, "passed": ok, "checks": [c.as_dict() for c in results]}
    rec = record("verify", [args.suite, args.quick, args.seed], outputs, {"quick": args.quick, "seed": args.seed})
    return (EXIT_OK if ok else EXIT_VERIFY), dumps(rec)


# -- entry point -------------------------------------------------------------------------------

def _threads() -> int | None:
    raw = os.environ.get("SOLITON_THREADS")
    if raw is None:
        return None
    try:
        value = int(raw)
    except ValueError:
        raise SpecInvalid("SOLITON_THREADS must be a positive integer") from None
    if value < 1:
        raise SpecInvalid("SOLITON_THREADS must be a positive integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="soliton", description=__doc__.splitlines()[0])
    p.add_argument("--out", help="write the result here instead of standard output")
    sub = p.add_subparsers(dest="command", required=True)

    def germ_arg(sp):
        sp.add_argument("germ", help="germ-spec JSON file or fixture:NAME (P1, P2, F1, A1, A2, A3)")

    sp = sub.add_parser("minimize", help="soliton candidate of a germ")
    germ_arg(sp)
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.add_argument("--max-iters", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_minimize)

    sp = sub.add_parser("h-curve", help="H along a line through the soliton candidate")
    germ_arg(sp)
    sp.add_argument("--direction", type=_vector, required=True)
    sp.add_argument("--t-range", type=float, nargs=2, default=(-1.0, 1.0), metavar=("T0", "T1"))
    sp.add_argument("--points", type=int, default=41)
    sp.add_argument("--base", type=_vector, help="base point (defaults to the soliton candidate)")
    sp.set_defaults(func=cmd_h_curve)

    sp = sub.add_parser("dh", help="discrete and limit DH cumulative distributions")
    germ_arg(sp)
    sp.add_argument("--xi", type=_vector, help="co-weight of the valuation (defaults to 0)")
    sp.add_argument("--m", type=int, nargs="+")
    sp.add_argument("--limit", action="store_true")
    sp.add_argument("--t-max", type=Fraction)
    sp.add_argument("--points", type=int, default=21)
    sp.add_argument("--atoms", help="write atoms and sup-norm gaps as JSON here")
    sp.set_defaults(func=cmd_dh)

    sp = sub.add_parser("filtration", help="run a filtration pipeline")
    sp.add_argument("pipeline")
    sp.set_defaults(func=cmd_filtration)

    sp = sub.add_parser("okounkov", help="Okounkov body and concave transform")
    germ_arg(sp)
    sp.add_argument("--xi", type=_vector, required=True)
    sp.set_defaults(func=cmd_okounkov)

    sp = sub.add_parser("slope", help="log canonical slope of a monomial valuation on A^n")
    sp.add_argument("--xi", type=_vector, required=True)
    sp.add_argument("--m-max", type=int, default=64)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--twist", type=_vector)
    sp.set_defaults(func=cmd_slope)

    sp = sub.add_parser("delta", help="equivariant delta invariant at the soliton candidate")
    germ_arg(sp)
    sp.add_argument("--xi0", type=_vector)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--starts", type=int, default=20)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_delta)

    sp = sub.add_parser("verify", help="run a property suite")
    sp.add_argument("suite", choices=sorted(checks.SUITES))
    sp.add_argument("--quick", action="store_true")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)
    return p


def _error(command: str, code: int, exc: Exception) -> tuple[int, str]:
    err = {"type": type(exc).__name__, "message": str(exc)}
    if getattr(exc, "facet", None) is not None:
        err["facet"] = exc.facet
    print(f"soliton {command}: {exc}", file=sys.stderr)
    return code, dumps({"command": command, "error": err})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _threads()
        code, text = args.func(args)
    except SpecInvalid as exc:
        code, text = _error(args.command, EXIT_SPEC, exc)
    except NoConvergence as exc:
        code, text = _error(args.command, EXIT_CONVERGENCE, exc)
    except ReebViolation as exc:
        code, text = _error(args.command, EXIT_REEB, exc)
    except (PipelineError, NotEquivariant, FiltrationAxiomError) as exc:
        code, text = _error(args.command, EXIT_PIPELINE, exc)
    except UnboundedLevel as exc:
        code, text = _error(args.command, EXIT_SPEC, exc)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
