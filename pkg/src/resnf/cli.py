"""Command-line front end.

Input files are JSON objects holding one of

* ``"hamiltonian"``: a series literal ``h(z, zbar[, eps])``;
* ``"map"``: a series literal for the z-component ``f(z, zbar[, eps])``;
* ``"map_xy"``: ``{"x": series, "y": series}`` with ``k``/``l`` the powers
  of ``x``/``y``;

and optionally ``"resonance": {"n": int, "q": int}`` or, for a
non-resonant multiplier, ``"resonance": {"mu": {"re": str, "im": str}}``.

Exit codes: 0 success, 1 usage, 2 violated precondition, 3 failed
certification.
"""
from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

from . import __version__
from .birkhoff import birkhoff_normalize, commutation_residual, detect_resonance, linearize_elliptic
from .errors import CertificationError, PreconditionError
from .family import family_invariance_check, family_normal_form
from .interpolation import interpolate
from .lie import MapJet
from .pipeline import (
    invariance_check,
    map_from_hamiltonian,
    normalize_family_map,
    normalize_map,
)
from .sampling import random_generic_hamiltonian, random_real_series
from .scalars import InexactError, field_for
from .series import FormalSeries, ResonanceContext
from .unique_nf import (
    basis_dimension,
    bracket_matrix,
    enumerate_grade,
    hamiltonian_invariance_check,
    homological_matrix,
    kernel_vector,
    monomial_basis,
    unique_normal_form,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file (default: stdin for commands that need input)")
    common.add_argument("--output", help="output JSON file (default: stdout)")
    common.add_argument("--trunc", type=int, help="truncate the input to total degree N")
    common.add_argument("--prec", type=int, default=None, help="float precision in bits (default 256)")
    common.add_argument("--mode", choices=["exact", "float"], help="coefficient mode (default: from the input)")
    common.add_argument("--n", type=int, help="resonance order, overriding detection")
    common.add_argument("--seed", type=int, default=0, help="seed for random generators")
    p = _Parser(prog="resnf", description="Unique normal forms near resonant elliptic fixed points.")
    p.add_argument("--version", action="version", version=f"resnf {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("interpolate", parents=[common], help="interpolating Hamiltonian of a tangent-to-identity map")
    sub.add_parser("birkhoff", parents=[common], help="Birkhoff normalisation of a map jet")
    sub.add_parser("normalize", parents=[common], help="unique normal form of a map or Hamiltonian")
    sub.add_parser("family", parents=[common], help="unique normal form of a family (powers of eps)")
    v = sub.add_parser("verify", parents=[common], help="invariance under random conjugations")
    v.add_argument("--trials", type=int, default=3)
    sub.add_parser("selftest", parents=[common], help="dimension, rank and bracket checks")
    return p


# ---------------------------------------------------------------------------
# input handling


def _load(args):
    if args.input:
        try:
            with open(args.input) as fh:
                return json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read {args.input}: {exc}") from None
    if sys.stdin.isatty():
        raise UsageError("no --input given")
    try:
        return json.load(sys.stdin)
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse stdin: {exc}") from None


def _field(args, literal):
    mode = args.mode or literal.get("mode", "exact")
    prec = args.prec or literal.get("prec_bits")
    return field_for(mode, prec)


def _series(lit, fld, args):
    s = FormalSeries.from_json(lit, fld)
    if args.trunc is not None:
        s = s.truncate(args.trunc)
    return s


def _resonance(args, data, fld, mu=None, max_order=None):
    given = data.get("resonance") or {}
    if args.n is not None:
        return ResonanceContext(args.n, int(given.get("q", 1)))
    if "n" in given and given["n"] is not None:
        return ResonanceContext(int(given["n"]), int(given.get("q", 1)))
    if "mu" in given:
        m = given["mu"]
        return ResonanceContext(None, mu_value=fld.parse(m.get("re", "0"), m.get("im", "0")))
    if mu is not None:
        return detect_resonance(mu, fld, max_order)
    return ResonanceContext(None)


def _read_job(args, need_ctx=True):
    """``(kind, object, ctx, field)`` with kind ``hamiltonian`` or ``map``."""
    data = _load(args)
    if not isinstance(data, dict):
        raise UsageError("input must be a JSON object")
    if "hamiltonian" in data:
        fld = _field(args, data["hamiltonian"])
        h = _series(data["hamiltonian"], fld, args)
        return "hamiltonian", h, _resonance(args, data, fld), fld
    if "map" in data:
        fld = _field(args, data["map"])
        f = _series(data["map"], fld, args)
        m = MapJet(f)
        ctx = _resonance(args, data, fld, m.mu, f.trunc_total + 1) if need_ctx else None
        return "map", m, ctx, fld
    if "map_xy" in data:
        xy = data["map_xy"]
        fld = _field(args, xy["x"])
        X, Y = _series(xy["x"], fld, args), _series(xy["y"], fld, args)
        hint = None
        if args.n is not None or (data.get("resonance") or {}).get("n") is not None:
            hint = _resonance(args, data, fld)
        m, ctx, _ = linearize_elliptic(X, Y, hint)
        return "map", m, ctx, fld
    raise UsageError('input needs a "hamiltonian", "map" or "map_xy" entry')


def _num(x):
    # exact zeros print as "0" whatever their type
    return "0" if x == 0 else str(x)


def _provenance(regime, fld, args, **extra):
    out = {"regime": regime, "mode": fld.mode, "tool": f"resnf {__version__}", "command": args.command}
    if fld.mode == "float":
        out["prec_bits"] = fld.prec
    out.update(extra)
    return out


# ---------------------------------------------------------------------------
# commands


def cmd_interpolate(args):
    kind, obj, ctx, fld = _read_job(args, need_ctx=False)
    if kind != "map":
        raise UsageError("interpolate needs a map")
    h = interpolate(obj)
    return {"h": h.to_json(), "provenance": _provenance("interpolation", fld, args)}


def cmd_birkhoff(args):
    kind, obj, ctx, fld = _read_job(args)
    if kind != "map":
        raise UsageError("birkhoff needs a map")
    res = birkhoff_normalize(obj, ctx)
    return {
        "jet": res.jet.f.to_json(),
        "transform_log": [s.to_json() for s in res.log],
        "commutation_residual": _num(commutation_residual(res.jet, ctx)),
        "snapped_max": _num(res.snapped_max),
        "provenance": _provenance(ctx.regime, fld, args, n=ctx.n),
    }


def cmd_normalize(args):
    kind, obj, ctx, fld = _read_job(args)
    if kind == "hamiltonian":
        out = unique_normal_form(obj, ctx).to_json()
    else:
        out = normalize_map(obj, ctx).to_json()
    out["provenance"] = _provenance(ctx.regime, fld, args, n=ctx.n)
    return out


def cmd_family(args):
    kind, obj, ctx, fld = _read_job(args)
    if kind == "hamiltonian":
        out = family_normal_form(obj, ctx).to_json()
    else:
        out = normalize_family_map(obj, ctx).to_json()
    out["provenance"] = _provenance("family", fld, args, n=ctx.n)
    return out


def cmd_verify(args):
    rng = random.Random(args.seed)
    if args.input:
        kind, obj, ctx, fld = _read_job(args)
    else:
        # seeded generic map: rotation composed with the flow of a random h
        fld = field_for(args.mode or "float", args.prec)
        n = args.n if args.n is not None else 5
        N = args.trunc or 10
        ctx = ResonanceContext(n)
        h = random_generic_hamiltonian(n, N + 1, rng, field=fld, resonant_only=False, density=0.5)
        with fld.context():
            mu = ctx.mu(fld)
        obj, kind = map_from_hamiltonian(h, mu), "map"
    tol = fld.tol
    trials, devs = [], []
    for t in range(args.trials):
        if kind == "map":
            chi = random_real_series(obj.trunc_total + 1, rng, field=fld, density=0.5)
            dev = invariance_check(obj, ctx, chi)
        elif obj.trunc_eps:
            chi = random_real_series(obj.trunc_total, rng, ctx.n, obj.trunc_eps, field=fld, resonant_only=True)
            dev = family_invariance_check(obj, ctx, chi)
        else:
            chi = random_real_series(obj.trunc_total, rng, ctx.n, field=fld, resonant_only=True)
            dev = hamiltonian_invariance_check(obj, ctx, chi)
        devs.append(dev)
        trials.append({"trial": t, "deviation": str(dev), "ok": bool(dev <= tol)})
    ok = all(t["ok"] for t in trials)
    out = {
        "trials": trials,
        "tolerance": str(tol),
        "max_deviation": str(max(devs, default=0)),
        "pass": ok,
        "provenance": _provenance(ctx.regime, fld, args, n=ctx.n, seed=args.seed),
    }
    if not ok:
        raise _Failed(out)
    return out


def cmd_selftest(args):
    fld = field_for("exact")
    rng = random.Random(args.seed)
    top = args.trunc or 12
    dims, ok = {}, True
    for n in (3, 4, 5, 6, 7):
        row = []
        for m in range(0, top + 1):
            brute = len(enumerate_grade(n, m))
            formula = basis_dimension(n, m)
            listed = len(monomial_basis(n, m))
            ok &= brute == formula == listed
            row.append(brute)
        dims[str(n)] = row
    ops = {}
    for n in (3, 4, 5, 6, 7):
        a0 = Fraction(rng.choice([-1, 1]) * rng.randint(1, 9), rng.randint(1, 5))
        b0 = Fraction(rng.randint(1, 9), rng.randint(1, 5))
        good = True
        for p in range(1, min(top, 10) + 1):
            op = homological_matrix(n, p, a0, b0, fld)
            good &= op.matrix == {k: v for k, v in bracket_matrix(n, p, a0, b0, fld).items() if v != 0}
            kv = kernel_vector(n, p, a0, b0, fld)
            if kv is not None:
                good &= all(c == 0 for c in op.apply(kv).values())
        ops[str(n)] = good
        ok &= good
    out = {"dimensions": dims, "bracket_matches_closed_form": ops, "pass": bool(ok),
           "provenance": {"tool": f"resnf {__version__}", "command": "selftest", "seed": args.seed}}
    if not ok:
        raise _Failed(out)
    return out


class _Failed(Exception):
    def __init__(self, payload):
        super().__init__("verification failed")
        self.payload = payload


COMMANDS = {
    "interpolate": cmd_interpolate,
    "birkhoff": cmd_birkhoff,
    "normalize": cmd_normalize,
    "family": cmd_family,
    "verify": cmd_verify,
    "selftest": cmd_selftest,
}


def _emit(obj, args):
    text = json.dumps(obj, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 1
    try:
        _emit(COMMANDS[args.command](args), args)
        return 0
    except UsageError as exc:
        print(f"resnf: error: {exc}", file=sys.stderr)
        return 1
    except (PreconditionError, InexactError) as exc:
        print(f"resnf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"resnf: PreconditionError: {exc}", file=sys.stderr)
        return 2
    except _Failed as exc:
        _emit(exc.payload, args)
        print("resnf: CertificationError: check failed", file=sys.stderr)
        return 3
    except CertificationError as exc:
        print(f"resnf: CertificationError: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
