"""Command-line entry point: ``hardycert <command> ...``.

Exit codes: 0 Finite, 2 Infinite, 3 Inconclusive, 1 error (including a
failed hypothesis), 4 solver did not converge.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .criteria import Exponents, RGrid, hardy_certify
from .errors import ConditionViolation, HardyCertError, NoConvergence, ParseError
from .extremal import solve_extremal, verify_root_bound
from .opnorm import OperatorSpec, discretize, norm_lower_bound
from .quad import QuadConfig
from .report import VerdictStatus, curves_to_csv, dumps
from .sobolev import DiffOperatorSpec, check_full, check_homogeneous, check_multiplier
from .weightlang import parse

EXIT = {VerdictStatus.FINITE: 0, VerdictStatus.INFINITE: 2, VerdictStatus.INCONCLUSIVE: 3}
EXIT_ERROR = 1
EXIT_NO_CONVERGENCE = 4

CONDITION_NAMES = {
    "c21": "local integrability of u^-p'",
    "c22": "doubling condition",
    "c23": "Hardy constants of the reduced coefficients",
    "c24": "top-order coefficient",
    "c25": "images of low-order monomials",
    "m1": "sup of |phi v / u|",
    "m2": "Hardy constant of phi' v",
}


class UsageError(HardyCertError):
    pass


def _describe(label: str) -> str:
    base = label.split(":")[0]
    name = CONDITION_NAMES.get(base)
    return f"{label} ({name})" if name else label


# ---------------------------------------------------------------------------
# problem files

def load_problem(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{path}: malformed TOML: {exc}") from exc
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name)
    if not isinstance(sec, dict):
        raise UsageError(f"missing [{name}] section")
    return sec


def _expr(text, what: str):
    if isinstance(text, (int, float)):
        text = repr(float(text))
    if not isinstance(text, str):
        raise UsageError(f"{what}: expected an expression string")
    try:
        return parse(text)
    except ParseError as exc:
        raise UsageError(f"{what}: {exc}") from exc


def _number(value, what: str) -> float:
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"{what}: expected a number or \"inf\"") from None


def _weights(doc):
    w = _section(doc, "weights")
    return _expr(w.get("u"), "weights.u"), _expr(w.get("v"), "weights.v")


def _exponents(doc) -> Exponents:
    e = _section(doc, "exponents")
    p = _number(e.get("p"), "exponents.p")
    q = _number(e.get("q", p), "exponents.q")
    try:
        return Exponents(p, q)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _grid(doc, args) -> RGrid:
    g = doc.get("grid", {}) if doc else {}
    rmin = args.grid_rmin if args.grid_rmin is not None else g.get("rmin", 1e-4)
    rmax = args.grid_rmax if args.grid_rmax is not None else g.get("rmax", 1e4)
    pd = args.per_decade if args.per_decade is not None else g.get("perDecade", 16)
    try:
        return RGrid(float(rmin), float(rmax), int(pd))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cfg(args) -> QuadConfig:
    return QuadConfig(rel_tol=args.tol) if args.tol is not None else QuadConfig()


# ---------------------------------------------------------------------------
# commands

def cmd_certify(args, doc):
    u, v = _weights(doc)
    exps = _exponents(doc)
    a = _section(doc, "coefficients").get("a")
    if not isinstance(a, list) or not a:
        raise UsageError("coefficients.a must be a non-empty list of expressions")
    coeffs = [_expr(t, f"coefficients.a[{i}]") for i, t in enumerate(a)]
    grid, cfg = _grid(doc, args), _cfg(args)
    rep = hardy_certify(coeffs, u, v, exps, grid, cfg)
    if args.cross_ref_n > 0:
        spec = OperatorSpec(coeffs, u, v, exps)
        est = norm_lower_bound(discretize(spec, args.cross_ref_n, (grid.r_min, grid.r_max)),
                               seed=args.seed)
        total = sum(vd.value for vd in rep.verdicts.values())
        rep.cross_ref = {
            "normLowerBound": est.lower_bound, "N": args.cross_ref_n,
            "domain": [grid.r_min, grid.r_max], "method": est.method,
            "empiricalRatio": (total / est.lower_bound
                               if est.lower_bound > 0 and math.isfinite(total) else None),
        }
    return rep, rep.curves


def cmd_sobolev(args, doc):
    u, v = _weights(doc)
    exps = _exponents(doc)
    op = _section(doc, "operator")
    b = op.get("b")
    if not isinstance(b, list) or len(b) < 2:
        raise UsageError("operator.b must list b_0..b_l with l >= 1")
    if "l" in op and int(op["l"]) != len(b) - 1:
        raise UsageError(f"operator.l = {op['l']} but b has {len(b)} entries")
    spec = DiffOperatorSpec(tuple(_expr(t, f"operator.b[{i}]") for i, t in enumerate(b)))
    fn = check_full if args.full else check_homogeneous
    rep = fn(spec, u, v, exps, _grid(doc, args), _cfg(args))
    return rep, rep.curves


def cmd_multiplier(args, doc):
    u, v = _weights(doc)
    m = _section(doc, "multiplier")
    phi = _expr(m.get("phi"), "multiplier.phi")
    if "p" in m:
        p = _number(m["p"], "multiplier.p")
    else:
        p = _number(_section(doc, "exponents").get("p"), "exponents.p")
    rep = check_multiplier(phi, u, v, p, _grid(doc, args), _cfg(args))
    return rep, rep.curves


def cmd_opnorm(args, doc):
    u, v = _weights(doc)
    exps = _exponents(doc)
    a = _section(doc, "coefficients").get("a")
    if not isinstance(a, list) or not a:
        raise UsageError("coefficients.a must be a non-empty list of expressions")
    coeffs = [_expr(t, f"coefficients.a[{i}]") for i, t in enumerate(a)]
    grid = _grid(doc, args)
    lo = args.domain_min if args.domain_min is not None else grid.r_min
    hi = args.domain_max if args.domain_max is not None else grid.r_max
    T = discretize(OperatorSpec(coeffs, u, v, exps), args.N, (lo, hi))
    est = norm_lower_bound(T, restarts=args.restarts, seed=args.seed)
    out = est.to_dict()
    out["N"], out["domain"] = args.N, [lo, hi]
    return out, {"x": est.nodes, "g": est.maximizer}


def cmd_extremal(args, doc):
    w = _expr(args.w, "--w")
    tol = args.tol if args.tol is not None else 1e-10
    poly = solve_extremal(args.n, args.s, w, args.r, tol)
    rb = verify_root_bound(poly, w)
    out = {**poly.to_dict(), "rootBound": rb.to_dict()}
    return out, {"root": poly.roots}


COMMANDS = {
    "certify": cmd_certify, "sobolev": cmd_sobolev, "multiplier": cmd_multiplier,
    "opnorm": cmd_opnorm, "extremal": cmd_extremal,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hardycert",
                                 description="Certify weighted Hardy-type inequalities.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid-rmin", type=float, default=None)
    common.add_argument("--grid-rmax", type=float, default=None)
    common.add_argument("--per-decade", type=int, default=None)
    common.add_argument("--tol", type=float, default=None, help="relative tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--format", choices=("json", "csv"), default="json",
                        help="what to echo on stdout")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="Hardy-type operator criteria")
    p.add_argument("problem")
    p.add_argument("--cross-ref-n", type=int, default=1024,
                   help="grid size for the norm lower bound (0 disables)")
    p = sub.add_parser("sobolev", parents=[common], help="differential operator criteria")
    p.add_argument("problem")
    p.add_argument("--full", action="store_true", help="include the monomial-image condition")
    p = sub.add_parser("multiplier", parents=[common], help="first-order multiplier criterion")
    p.add_argument("problem")
    p = sub.add_parser("opnorm", parents=[common], help="discrete norm lower bound")
    p.add_argument("problem")
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--domain-min", type=float, default=None)
    p.add_argument("--domain-max", type=float, default=None)
    p.add_argument("--restarts", type=int, default=8)
    p = sub.add_parser("extremal", parents=[common], help="extremal polynomial")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--w", default="1")
    p.add_argument("--r", type=float, required=True)
    return ap


def _manifest(args, doc, outputs) -> dict:
    resolved = {k: v for k, v in sorted(vars(args).items()) if k not in ("command", "out")}
    grid = _grid(doc, args)
    cfg = _cfg(args)
    resolved["grid"] = {"rmin": grid.r_min, "rmax": grid.r_max, "perDecade": grid.per_decade}
    resolved["quad"] = {"absTol": cfg.abs_tol, "relTol": cfg.rel_tol,
                        "maxSubdivisions": cfg.max_subdivisions,
                        "divergenceThreshold": cfg.divergence_threshold}
    return {
        "command": args.command,
        "input": getattr(args, "problem", None),
        "config": resolved,
        "outputs": outputs,
        "version": __version__,
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    out_dir = Path(args.out)
    paths = {"report": str(out_dir / "report.json"), "curves": str(out_dir / "curves.csv"),
             "timing": str(out_dir / "timing.json")}
    try:
        doc = load_problem(args.problem) if hasattr(args, "problem") else {}
        result, curves = COMMANDS[args.command](args, doc)
    except NoConvergence as exc:
        print(f"error: no convergence: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ConditionViolation as exc:
        print(f"error: hypothesis failed: {_describe(exc.condition)}: {exc}", file=sys.stderr)
        if exc.verdict is not None:
            print(dumps({"condition": exc.condition, "verdict": exc.verdict.to_dict()}),
                  file=sys.stderr, end="")
        return EXIT_ERROR
    except (HardyCertError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    manifest = _manifest(args, doc, paths)
    if hasattr(result, "manifest"):
        result.manifest = manifest
        payload = result.to_json()
        status = result.status
    else:
        payload = dumps({**result, "manifest": manifest})
        status = VerdictStatus.FINITE
    csv_text = curves_to_csv(curves)
    out_dir.mkdir(parents=True, exist_ok=True)
    Path(paths["report"]).write_text(payload)
    Path(paths["curves"]).write_text(csv_text)
    Path(paths["timing"]).write_text(
        dumps({"wallClockSeconds": time.perf_counter() - t0, "manifest": manifest}))
    sys.stdout.write(payload if args.format == "json" else csv_text)
    failed = getattr(result, "failed", [])
    if failed:
        print("failed: " + ", ".join(_describe(f) for f in failed), file=sys.stderr)
    return EXIT[status]


if __name__ == "__main__":
    sys.exit(main())
