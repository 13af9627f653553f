"""Batch command line: ``martcob {validate,solve,decompose,variance,sums,simulate,check}``.

Exit codes: 0 ok, 2 parse error, 3 validation/check failure, 4 unsolvable or
precondition failure, 5 internal identity violation, 6 Monte Carlo band failure.
"""
import argparse
import csv
import io
import json
import os
import sys
from fractions import Fraction
from itertools import product

import numpy as np

from . import checks, fixtures, poisson
from . import statistics as st
from .decomposition import decompose, mask_label
from .errors import (FactorError, InternalIdentityViolation, MartcobError,
                     ParseError, PeriodicChainUnsupported, PreconditionError,
                     SizeCapExceeded, SystemMismatch)
from .serialize import (atomic_write, decomposition_from_json,
                        decomposition_to_json, dumps, function_from_json,
                        function_to_json, load_json, solve_report_to_json,
                        system_from_json)
from .space import format_scalar

EXIT_OK, EXIT_PARSE, EXIT_CHECK, EXIT_PRECONDITION, EXIT_INTERNAL, EXIT_MC = 0, 2, 3, 4, 5, 6
CSV_COLUMNS = ("exact_var", "sigma2_empty", "emp_var", "stderr", "pass")


class CommandFailed(Exception):
    def __init__(self, code, doc):
        super().__init__(doc)
        self.code = code
        self.doc = doc


def exit_code_for(exc):
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, FactorError):
        return EXIT_CHECK
    if isinstance(exc, InternalIdentityViolation):
        return EXIT_INTERNAL
    if isinstance(exc, (PreconditionError, PeriodicChainUnsupported, SizeCapExceeded, SystemMismatch)):
        return EXIT_PRECONDITION
    return EXIT_CHECK


# ---------------------------------------------------------------- inputs

def _document(source):
    if os.path.exists(source):
        return load_json(source)
    name = source[:-5] if source.endswith(".json") else source
    try:
        return json.loads(fixtures.fixture_path(name).read_text())
    except FileNotFoundError:
        raise ParseError(f"no such file or shipped fixture: {source}") from None


def load_system(args):
    if not args.system:
        raise ParseError("--system is required")
    system = system_from_json(_document(args.system), arithmetic=args.arithmetic)
    if args.tol is not None and not system.exact:
        system = system.with_tol(float(args.tol))
    return system


def load_function(args, system):
    if not args.function:
        raise ParseError("--function is required")
    return function_from_json(system, _document(args.function))


def parse_multi_index(text, d):
    try:
        parts = [int(p) for p in text.split(",")]
    except ValueError:
        raise ParseError(f"bad multi-index {text!r}") from None
    if len(parts) == 1:
        parts = parts * d
    if len(parts) != d or any(p < 0 for p in parts):
        raise ParseError(f"multi-index {text!r} must have {d} non-negative entries")
    return tuple(parts)


def parse_tol(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"bad tolerance {text!r}") from None


# ---------------------------------------------------------------- outputs

def emit(args, doc, rows=None, d=None):
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"N{k}" for k in range(1, d + 1)] + list(CSV_COLUMNS))
        for row in rows:
            writer.writerow(list(row["N"]) + [row.get(c, "") for c in CSV_COLUMNS])
        text = buf.getvalue()
    else:
        text = dumps(doc)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _s(x):
    return format_scalar(x) if not isinstance(x, (bool, int, str)) else x


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    try:
        system = load_system(args)
    except FactorError as exc:
        raise CommandFailed(EXIT_CHECK, {"status": "fail", **exc.as_dict()}) from exc
    if args.function:
        load_function(args, system)
    probes = {}
    for name in ("left_inverse", "adjointness", "complete_commutation"):
        rng = np.random.default_rng([args.seed, len(probes)])
        probes[name] = bool(checks.PROPERTY_CHECKS[name](system, rng, 5))
    factors = [{"kind": f.kind, "classes": [list(c) for c in f.classes], "periods": list(f.periods),
                "marginal": [_s(p) for p in f.marginal]} for f in system.factors]
    ok = all(probes.values())
    doc = {"status": "ok" if ok else "fail", "d": system.d, "factors": factors, "probes": probes}
    if not ok:
        raise CommandFailed(EXIT_CHECK, doc)
    emit(args, doc)


def cmd_solve(args):
    system = load_system(args)
    f = load_function(args, system)
    tol = parse_tol(args.tol) if args.tol is not None else None
    if args.method == "series":
        report = poisson.solve_series(f, tol)
    elif args.method == "cesaro":
        N = parse_multi_index(args.N or "8", system.d)
        report = poisson.solve_cesaro(f, N)
    else:
        report = poisson.solve_direct(f)
    doc = solve_report_to_json(report)
    if args.method == "direct" and report.is_strictly_normal and poisson.is_strictly_normal(f):
        series = poisson.solve_series(f, tol)
        doc["cross_check"] = {"method": "series",
                              "distance_sq": _s(st.norm_sq(series.solution - report.solution))}
    emit(args, doc)


def cmd_decompose(args):
    system = load_system(args)
    f = load_function(args, system)
    g = poisson.solve_direct(f).solution
    result = decompose(f, g)
    doc = decomposition_to_json(result)
    if not (result.reassembly_ok and all(result.md_checks.values())):
        raise CommandFailed(EXIT_INTERNAL, {"status": "fail", **doc})
    emit(args, doc)


def _grid(N):
    return list(product(*[range(1, n + 1) for n in N]))


def cmd_variance(args):
    system = load_system(args)
    f = load_function(args, system)
    g = poisson.solve_direct(f).solution
    sig = st.sigma2_empty(g)
    if not checks._close(system, sig["direct"], sig["expansion"]):
        raise InternalIdentityViolation("sigma2 direct and expansion forms differ")
    doc = {"sigma2_empty": {k: _s(v) for k, v in sig.items()}}
    if system.d == 1:
        cv = st.cond_variance_d1(g)
        doc["cond_variance"] = {k: function_to_json(v) for k, v in cv.items()}
        doc["cond_variance_mean"] = _s(st.expectation(cv["form1"]))
    rows = []
    N = parse_multi_index(args.N or "3", system.d)
    for n in _grid(N):
        rows.append({"N": n, "exact_var": _s(st.exact_variance(f, n) / _prod(n)),
                     "sigma2_empty": _s(sig["direct"]), "pass": st.md_sum_norm_identity(g, n)})
    doc["table"] = [{**r, "N": list(r["N"])} for r in rows]
    emit(args, doc, rows, system.d)
    if not all(r["pass"] for r in rows):
        raise CommandFailed(EXIT_INTERNAL, {"status": "fail", "reason": "md sum norm identity"})


def _prod(n):
    out = 1
    for x in n:
        out *= x
    return out


def cmd_sums(args):
    system = load_system(args)
    f = load_function(args, system)
    g = poisson.solve_direct(f).solution
    d = system.d
    N = parse_multi_index(args.N or "3", d)
    grid = _grid(N)
    sig = st.sigma2_empty(g)["direct"]
    rows, ok = [], True
    for n in grid:
        lhs, rhs = st.md_sum_norm(g, n)
        good = st.md_sum_norm_identity(g, n)
        ok &= good
        rows.append({"N": n, "md_norm_sq": _s(lhs), "expected": _s(rhs),
                     "exact_var": _s(st.exact_variance(f, n) / _prod(n)),
                     "sigma2_empty": _s(sig), "pass": good})
    scans = {}
    for S in range(1, 1 << d):
        bound = st.coboundary_bound_sq(g, S)
        values = st.coboundary_bound_scan(g, S, grid)
        within = all(v <= bound for v in values) if system.exact else \
            all(v <= bound + system.tol for v in values)
        ok &= within
        scans[mask_label(S, d)] = {"bound_sq": _s(bound), "normalized_norm_sq": [_s(v) for v in values],
                                   "within_bound": within}
    doc = {"md_identity": [{**r, "N": list(r["N"])} for r in rows], "coboundary_scan": scans}
    emit(args, doc, rows, d)
    if not ok:
        raise CommandFailed(EXIT_INTERNAL, None)


def cmd_simulate(args):
    system = load_system(args)
    f = load_function(args, system)
    N = parse_multi_index(args.N or "8", system.d)
    workers = max(1, args.threads or 1)
    report = st.mc_simulate(f, N, args.samples, args.seed, workers=workers, threads=workers)
    doc = report.as_dict()
    row = {"N": N, "exact_var": report.target_sigma2, "sigma2_empty": report.sigma2_empty,
           "emp_var": report.empirical_variance, "stderr": report.stderr, "pass": report.passed}
    emit(args, doc, [row], system.d)
    if not report.passed:
        raise CommandFailed(EXIT_MC, None)


def cmd_check(args):
    if args.system:
        systems = {args.system: load_system(args)}
    else:
        systems = {}
        for name in fixtures.SYSTEM_NAMES:
            s = system_from_json(_document(name), arithmetic=args.arithmetic)
            if args.tol is not None and not s.exact:
                s = s.with_tol(float(args.tol))
            systems[name] = s
    records = list(args.decomposition or [])
    if not args.decomposition and not args.system:
        records = list(fixtures.DECOMPOSITIONS)
    loaded = [(src, decomposition_from_json(_document(src))) for src in records]
    extra = []
    if args.function:
        label, system = next(iter(systems.items()))
        f = load_function(args, system)
        extra.append((args.function, f))

    results = [r.as_dict() for r in checks.run_property_suite(systems, seed=args.seed, count=args.samples_check)]
    for src, (_, f, g, H, A) in loaded:
        for name, ok in checks.check_decomposition_record(f, g, H, A).items():
            results.append({"name": name, "system": src, "pass": ok, "detail": ""})
    for src, f in extra:
        try:
            res = decompose(f, poisson.solve_direct(f).solution)
            H, A = res.witnesses, res.components
            for name, ok in checks.check_decomposition_record(f, res.g, H, A).items():
                results.append({"name": name, "system": src, "pass": ok, "detail": ""})
        except MartcobError as exc:
            results.append({"name": "decompose", "system": src, "pass": False,
                            "detail": f"{type(exc).__name__}: {exc.message}"})
    failing = [f"{r['system']}:{r['name']}" for r in results if not r["pass"]]
    doc = {"status": "ok" if not failing else "fail", "results": results, "failing": failing}
    misconfigured = any(not s.exact and s.tol == 0 for s in systems.values())
    if failing and misconfigured:
        doc["diagnosis"] = "tolerance misconfiguration: float arithmetic compared with tol=0"
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["system", "name", "pass", "detail"])
        for r in results:
            w.writerow([r["system"], r["name"], r["pass"], r["detail"]])
        text = buf.getvalue()
    else:
        text = dumps(doc)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if failing:
        raise CommandFailed(EXIT_CHECK, None)


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "decompose": cmd_decompose,
            "variance": cmd_variance, "sums": cmd_sums, "simulate": cmd_simulate,
            "check": cmd_check}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--system", help="system JSON path or shipped fixture name (b2, b2xb2, m3, m3xb2)")
    common.add_argument("--function", help="function JSON path or shipped fixture name")
    common.add_argument("--method", choices=("series", "cesaro", "direct"), default="direct")
    common.add_argument("--N", help="box corner n1,..,nd (a single value is broadcast)")
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--tol", help="tolerance as a rational or decimal")
    common.add_argument("--threads", type=int, default=1, help="worker cap (also the MC worker count)")
    common.add_argument("--out", help="output path (written atomically); stdout by default")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--arithmetic", choices=("exact", "float"), default=None)
    parser = argparse.ArgumentParser(prog="martcob", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "check":
            p.add_argument("--decomposition", action="append",
                           help="decomposition JSON to verify (repeatable)")
            p.add_argument("--samples-check", type=int, default=5,
                           help="random functions per property")
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        COMMANDS[args.command](args)
    except CommandFailed as exc:
        if exc.doc is not None:
            sys.stdout.write(dumps(exc.doc))
        return exc.code
    except MartcobError as exc:
        sys.stdout.write(dumps({"status": "fail", **exc.as_dict()}))
        return exit_code_for(exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
