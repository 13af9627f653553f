"""JSON documents for systems, functions, solve reports and decompositions.

Rationals are written as ``"p/q"`` strings; tables use the mixed-radix order
of :mod:`martcob.space`.
"""
import json
import os
import tempfile

from .decomposition import mask_label, parse_mask
from .errors import FactorError, ParseError, WindowError
from .space import (BERNOULLI, EXACT, FLOAT, CylinderFunction, SystemSpec,
                    format_scalar, make_factor)


def system_to_json(system):
    factors = []
    for fac in system.factors:
        if fac.kind == BERNOULLI:
            factors.append({"kind": fac.kind, "probs": [format_scalar(p) for p in fac.probs]})
        else:
            factors.append({"kind": fac.kind,
                            "Q": [[format_scalar(q) for q in row] for row in fac.Q],
                            "pi": [format_scalar(p) for p in fac.pi]})
    return {"factors": factors, "arithmetic": system.arithmetic}


def system_from_json(doc, arithmetic=None):
    """Build a system; factor validation errors propagate unchanged."""
    try:
        arithmetic = arithmetic or doc.get("arithmetic", EXACT)
        specs = doc["factors"]
        if arithmetic not in (EXACT, FLOAT) or not isinstance(specs, list) or not specs:
            raise ParseError("system document needs a non-empty factor list and a valid arithmetic")
        factors = []
        for spec in specs:
            params = {k: v for k, v in spec.items() if k != "kind"}
            factors.append(make_factor(spec["kind"], params, arithmetic))
    except FactorError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError, AttributeError) as exc:
        raise ParseError(f"bad system document: {exc}") from exc
    return SystemSpec(tuple(factors), arithmetic)


def function_to_json(f):
    return {"window": list(f.window), "table": [format_scalar(v) for v in f.flat()]}


def function_from_json(system, doc):
    try:
        return CylinderFunction(system, doc["window"], doc["table"])
    except (KeyError, TypeError, ValueError, ZeroDivisionError, WindowError) as exc:
        raise ParseError(f"bad function document: {exc}") from exc


def solve_report_to_json(report):
    def conv(v):
        if isinstance(v, (list, tuple)):
            return [conv(x) for x in v]
        if isinstance(v, dict):
            return {str(k): conv(x) for k, x in v.items()}
        if isinstance(v, bool) or v is None or isinstance(v, (int, str)):
            return v
        return format_scalar(v)
    return {"method": report.method,
            "solution": function_to_json(report.solution),
            "terms_used": conv(report.terms_used),
            "residual_norm_sq": format_scalar(report.residual_norm_sq),
            "is_normal": report.is_normal,
            "is_strictly_normal": report.is_strictly_normal,
            "diagnostics": conv(report.diagnostics)}


def decomposition_to_json(result):
    d = result.d
    return {"system": system_to_json(result.f.system),
            "f": function_to_json(result.f),
            "g": function_to_json(result.g),
            "components": [{"S": mask_label(S, d),
                            "h": function_to_json(result.witnesses[S]),
                            "A": function_to_json(result.components[S])}
                           for S in sorted(result.components)],
            "flags": {"reassembly_ok": result.reassembly_ok,
                      "md_checks": {f"{mask_label(S, d)}:{t}": v
                                    for (S, t), v in sorted(result.md_checks.items())}}}


def decomposition_from_json(doc):
    """Return ``(system, f, g, {S: h}, {S: A})`` without re-verifying anything."""
    try:
        system = system_from_json(doc["system"])
        f = function_from_json(system, doc["f"])
        g = function_from_json(system, doc["g"])
        H, A = {}, {}
        for item in doc["components"]:
            S = parse_mask(item["S"])
            H[S] = function_from_json(system, item["h"])
            A[S] = function_from_json(system, item["A"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad decomposition document: {exc}") from exc
    if sorted(H) != list(range(1 << system.d)):
        raise ParseError("decomposition must list every subset exactly once")
    return system, f, g, H, A


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def atomic_write(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(doc):
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"
