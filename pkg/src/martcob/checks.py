"""Randomised property suite (fixed seeds) behind the ``check`` command."""
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import decomposition as dec
from . import operators as ops
from . import poisson
from . import statistics as st
from .decomposition import mask_label, members, subsets
from .errors import MartcobError
from .space import (MARKOV, canonicalize, constant, equal_ae, inner_product,
                    is_zero, random_function)


@dataclass
class CheckResult:
    name: str
    system: str
    passed: bool
    detail: str = ""

    def as_dict(self):
        return {"name": self.name, "system": self.system, "pass": self.passed, "detail": self.detail}


def _close(system, a, b):
    return a == b if system.exact else abs(a - b) <= system.tol


def _bernoulli_only(system):
    return all(fac.kind != MARKOV for fac in system.factors)


def _window(system):
    return (2,) * system.d if system.d <= 2 else (1,) * system.d


def _randoms(system, rng, count):
    return [random_function(system, _window(system), rng) for _ in range(count)]


def check_left_inverse(system, rng, count):
    for f in _randoms(system, rng, count):
        for k in range(1, system.d + 1):
            for n in range(5):
                u = tuple(n if i == k - 1 else 0 for i in range(system.d))
                if not equal_ae(ops.transfer_pow(u, ops.koopman_pow(u, f)), f):
                    return False
                e = ops.cond_exp_level(k, n, f)
                if not equal_ae(ops.cond_exp_level(k, n, e), e):
                    return False
    return True


def check_adjoint(system, rng, count):
    fs, gs = _randoms(system, rng, count), _randoms(system, rng, count)
    return all(ops.verify_adjoint(k, f, g) for f, g in zip(fs, gs) for k in range(1, system.d + 1))


def check_commutation(system, rng, count):
    if system.d < 2:
        return True
    return all(ops.verify_complete_commutation(i, j, f)
               for f in _randoms(system, rng, count)
               for i in range(1, system.d + 1) for j in range(1, system.d + 1) if i != j)


def check_projections(system, rng, count):
    """Idempotence, self-adjointness and ``E^{I_k} U_k^* = E^{I_k}``."""
    for f, g in zip(_randoms(system, rng, count), _randoms(system, rng, count)):
        for k in range(1, system.d + 1):
            projs = [lambda x, k=k: ops.cond_exp_level(k, 1, x),
                     lambda x, k=k: ops.invariant_projection(k, x)]
            if system.factor(k).is_aperiodic:
                projs.append(lambda x, k=k: ops.tail_projection(k, x))
            for P in projs:
                if not equal_ae(P(P(f)), P(f)):
                    return False
                if not _close(system, inner_product(P(f), g), inner_product(f, P(g))):
                    return False
            if not equal_ae(ops.invariant_projection(k, ops.transfer(k, f)),
                            ops.invariant_projection(k, f)):
                return False
    return True


def check_projections_commute(system, rng, count):
    d = system.d
    family = []
    for k in range(1, d + 1):
        family.append(lambda x, k=k: ops.cond_exp_level(k, 1, x))
        family.append(lambda x, k=k: ops.cond_exp_level(k, 2, x))
        family.append(lambda x, k=k: ops.invariant_projection(k, x))
    for f in _randoms(system, rng, max(1, count // 2)):
        for P, R in product(family, repeat=2):
            if not equal_ae(P(R(f)), R(P(f))):
                return False
    return True


def check_projection_kernel(system, rng, count):
    for f in _randoms(system, rng, count):
        for S in subsets(system.d):
            r = ops.verify_lemma1(S, f)
            if not (r["rel1"] and r["rel2"] and r["rel3"]):
                return False
    return True


def _strict_randoms(system, rng, count):
    return [poisson.strict_project(f) for f in _randoms(system, rng, count)]


def check_solvers(system, rng, count):
    for f in _strict_randoms(system, rng, count):
        direct = poisson.solve_direct(f)
        series = poisson.solve_series(f)
        if not is_zero(poisson.residual(f, direct.solution)):
            return False
        if _bernoulli_only(system):
            if not (equal_ae(series.solution, direct.solution) and is_zero(poisson.residual(f, series.solution))):
                return False
        elif float(st.norm_sq(series.solution - direct.solution)) > 1e-18:
            return False
    return True


def check_rejects_non_normal(system, rng, count):
    try:
        poisson.solve_direct(constant(system, 1))
    except poisson.Unsolvable:
        pass
    else:
        return False
    try:
        poisson.solve_cesaro(constant(system, 1), (2,) * system.d)
    except poisson.NotNormal:
        return True
    return False


def check_cesaro(system, rng, count):
    if not _bernoulli_only(system) or system.d > 2:
        return True
    for f in _strict_randoms(system, rng, max(1, count // 2)):
        g = poisson.solve_series(f).solution
        dist = [st.norm_sq(poisson.cesaro_average(f, (n,) * system.d) - g) for n in (2, 4, 8)]
        if is_zero(f):
            continue
        if not (dist[0] > dist[1] > dist[2]):
            return False
    return True


def check_decomposition(system, rng, count):
    for f in _strict_randoms(system, rng, count):
        g = poisson.solve_direct(f).solution
        res = dec.decompose(f, g)
        if not res.reassembly_ok or not all(res.md_checks.values()):
            return False
        for S, A in res.components.items():
            for k in members(S, system.d):
                B = dec.coboundary_witness(res.witnesses[S], S, k)
                if not equal_ae(ops.koopman(k, B) - B, A):
                    return False
        if system.d == 1:
            uu = ops.koopman(1, ops.transfer(1, g))
            if not (equal_ae(res.components[0], g - uu)
                    and equal_ae(res.components[1], ops.koopman(1, ops.transfer(1, g)) - ops.transfer(1, g))):
                return False
    return True


def _kernel_element(system, rng):
    """A function annihilated by ``prod_k (I - U_k^*)``: one direction left out."""
    d = system.d
    k = int(rng.integers(1, d + 1))
    window = tuple(0 if i == k - 1 else w for i, w in enumerate(_window(system)))
    return random_function(system, window, rng)


def check_uniqueness(system, rng, count):
    for f in _strict_randoms(system, rng, max(1, count // 2)):
        g = poisson.solve_direct(f).solution
        e = _kernel_element(system, rng)
        if not is_zero(poisson.poisson_operator(e)):
            return False
        verdict = dec.verify_uniqueness(dec.witnesses_from(g), dec.witnesses_from(g + e))
        if not all(verdict.values()):
            return False
    return True


def check_variance(system, rng, count):
    for g in _randoms(system, rng, count):
        s = st.sigma2_empty(g)
        if not _close(system, s["direct"], s["expansion"]):
            return False
        if system.d == 1:
            cv = st.cond_variance_d1(g)
            if not equal_ae(cv["form1"], cv["form2"]):
                return False
            if not _close(system, st.expectation(cv["form1"]), s["direct"]):
                return False
    grid = (1, 2, 3) if system.d == 1 else (1, 2)
    g = _randoms(system, rng, 1)[0]
    return all(st.md_sum_norm_identity(g, N) for N in product(grid, repeat=system.d))


def check_coboundary_bound(system, rng, count):
    grid = (1, 2, 3, 4) if system.d == 1 else (1, 2, 3)
    for g in _randoms(system, rng, max(1, count // 4)):
        for S in range(1, 1 << system.d):
            bound = st.coboundary_bound_sq(g, S)
            scan = st.coboundary_bound_scan(g, S, list(product(grid, repeat=system.d)))
            if any(v > bound for v in scan):
                return False
    return True


PROPERTY_CHECKS = {
    "left_inverse": check_left_inverse,
    "adjointness": check_adjoint,
    "complete_commutation": check_commutation,
    "projection_laws": check_projections,
    "projections_commute": check_projections_commute,
    "projection_kernel_relations": check_projection_kernel,
    "solver_agreement": check_solvers,
    "rejects_non_normal": check_rejects_non_normal,
    "cesaro_convergence": check_cesaro,
    "decomposition_structure": check_decomposition,
    "uniqueness_under_kernel_perturbation": check_uniqueness,
    "variance_laws": check_variance,
    "coboundary_boundedness": check_coboundary_bound,
}


def run_property_suite(systems, seed=0, count=5):
    """Run every property on every named system; exceptions count as failures."""
    results = []
    for label, system in systems.items():
        for i, (name, fn) in enumerate(PROPERTY_CHECKS.items()):
            rng = np.random.default_rng([seed, i])
            try:
                ok, detail = bool(fn(system, rng, count)), ""
            except MartcobError as exc:
                ok, detail = False, f"{type(exc).__name__}: {exc.message}"
            results.append(CheckResult(name, label, ok, detail))
    return results


# ---------------------------------------------------------------- records

def check_decomposition_record(f, g, H, A):
    """Named invariants of a stored decomposition.

    ``residual`` (f, g); ``reassembly`` (f, every A); ``witness[S]`` (g, h_S);
    ``formula[S]`` (h_S, A_S); ``md[S:t]`` (A_S).
    """
    d = f.d
    out = {"residual": is_zero(poisson.residual(f, g)),
           "reassembly": equal_ae(sum(A.values(), 0 * f), f)}
    for S in subsets(d):
        lab = mask_label(S, d)
        out[f"witness[{lab}]"] = equal_ae(dec.h_component(g, S), H[S])
        out[f"formula[{lab}]"] = equal_ae(dec.term(H[S], S), A[S])
        for t, ok in dec.check_md(A[S], S).items():
            out[f"md[{lab}:{t}]"] = ok
    return out


def invariants_touching(obj, d):
    """Invariant names that read the stored object ``obj`` (``"f"``, ``"g"``, ``"h:<S>"``, ``"A:<S>"``)."""
    names = set()
    if obj in ("f", "g"):
        names.add("residual")
    if obj == "f":
        names.add("reassembly")
    for S in subsets(d):
        lab = mask_label(S, d)
        if obj == "g" or obj == f"h:{lab}":
            names.add(f"witness[{lab}]")
        if obj in (f"h:{lab}", f"A:{lab}"):
            names.add(f"formula[{lab}]")
        if obj == f"A:{lab}":
            names.add("reassembly")
            names.update(f"md[{lab}:{t}]" for t in range(1, d + 1) if t not in members(S, d))
    return names


def canonical_components(result):
    return {S: canonicalize(A) for S, A in result.components.items()}
