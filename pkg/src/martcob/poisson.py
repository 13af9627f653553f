"""Normality predicates and solvers for ``prod_k (I - U_k^*) g = f``.

Two independent routes are provided and are meant to check each other: the
adjoint series (and its Cesaro average) and a direct linear solve on the
finite table space, which ``U_k^*`` leaves invariant.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .errors import (InternalIdentityViolation, NoConvergence, NotNormal,
                     NotStrictlyNormal, Unsolvable)
from .linalg import Elimination, solve_float
from .operators import (invariant_projection, members, tail_projection,
                        transfer)
from .space import (MARKOV, CylinderFunction, canonicalize, check_same_system,
                    equal_ae, extend, is_zero, norm_sq, path_weights)

SERIES = "series"
PARTIAL_SERIES = "partial_series"
CESARO = "cesaro"
DIRECT = "direct"

DEFAULT_FLOAT_TOL = 1e-12
DEFAULT_EXACT_TOL = Fraction(1, 10 ** 12)
MAX_TERMS = 10_000
PROBE_HORIZON = 64


@dataclass
class SolveReport:
    solution: CylinderFunction
    method: str
    terms_used: object
    residual_norm_sq: object
    is_normal: bool
    is_strictly_normal: bool
    diagnostics: dict = field(default_factory=dict)


def poisson_operator(g, dirs=None):
    """Apply ``prod_{k in dirs} (I - U_k^*)`` (all directions by default)."""
    for k in dirs or range(1, g.d + 1):
        g = canonicalize(g - transfer(k, g))
    return g


def residual(f, g):
    check_same_system(f, g)
    return canonicalize(f - poisson_operator(g))


def normal_project(f):
    for k in range(1, f.d + 1):
        f = canonicalize(f - invariant_projection(k, f))
    return f


def is_normal(f):
    return all(is_zero(invariant_projection(k, f)) for k in range(1, f.d + 1))


def strict_project(f):
    for k in range(1, f.d + 1):
        f = canonicalize(f - tail_projection(k, f))
    return f


def is_strictly_normal(f):
    return all(is_zero(tail_projection(k, f)) for k in range(1, f.d + 1))


def _default_tol(system, tol):
    if tol is not None:
        return system.scalar(tol)
    return DEFAULT_EXACT_TOL if system.exact else DEFAULT_FLOAT_TOL


def _subdominant_modulus(factor):
    moduli = sorted(np.abs(np.linalg.eigvals(np.array(factor.backward, dtype=float))))
    return float(moduli[-2]) if len(moduli) > 1 else 0.0


def _series_direction(k, f, tol):
    """Sum ``U_k^{*n} f`` over ``n >= 0``; returns (sum, terms, tail estimate)."""
    fac = f.system.factor(k)
    total, term = f, f
    n = 0
    if fac.kind != MARKOV:
        # terms vanish once n exceeds the depth in direction k
        while not is_zero(term):
            if n > f.window[k - 1]:
                raise NotStrictlyNormal(f"series in direction {k} does not terminate")
            term = canonicalize(transfer(k, term))
            n += 1
            total = total + term
        return canonicalize(total), n, 0.0
    history = [norm_sq(term)]
    while history[-1] > tol * tol:
        if n >= MAX_TERMS:
            raise NoConvergence(f"no convergence in direction {k} after {MAX_TERMS} terms")
        if n >= PROBE_HORIZON and history[-1] >= history[-1 - PROBE_HORIZON]:
            raise NoConvergence(f"term norms in direction {k} are not decreasing")
        term = canonicalize(transfer(k, term))
        total = total + term
        n += 1
        history.append(norm_sq(term))
    lam = _subdominant_modulus(fac)
    tail = math.sqrt(float(history[-1])) * lam / (1 - lam) if lam < 1 else math.inf
    return canonicalize(total), n + 1, tail


def solve_partial_series(f, S, tol=None):
    """Sum ``U^{*n} f`` over multi-indices supported on the directions in bitmask ``S``."""
    return _partial_series(f, S, tol)[0]


def _partial_series(f, S, tol):
    if not is_strictly_normal(f):
        raise NotStrictlyNormal("series solver needs a strictly normal input")
    tol = _default_tol(f.system, tol)
    terms, tails = [], []
    g = canonicalize(f)
    for k in range(1, f.d + 1):
        if k in members(S, f.d):
            g, n, tail = _series_direction(k, g, tol)
        else:
            n, tail = 0, 0.0
        terms.append(n)
        tails.append(tail)
    return g, tuple(terms), tails


def solve_series(f, tol=None):
    """Strictly normal solution as the sum of the adjoint series.

    Bernoulli directions terminate exactly; Markov directions are truncated
    once a term's squared norm drops below ``tol**2``.
    """
    full = (1 << f.d) - 1
    g, terms, tails = _partial_series(f, full, tol)
    markov = any(fac.kind == MARKOV for fac in f.system.factors)
    diag = {"tail_bound_estimate": tails, "certified": not markov}
    return SolveReport(g, SERIES, terms, norm_sq(residual(f, g)),
                       is_normal(g), is_strictly_normal(g), diag)


def cesaro_average(f, N):
    """``(N_1...N_d)^{-1} sum_{0 <= M <= N-1} S*_M f``.

    Per direction the double sum collapses to weights ``1 - (n+1)/N_k`` on
    ``U_k^{*n}``, ``n = 0..N_k-2``.
    """
    g = canonicalize(f)
    for k, Nk in enumerate(N, start=1):
        if Nk <= 0:
            return 0 * g
        acc, term = 0 * g, g
        for n in range(Nk - 1):
            acc = acc + term * f.system.scalar(Fraction(Nk - 1 - n, Nk))
            term = canonicalize(transfer(k, term))
        g = canonicalize(acc)
    return g


def _halving(N):
    seq = [tuple(N)]
    while any(n > 1 for n in seq[-1]):
        seq.append(tuple(max(1, (n + 1) // 2) for n in seq[-1]))
    return seq[::-1]


def solve_cesaro(f, N, reference=None):
    """Finite-N Cesaro average; never extrapolated.

    Diagnostics hold the averages' successive squared distances along the
    dyadic sequence ending at ``N`` and, when a series solution exists (or
    ``reference`` is given), the squared distance to it at each step.
    """
    N = tuple(N)
    if not is_normal(f):
        raise NotNormal("Cesaro solver needs a normal input")
    ladder = _halving(N)
    averages = [cesaro_average(f, n) for n in ladder]
    g = averages[-1]
    diag = {"ladder": ladder,
            "successive_distance_sq": [norm_sq(b - a) for a, b in zip(averages, averages[1:])]}
    if reference is None and is_strictly_normal(f):
        try:
            reference = solve_series(f).solution
        except (NoConvergence, NotStrictlyNormal):
            reference = None
    if reference is not None:
        diag["distance_sq_to_series"] = [norm_sq(a - reference) for a in averages]
    return SolveReport(g, CESARO, N, norm_sq(residual(f, g)),
                       is_normal(g), _safe_strict(g), diag)


def _safe_strict(g):
    try:
        return is_strictly_normal(g)
    except Exception:  # periodic factor
        return False


def solve_window(f):
    """Window on which the direct solve runs (Markov directions need depth >= 1)."""
    return tuple(max(w, 1) if fac.kind == MARKOV else w
                 for w, fac in zip(canonicalize(f).window, f.system.factors))


def _basis(system, window, i):
    table = np.zeros(system.table_length(window), dtype=system.dtype)
    table[i] = 1 if system.exact else 1.0
    if system.exact:
        table[:] = [Fraction(v) for v in table]
    return CylinderFunction._raw(system, window, table)


def operator_matrix(system, window):
    """Columns of ``prod_k (I - U_k^*)`` on the window's table space."""
    n = system.table_length(window)
    cols = []
    for i in range(n):
        img = extend(poisson_operator(_basis(system, window, i)), window)
        cols.append(img.flat())
    return np.array(cols, dtype=system.dtype).T


def solve_direct(f):
    """Solve the Poisson equation as a linear system and return the normal solution.

    Only rows on positive-probability cylinders are imposed; the kernel is
    removed afterwards with ``prod_k (I - E^{I_k})``.
    """
    system = f.system
    window = solve_window(f)
    rhs = extend(canonicalize(f), window).flat()
    M = operator_matrix(system, window)
    live = np.flatnonzero(path_weights(system, window).ravel() > 0)
    if system.exact:
        elim = Elimination()
        for r in live:
            elim.add_row({c: M[r, c] for c in np.flatnonzero(M[r] != 0)}, rhs[r])
        x = elim.solution(M.shape[1])
        rank = elim.rank
    else:
        x = solve_float(M[live].astype(float), rhs[live].astype(float), system.tol)
        rank = int(np.linalg.matrix_rank(M[live].astype(float)))
    if x is None:
        raise Unsolvable("f is not in the range of prod_k (I - U_k^*)")
    g0 = CylinderFunction._raw(system, window, x)
    g = normal_project(g0)
    res = norm_sq(residual(f, g))
    if system.exact and res != 0:
        raise InternalIdentityViolation("normalised direct solution has nonzero residual")
    return SolveReport(g, DIRECT, window, res, is_normal(g), _safe_strict(g),
                       {"rank": rank, "unknowns": int(M.shape[1]), "equations": int(len(live))})


def solve(f, method=DIRECT, tol=None, N=None):
    if method == SERIES:
        return solve_series(f, tol)
    if method == CESARO:
        return solve_cesaro(f, N or (8,) * f.d)
    if method == DIRECT:
        return solve_direct(f)
    raise ValueError(f"unknown method {method!r}")


def same_solution(a, b):
    return equal_ae(a, b)
