"""The ``2^d``-term martingale-coboundary representation built from a Poisson solution.

Subsets of directions are int bitmasks: bit ``k-1`` set means direction ``k``
is in the subset.  Operator products run over directions in ascending order.
"""
from dataclasses import dataclass, field
from itertools import product

from .errors import InternalIdentityViolation, ResidualNonzero, SumsDiffer
from .operators import (cond_exp_level, cond_exp_multi, koopman, koopman_pow,
                        members, transfer)
from .poisson import residual
from .space import canonicalize, equal_ae, is_zero


def subsets(d):
    return range(1 << d)


def subsets_of_size(d, r):
    return [S for S in subsets(d) if bin(S).count("1") == r]


def mask_label(S, d):
    """Bit string with direction ``d`` first, e.g. ``"01"`` is {1} for d=2."""
    return format(S, f"0{d}b")


def parse_mask(label):
    return int(label, 2)


def _shift_minus_identity(k, f):
    return koopman(k, f) - f


def _martingale_part(l, f):
    return f - koopman(l, transfer(l, f))


def h_component(g, S):
    """``h_S = prod_{m in S} U_m^* g``."""
    for m in members(S, g.d):
        g = canonicalize(transfer(m, g))
    return g


def term(h, S):
    """``prod_{k in S}(U_k - I) prod_{l not in S}(I - U_l U_l^*) h``."""
    d = h.d
    inside = members(S, d)
    for l in range(1, d + 1):
        if l not in inside:
            h = canonicalize(_martingale_part(l, h))
    for k in inside:
        h = canonicalize(_shift_minus_identity(k, h))
    return h


def component(g, S):
    return term(h_component(g, S), S)


def coboundary_witness(h, S, k):
    """``B`` with ``term(h, S) = (U_k - I) B`` for ``k`` in ``S``."""
    d = h.d
    inside = members(S, d)
    for l in range(1, d + 1):
        if l not in inside:
            h = canonicalize(_martingale_part(l, h))
    for j in inside:
        if j != k:
            h = canonicalize(_shift_minus_identity(j, h))
    return h


def check_md(A, S):
    """``E_t^1 A = 0`` for every direction ``t`` outside ``S``."""
    return {t: is_zero(cond_exp_level(t, 1, A))
            for t in range(1, A.d + 1) if t not in members(S, A.d)}


def check_reversed_md_field(A, S, grid):
    """Reversed martingale-difference property of ``(U^{m+n} A)`` over a small grid.

    ``m`` ranges over the full box ``0..grid`` and ``n`` over the box restricted
    to directions outside ``S``.  Both the adaptedness and the vanishing
    conditional expectations are checked.
    """
    d = A.d
    outside = [l for l in range(1, d + 1) if l not in members(S, d)]
    box = [range(g + 1) for g in grid]
    nbox = [range(g + 1) if k + 1 in outside else range(1) for k, g in enumerate(grid)]
    for m in product(*box):
        for n in product(*nbox):
            p = tuple(a + b for a, b in zip(m, n))
            shifted = koopman_pow(p, A)
            if not equal_ae(cond_exp_multi(p, shifted), shifted):
                return False
            for l in outside:
                q = tuple(pk + (1 if k + 1 == l else 0) for k, pk in enumerate(p))
                if not is_zero(cond_exp_multi(q, shifted)):
                    return False
    return True


@dataclass
class DecompositionResult:
    f: object
    g: object
    components: dict
    witnesses: dict
    reassembly_ok: bool
    md_checks: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.g.d

    def relabel(self):
        """Components keyed by tuples of directions, e.g. ``(1, 2)``."""
        return {tuple(members(S, self.d)): A for S, A in self.components.items()}


def decompose(f, g):
    if not is_zero(residual(f, g)):
        raise ResidualNonzero("g does not solve the Poisson equation for f")
    d = f.d
    witnesses = {S: h_component(g, S) for S in subsets(d)}
    components = {S: term(witnesses[S], S) for S in subsets(d)}
    total = sum(components.values(), 0 * f)
    ok = equal_ae(total, f)
    if not ok:
        raise InternalIdentityViolation("components do not reassemble f despite zero residual")
    md = {}
    for S, A in components.items():
        for t, v in check_md(A, S).items():
            md[(S, t)] = v
    return DecompositionResult(f, g, components, witnesses, ok, md)


def reassemble(H):
    """Sum of the representation terms for a witness family ``{S: h_S}``."""
    items = list(H.items())
    total = 0 * items[0][1]
    for S, h in items:
        total = total + term(h, S)
    return canonicalize(total)


@dataclass
class EliminationStep:
    level: int
    subset: int
    off_terms_vanish: bool
    isolated_zero: bool
    kernel_consistent: bool
    term_zero: bool


def verify_uniqueness(H, H2, trace=None):
    """Term-by-term comparison of two representations with equal sums.

    Runs the constructive elimination: with ``D_S = H2_S - H_S`` and the
    vanishing sum of terms, for each level ``r = d, d-1, ..., 0`` and each
    ``S`` of size ``r`` apply ``prod_{k in S} U_k^*``.  Every remaining term
    of level ``<= r`` other than ``S`` is annihilated; the surviving piece
    ``prod_{k in S}(I - U_k^*) prod_{l not in S}(I - U_l U_l^*) D_S`` is zero,
    and the kernel identity turns that into ``term(D_S, S) = 0``.  The
    level's terms are then subtracted from the equation.

    Returns ``{S: bool}``; pass a list as ``trace`` to collect the steps.
    """
    any_h = next(iter(H.values()))
    d = any_h.d
    D = {S: canonicalize(H2[S] - H[S]) for S in subsets(d)}
    terms = {S: term(D[S], S) for S in subsets(d)}
    if not is_zero(sum(terms.values(), 0 * any_h)):
        raise SumsDiffer("the two representations do not sum to the same function")
    remaining = set(subsets(d))
    verdict = {}
    for r in range(d, -1, -1):
        for S in subsets_of_size(d, r):
            dirs = members(S, d)

            def adjoints(x):
                for k in dirs:
                    x = canonicalize(transfer(k, x))
                return x

            images = {S2: adjoints(terms[S2]) for S2 in remaining}
            off_ok = all(is_zero(v) for S2, v in images.items() if S2 != S)
            isolated = canonicalize(sum(images.values(), 0 * any_h))
            # the surviving image written in closed form
            x = D[S]
            for l in range(1, d + 1):
                if l not in dirs:
                    x = canonicalize(_martingale_part(l, x))
            closed = x
            for k in dirs:
                closed = canonicalize(closed - transfer(k, closed))
            if not equal_ae(closed, images[S]):
                raise InternalIdentityViolation(f"isolated term for S={S} has the wrong form")
            isolated_zero = is_zero(isolated)
            term_zero = is_zero(terms[S])
            # kernel identity: the isolated image vanishes iff the term does
            consistent = isolated_zero == is_zero(closed) == term_zero
            if trace is not None:
                trace.append(EliminationStep(r, S, off_ok, isolated_zero, consistent, term_zero))
            if not (off_ok and consistent):
                raise InternalIdentityViolation(f"elimination failed at level {r}, S={S}")
            verdict[S] = isolated_zero
        for S in subsets_of_size(d, r):
            remaining.discard(S)
    return verdict


def witnesses_from(g):
    return {S: h_component(g, S) for S in subsets(g.d)}
