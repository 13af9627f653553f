"""Koopman, transfer and conditional-expectation operators on cylinder functions.

Directions are 1-based.  sigma-fields are never built; each one exists only
through its conditional-expectation operator.
"""
from dataclasses import dataclass

import numpy as np

from .errors import PeriodicChainUnsupported, SameDirection
from .space import (MARKOV, CylinderFunction, canonicalize, check_same_system,
                    equal_ae, extend, inner_product, offsets)

KOOPMAN = "koopman"
TRANSFER = "transfer"
CONDEXP = "condexp"
TAIL = "tail"
INVARIANT = "invariant"


@dataclass(frozen=True)
class OperatorTag:
    kind: str
    direction: int
    power: int = 1

    def apply(self, f):
        if self.kind == KOOPMAN:
            return koopman_pow(_unit(f.d, self.direction, self.power), f)
        if self.kind == TRANSFER:
            return transfer_pow(_unit(f.d, self.direction, self.power), f)
        if self.kind == CONDEXP:
            return cond_exp_level(self.direction, self.power, f)
        if self.kind == TAIL:
            return tail_projection(self.direction, f)
        if self.kind == INVARIANT:
            return invariant_projection(self.direction, f)
        raise ValueError(self.kind)


def _unit(d, k, n=1):
    return tuple(n if i == k - 1 else 0 for i in range(d))


def _check_direction(f, k):
    if not 1 <= k <= f.d:
        raise ValueError(f"direction {k} outside 1..{f.d}")


def _axis_shape(ndim, axes, sizes):
    shape = [1] * ndim
    for ax, n in zip(axes, sizes):
        shape[ax] = n
    return shape


def koopman(k, f):
    """``U_k f = f o T_k``: shift direction ``k`` by one coordinate."""
    _check_direction(f, k)
    off = offsets(f.window)[k - 1]
    window = list(f.window)
    window[k - 1] += 1
    table = np.expand_dims(f.table, off)
    table = np.broadcast_to(table, f.system.shape(window))
    return CylinderFunction._raw(f.system, window, table)


def transfer(k, f):
    """``U_k^*``, the L2 adjoint of ``U_k``, via the backward kernel of factor ``k``."""
    _check_direction(f, k)
    w = f.window[k - 1]
    if w == 0:
        return f
    fac = f.system.factor(k)
    off = offsets(f.window)[k - 1]
    window = list(f.window)
    if fac.kind != MARKOV:
        p = fac.array(fac.probs).reshape(_axis_shape(f.table.ndim, [off], [fac.alphabet_size]))
        window[k - 1] = w - 1
        return CylinderFunction._raw(f.system, window, (f.table * p).sum(axis=off))
    if w == 1:
        window[k - 1] = 2
        f = extend(f, window)
    # result[b0, ...] = sum_a K[b0, a] f[a, b0, ...]
    K = fac.array(fac.backward)
    n = fac.alphabet_size
    kern = K.T.reshape(_axis_shape(f.table.ndim, [off, off + 1], [n, n]))
    window[k - 1] = max(w - 1, 1)
    return CylinderFunction._raw(f.system, window, (f.table * kern).sum(axis=off))


def koopman_pow(n, f):
    for k, nk in enumerate(n, start=1):
        for _ in range(nk):
            f = koopman(k, f)
    return f


def transfer_pow(n, f):
    for k, nk in enumerate(n, start=1):
        for _ in range(nk):
            f = canonicalize(transfer(k, f))
    return f


def cond_exp_level(k, n, f):
    """``E_k^n = U_k^n U_k^{*n}``: conditional expectation given ``T_k^{-n} F``."""
    if n < 0:
        raise ValueError("level must be non-negative")
    u = _unit(f.d, k, n)
    return koopman_pow(u, transfer_pow(u, f))


def cond_exp_multi(m, f):
    """``E^m``, the product of the per-direction conditional expectations."""
    for k, mk in enumerate(m, start=1):
        if mk:
            f = cond_exp_level(k, mk, f)
    return f


def invariant_projection(k, f):
    """Conditional expectation onto ``T_k``-invariant functions.

    The invariant sigma-field of factor ``k`` is generated by the closed class
    of the first coordinate; within a class the factor is integrated out.
    """
    _check_direction(f, k)
    w = f.window[k - 1]
    if w == 0:
        return f
    fac = f.system.factor(k)
    off = offsets(f.window)[k - 1]
    axes = tuple(range(off, off + w))
    weights = fac.path_weights(w).reshape(
        _axis_shape(f.table.ndim, axes, [fac.alphabet_size] * w))
    weighted = f.table * weights
    classes = fac.classes
    window = list(f.window)
    if len(classes) == 1:
        window[k - 1] = 0
        return CylinderFunction._raw(f.system, window, weighted.sum(axis=axes))
    window[k - 1] = 1
    pieces = []
    for states in classes:
        mass = sum(fac.marginal[s] for s in states)
        part = np.take(weighted, list(states), axis=off).sum(axis=axes) / mass
        pieces.append(part)
    lookup = fac.class_of()
    table = np.stack([pieces[lookup[a]] for a in range(fac.alphabet_size)], axis=off)
    return CylinderFunction._raw(f.system, window, table)


def tail_projection(k, f):
    """``E_k^infinity``; equals the invariant projection for aperiodic factors."""
    _check_direction(f, k)
    fac = f.system.factor(k)
    if not fac.is_aperiodic:
        raise PeriodicChainUnsupported(f"factor {k} has periods {fac.periods}")
    return invariant_projection(k, f)


# ---------------------------------------------------------------- verifiers

def verify_adjoint(k, f, g):
    check_same_system(f, g)
    return inner_product(koopman(k, f), g) == inner_product(f, transfer(k, g)) \
        if f.system.exact else \
        abs(inner_product(koopman(k, f), g) - inner_product(f, transfer(k, g))) <= f.system.tol


def verify_complete_commutation(i, j, f):
    if i == j or f.d < 2:
        raise SameDirection("complete commutation needs two distinct directions")
    return koopman(i, transfer(j, f)) == transfer(j, koopman(i, f))


def one_minus(op):
    return lambda f: f - op(f)


def apply_product(ops, f):
    for op in ops:
        f = op(f)
    return f


def members(mask, d):
    return [k for k in range(1, d + 1) if mask >> (k - 1) & 1]


def verify_lemma1(S, f):
    """Per-function witnesses of the three relations between invariant projections
    and ``prod_{k in S} (I - U_k^*)``.  ``S`` is a bitmask over directions.
    """
    dirs = members(S, f.d)
    proj = [one_minus(lambda g, k=k: invariant_projection(k, g)) for k in dirs]
    diff = [one_minus(lambda g, k=k: transfer(k, g)) for k in dirs]
    diff_fwd = [one_minus(lambda g, k=k: koopman(k, g)) for k in dirs]

    Df = apply_product(diff, f)
    Pf = apply_product(proj, f)
    rel1 = equal_ae(apply_product(proj, Df), Df) and equal_ae(apply_product(diff, Pf), Df)
    rel2 = equal_ae(Df - apply_product(proj, Df), 0 * f) and \
        equal_ae(apply_product(diff, f - Pf), 0 * f)
    zero = 0 * f
    k_transfer = equal_ae(Df, zero)
    k_koopman = equal_ae(apply_product(diff_fwd, f), zero)
    k_proj = equal_ae(Pf, zero)
    rel3 = k_transfer == k_koopman == k_proj
    return {"rel1": rel1, "rel2": rel2, "rel3": rel3,
            "in_kernel": k_transfer}
