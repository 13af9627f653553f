from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from martcob import errors
from martcob import fixtures as F
from martcob.decomposition import (
    check_reversed_md_field, coboundary_witness, decompose, mask_label,
    parse_mask, reassemble, verify_uniqueness, witnesses_from,
)
from martcob.operators import koopman, transfer
from martcob.poisson import solve_direct, strict_project
from martcob.space import cylinder, equal_ae, is_zero, random_function

import oracle

H = Fraction(1, 2)
Q = Fraction(1, 4)


def oracle_d1_components(f, g):
    """``A_empty = g - U U^* g`` and ``A_{1} = U U^* g - U^* g`` by enumeration."""
    s = g.system
    window = (g.window[0] + 1,)
    ustar = {c: oracle.transfer_value(g, 1, c) for c in oracle.configs(s, window)}
    a0, a1 = {}, {}
    for c in oracle.configs(s, window):
        uu = ustar[((c[0][1:] + (0,)),)]
        # U^* g only reads the first w coordinates, so padding the tail is harmless
        a0[c] = g(*c) - uu
        a1[c] = uu - ustar[c]
    return a0, a1


def test_pair_fixture_components(b2):
    f = F.f_pair(b2)
    g = solve_direct(f).solution
    res = decompose(f, g)
    A0 = cylinder(b2, (2,), lambda x: x[0] * x[1] + H * x[0] - H * x[1] - Q)
    A1 = cylinder(b2, (2,), lambda x: (Fraction(x[1]) - x[0]) / 2)
    assert res.components[0] == A0
    assert res.components[1] == A1
    a0, a1 = oracle_d1_components(f, g)
    for c in a0:
        assert A0(*c) == a0[c]
        assert A1(*c) == a1[c]


def test_d1_matches_martingale_coboundary_form(m3, rng):
    f = strict_project(random_function(m3, (2,), rng))
    g = solve_direct(f).solution
    res = decompose(f, g)
    uu = koopman(1, transfer(1, g))
    assert equal_ae(res.components[0], g - uu)
    assert equal_ae(res.components[1], uu - transfer(1, g))


def test_example_d2_structure(b2xb2):
    f = F.f_example_d2(b2xb2)
    g = solve_direct(f).solution
    res = decompose(f, g)
    assert res.reassembly_ok
    assert all(res.md_checks.values())
    assert set(res.md_checks) == {(0, 1), (0, 2), (1, 2), (2, 1)}
    for S, A in res.components.items():
        # oracle check of E_t^1 A_S = 0 by Bayes
        for t in range(1, 3):
            if S >> (t - 1) & 1:
                continue
            for c in oracle.configs(b2xb2, tuple(w + 1 for w in A.window)):
                assert oracle.cond_exp_value(A, t, 1, c) == 0
        assert check_reversed_md_field(A, S, (1, 1))


def test_example_d2_frozen_components(b2xb2):
    # A_S = (d=1 pair component in x) * (y0 - 1/2), checked against the d=1 oracle
    f = F.f_example_d2(b2xb2)
    res = decompose(f, solve_direct(f).solution)
    ypart = lambda y: Fraction(y[0]) - H
    A0 = cylinder(b2xb2, (2, 1), lambda x, y: (x[0] * x[1] + H * x[0] - H * x[1] - Q) * ypart(y))
    A1 = cylinder(b2xb2, (2, 1), lambda x, y: (Fraction(x[1]) - x[0]) / 2 * ypart(y))
    assert res.components[0b00] == A0
    assert res.components[0b01] == A1
    assert is_zero(res.components[0b10]) and is_zero(res.components[0b11])


def test_coboundary_witnesses(m3xb2, rng):
    f = strict_project(random_function(m3xb2, (2, 1), rng))
    res = decompose(f, solve_direct(f).solution)
    for S, A in res.components.items():
        for k in (1, 2):
            if S >> (k - 1) & 1:
                B = coboundary_witness(res.witnesses[S], S, k)
                assert equal_ae(koopman(k, B) - B, A)


def test_decompose_rejects_wrong_g(b2):
    f = F.f_pair(b2)
    with pytest.raises(errors.ResidualNonzero):
        decompose(f, f)


def test_masks():
    assert mask_label(0b01, 2) == "01"
    assert mask_label(0b10, 2) == "10"
    assert parse_mask("11") == 3


def test_uniqueness_trace_levels(b2xb2, rng):
    f = F.f_example_d2(b2xb2)
    g = solve_direct(f).solution
    e = random_function(b2xb2, (0, 2), rng)
    trace = []
    verdict = verify_uniqueness(witnesses_from(g), witnesses_from(g + e), trace)
    assert all(verdict.values())
    assert [s.level for s in trace] == [2, 1, 1, 0]
    assert all(s.off_terms_vanish and s.isolated_zero and s.term_zero for s in trace)


def test_uniqueness_detects_differing_sums(b2xb2, rng):
    f = F.f_example_d2(b2xb2)
    g = solve_direct(f).solution
    H1 = witnesses_from(g)
    H2 = dict(H1)
    H2[0] = H1[0] + random_function(b2xb2, (1, 1), rng)
    with pytest.raises(errors.SumsDiffer):
        verify_uniqueness(H1, H2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), name=st.sampled_from(F.SYSTEM_NAMES))
def test_reassembly_property(seed, name):
    s = F.build_system(name)
    f = strict_project(random_function(s, (2,) * s.d, np.random.default_rng(seed)))
    res = decompose(f, solve_direct(f).solution)
    assert reassemble(res.witnesses) == f
    assert all(res.md_checks.values())
