from fractions import Fraction

import pytest

from martcob import errors
from martcob.space import (
    canonicalize, constant, cylinder, decode, encode, expectation, extend,
    format_scalar, inner_product, make_factor, make_system, norm_sq,
    parse_scalar, random_function,
)

import oracle


def test_parse_and_format_scalars():
    assert parse_scalar("3/4") == Fraction(3, 4)
    assert parse_scalar(0.5) == Fraction(1, 2)
    assert format_scalar(Fraction(0)) == "0/1"
    assert format_scalar(Fraction(-3, 6)) == "-1/2"


def test_markov_stationary_distribution_computed_exactly():
    fac = make_factor("markov", {"Q": [["1/2", "1/2"], ["1/4", "3/4"]]})
    assert fac.pi == (Fraction(1, 3), Fraction(2, 3))
    assert fac.backward[0] == (Fraction(1, 2), Fraction(1, 2))
    assert fac.backward[1] == (Fraction(1, 4), Fraction(3, 4))


@pytest.mark.parametrize("params, err", [
    ({"Q": [["1/2", "1/3"], ["1/4", "3/4"]]}, errors.NonStochasticMatrix),
    ({"Q": [["3/2", "-1/2"], ["1/4", "3/4"]]}, errors.NegativeProbability),
    ({"Q": [["1", "0"], ["0", "1"]]}, errors.NoStationaryDistribution),
    ({"Q": [["1/2", "1/2"], ["1/4", "3/4"]], "pi": ["1/2", "1/2"]}, errors.FactorError),
])
def test_bad_markov_factors_rejected(params, err):
    with pytest.raises(err):
        make_factor("markov", params)


def test_bernoulli_rejects_bad_vectors():
    with pytest.raises(errors.NonStochasticMatrix):
        make_factor("bernoulli", {"probs": ["1/2", "1/3"]})
    with pytest.raises(errors.ZeroMeasureState):
        make_factor("bernoulli", {"probs": ["1", "0"]})


def test_encode_decode_roundtrip(m3xb2):
    window = (2, 1)
    for i in range(m3xb2.table_length(window)):
        assert encode(m3xb2, window, decode(m3xb2, window, i)) == i


def test_expectation_and_inner_match_enumeration(any_system, rng):
    w = (2,) * any_system.d
    for _ in range(5):
        f = random_function(any_system, w, rng)
        g = random_function(any_system, (1,) * any_system.d, rng)
        assert expectation(f) == oracle.expectation(f)
        assert inner_product(f, g) == oracle.inner(f, g)
        assert norm_sq(f) == oracle.inner(f, f)


def test_extend_and_canonicalize_preserve_values(m3xb2, rng):
    f = random_function(m3xb2, (1, 1), rng)
    big = extend(f, (3, 2))
    assert big.window == (3, 2)
    for c in oracle.configs(m3xb2, (3, 2)):
        assert big(*c) == f(c[0][:1], c[1][:1])
    assert canonicalize(big).window == (1, 1)
    assert canonicalize(big) == f


def test_canonicalize_drops_constant_coordinates(b2):
    f = cylinder(b2, (3,), lambda x: x[0])
    assert canonicalize(f).window == (1,)
    assert canonicalize(constant(b2, 2)).window == (0,)


def test_float_mode_arithmetic():
    fs = make_system([make_factor("bernoulli", {"probs": [0.5, 0.5]}, "float")] * 2, "float")
    f = cylinder(fs, (1, 1), lambda x, y: x[0] - y[0])
    assert abs(norm_sq(f) - 0.5) < 1e-12
    assert abs(expectation(f)) < 1e-12


def test_function_equality_is_alignment_aware(b2):
    f = cylinder(b2, (1,), lambda x: x[0])
    g = cylinder(b2, (3,), lambda x: x[0])
    assert f == g
    assert f != g + 1
