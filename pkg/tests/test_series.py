import cmath
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from _helpers import expressions, series_close
from multiscale_lattice import series as S
from multiscale_lattice.errors import ComplexFieldModel, FullyDiscreteModel

W = S.make_factor(0, 1)
WBAR = S.make_factor(0, 1, conj=True)
CARRIER = (0.7, 0.3)


def expr(*terms, real=True):
    return S.MSExpr.from_terms([S.MSTerm(c, j, S.monomial_harmonic(m), m) for c, j, m in terms], real=real)


def test_normalize_merges_and_drops():
    e = S.MSExpr({(1, 1, (W,)): 2.0, (0, 0, ()): 1e-20})
    e.data[(1, 1, (W,))] += 3.0
    n = S.normalize(e)
    assert n.data == {(1, 1, (W,)): 5.0}


def test_normalize_threshold():
    x = S.make_factor(1, 0)
    e = expr((1e-20, 1, (W,)), (1.0, 2, (x,)))
    assert list(S.normalize(e).data) == [(2, 0, (x,))]


def test_mul_harmonics_add():
    p = S.mul(expr((1, 1, (W,))), expr((1, 1, (WBAR,))))
    assert p.data == {(2, 0, tuple(sorted((W, WBAR)))): 1}


def test_mul_truncates():
    a = S.make_factor(1, 0)
    b = S.make_factor(2, 0)
    ab = S.mul(expr((1, 1, (W,))), expr((1, 2, (a,))))
    assert len(ab) == 1 and next(iter(ab.data))[0] == 3
    assert len(S.mul(ab, expr((1, 2, (b,))))) == 0


def test_conjugate_definition():
    c = S.conjugate(expr((2j, 1, (W,))))
    assert c.data == {(1, -1, (WBAR,)): -2j}


def test_conjugate_self_conjugate_term():
    e = expr((1.5, 2, (W, WBAR)))
    assert series_close(S.conjugate(e), e)


def test_conjugate_rejects_complex_field():
    with pytest.raises(ComplexFieldModel):
        S.conjugate(expr((1, 1, (W,)), real=False))


def test_shift_first_order():
    kappa = CARRIER[0]
    e = S.MSExpr.from_terms([S.MSTerm(1, 0, 1, (W,))], max_order=1)
    out = S.apply_shift(e, 1, 0, CARRIER)
    K = cmath.exp(1j * kappa)
    expected = expr((K, 0, (W,)), (K, 1, (W.with_deriv((1, 0, 0)),)))
    assert series_close(out, expected)


def test_shift_zero_is_identity():
    e = expr((1, 1, (W,)), (0.5j, 2, (W, WBAR)))
    assert series_close(S.apply_shift(e, 0, 0, CARRIER), e)


def test_time_derivative_example():
    omega = CARRIER[1]
    out = S.apply_time_derivative(expr((1, 0, (W,)), real=False), CARRIER)
    expected = expr(
        (-1j * omega, 0, (W,)),
        (1, 1, (W.with_deriv((0, 1, 0)),)),
        (1, 2, (W.with_deriv((0, 0, 1)),)),
        real=False,
    )
    assert series_close(out, expected)


def test_time_derivative_of_constant_vanishes():
    assert len(S.apply_time_derivative(S.MSExpr.constant(3.0, real=False), CARRIER)) == 0


def test_time_derivative_needs_continuous_time():
    with pytest.raises(FullyDiscreteModel):
        S.apply_time_derivative(expr((1, 1, (W,))), CARRIER, continuous=False)


def test_bucket():
    e = expr((1, 2, (W, WBAR)), (1, 1, (W,)))
    assert S.bucket(e, 2, 0) == [(1, tuple(sorted((W, WBAR))))]
    assert S.bucket(e, 3, 2) == []


def test_term_harmonic_checked():
    with pytest.raises(ValueError):
        S.MSTerm(1, 1, 2, (W,))


def test_frame_change():
    e = expr((1, 1, (W.with_deriv((0, 1, 0)),)), (2, 1, (W.with_deriv((1, 0, 0)),)))
    out = S.frame_change(e, 0.25)
    assert out.frame == S.MOVING
    assert out.data == {(1, 1, (W.with_deriv((1, 0, 0)),)): 2 - 0.25}


def test_differentiate_product_rule():
    e = expr((1, 0, (W, WBAR)))
    d = S.differentiate(e, 0)
    assert len(d) == 2 and all(c == 1 for c in d.data.values())


def test_substitute_rule():
    x = S.make_factor(1, 2)
    rule = S.Rule(0, expr((0.5, 0, (W, W))))
    out = S.substitute(expr((2, 2, (x,))), {(1, 2): rule})
    assert out.data == {(2, 2, (W, W)): 1.0}


def test_pretty_format():
    line = S.pretty(expr((1, 1, (W.with_deriv((1, 0, 0)),))))
    assert line == "(+1.000000000000e+00+0.000000000000e+00j) * eps^1 * E^1 * d[n1]^1 w[0,1](+)"


# ---------------------------------------------------------------------------
# properties (100 randomized cases each)


@given(expressions())
def test_normalize_idempotent(e):
    once = S.normalize(e)
    assert S.normalize(once).data == once.data


@given(expressions(), expressions())
def test_mul_commutative(a, b):
    assert series_close(S.mul(a, b), S.mul(b, a))


@given(expressions(), expressions(), expressions())
def test_mul_associative(a, b, c):
    assert series_close(S.mul(S.mul(a, b), c), S.mul(a, S.mul(b, c)))


@given(expressions())
def test_conjugation_involution(e):
    assert series_close(S.conjugate(S.conjugate(e)), e)


@given(expressions(), st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2), st.integers(-2, 2))
def test_shift_composition(e, n1, m1, n2, m2):
    twice = S.apply_shift(S.apply_shift(e, n1, m1, CARRIER), n2, m2, CARRIER)
    once = S.apply_shift(e, n1 + n2, m1 + m2, CARRIER)
    assert series_close(twice, once)


@given(expressions(real=False, harmonics=(0, 1)), expressions(real=False, harmonics=(0, 1)), st.complex_numbers(
    max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_time_derivative_linear(a, b, c):
    lhs = S.apply_time_derivative(a + b.scaled(c), CARRIER)
    rhs = S.apply_time_derivative(a, CARRIER) + S.apply_time_derivative(b, CARRIER).scaled(c)
    assert series_close(lhs, rhs, rel=1e-12)


@given(expressions())
def test_harmonic_matches_monomial(e):
    assert all(h == S.monomial_harmonic(m) for (_, h, m) in e.data)


def test_shift_preserves_harmonic_phase():
    e = expr((1, 0, (W,)))
    k, w = CARRIER
    out = S.apply_shift(e, 3, 2, CARRIER)
    assert out.data[(0, 1, (W,))] == pytest.approx(cmath.exp(1j * (3 * k - 2 * w)))
    assert math.isclose(abs(out.data[(0, 1, (W,))]), 1.0)
