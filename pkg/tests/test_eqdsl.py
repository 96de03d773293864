import cmath
import math
import random

import numpy as np
import pytest

from _helpers import fitted_order
from multiscale_lattice.catalog import ENTRIES, get_entry
from multiscale_lattice.eqdsl import (
    DIFF_DIFF,
    FULLY_DISCRETE,
    Jet,
    evaluate,
    linearization,
    parse_equation,
    taylor_jet,
    to_source,
    validate,
)
from multiscale_lattice.errors import (
    DegenerateLinearPart,
    MixedTimeKind,
    NonIntegerShift,
    NonlinearTimeDerivative,
    NonzeroAtOrigin,
    ParseError,
    UnknownFunction,
    UnknownParameter,
    ZeroDenominatorAtOrigin,
)

BURGERS = "i*a^2*dt(u[0]) - (1+a*u[0])*(u[1]-u[0]) - (u[-1]-u[0])/(1+a*u[-1])"


def test_parse_second_difference():
    eq = parse_equation("u[1,0] - 2*u[0,0] + u[-1,0]")
    assert eq.time_kind == FULLY_DISCRETE
    assert set(eq.fields_used) == {(1, 0), (0, 0), (-1, 0)}
    assert eq.params_used == ()


def test_parse_burgers():
    eq = parse_equation(BURGERS)
    assert eq.time_kind == DIFF_DIFF
    assert eq.dt_used == ((0,),)
    assert set(eq.params_used) == {"a"}


def test_equals_sign_stores_difference():
    a = parse_equation("u[1,0] = 2*u[0,1]")
    b = parse_equation("u[1,0] - 2*u[0,1]")
    vals = {(1, 0): 0.3, (0, 1): -0.7}
    assert evaluate(a, {}, vals) == pytest.approx(evaluate(b, {}, vals))


@pytest.mark.parametrize(
    "src, exc, where",
    [
        ("u[1,0] + exp(", ParseError, None),
        ("u[0,0] + dt(u[1])", MixedTimeKind, None),
        ("u[0.5,0]", NonIntegerShift, None),
        ("sin(u[0,0])", UnknownFunction, None),
        ("u[0,0] + * 2", ParseError, (1, 10)),
        ("", ParseError, None),
    ],
)
def test_parse_errors(src, exc, where):
    with pytest.raises(exc) as info:
        parse_equation(src)
    if where:
        assert (info.value.line, info.value.column) == where


def test_error_position_multiline():
    with pytest.raises(ParseError) as info:
        parse_equation("u[0,0]\n  + )")
    assert info.value.line == 2


def test_whitespace_insensitive():
    a = parse_equation("u[ 1 , 0 ]*a  -  exp( u[0,0] )")
    b = parse_equation("u[1,0]*a-exp(u[0,0])")
    assert a.root == b.root


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.id)
def test_round_trip(entry):
    eq = parse_equation(entry.source)
    again = parse_equation(to_source(eq))
    assert again.root == eq.root


def test_round_trip_precedence():
    src = "-(u[0,0] - u[1,0])^2/(a*(1 + u[0,1])) - (-u[0,0])^3"
    eq = parse_equation(src)
    assert parse_equation(to_source(eq)).root == eq.root


def test_hietarinta_valid_with_unequal_parameters():
    eq = parse_equation(get_entry("hietarinta").source)
    info = validate(eq, {"e1": 1, "e2": 2, "o1": 3, "o2": 0.5})
    assert abs(info.value_at_origin) < 1e-14


def test_burgers_a_zero_is_valid():
    info = validate(parse_equation(BURGERS), {"a": 0.0})
    assert info.linear_nonzero


def test_nonzero_at_origin():
    with pytest.raises(NonzeroAtOrigin):
        validate(parse_equation("u[0,0] + 1"), {})


def test_zero_denominator():
    with pytest.raises(ZeroDenominatorAtOrigin):
        validate(parse_equation("u[0,0]/(u[1,0]) + u[0,1]"), {})


def test_degenerate_linear_part():
    with pytest.raises(DegenerateLinearPart):
        validate(parse_equation("u[0,0]^2"), {})


def test_missing_parameter():
    with pytest.raises(UnknownParameter):
        validate(parse_equation("a*u[0,0] + u[0,1]"), {})


def test_nonlinear_time_derivative():
    with pytest.raises(NonlinearTimeDerivative):
        taylor_jet(parse_equation("dt(u[0])*(1 + u[0]) - u[1]"), {})


def test_exp_jet():
    x = Jet.var(1, 0)
    assert x.exp().c == pytest.approx({(0,): 1, (1,): 1, (2,): 0.5, (3,): 1 / 6})


def test_geometric_jet():
    a = 0.7
    x = Jet.var(1, 0)
    r = (1 + a * x).reciprocal()
    assert r.c == pytest.approx({(0,): 1, (1,): -a, (2,): a * a, (3,): -(a**3)})


def test_jet_truncates_at_cubic():
    x = Jet.var(2, 0)
    y = Jet.var(2, 1)
    p = (x + y) * (x + y) * (x + y) * (x + y)
    assert all(sum(k) <= 3 for k in p.c)
    assert not p.c


def test_toda_hirota_symbol():
    entry = get_entry("toda-hirota")
    a = entry.defaults["a"]
    poly = taylor_jet(parse_equation(entry.source), entry.params())
    lin = poly.linear_terms()
    rng = random.Random(5)
    ratios = []
    for _ in range(50):
        K = cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        W = cmath.exp(1j * rng.uniform(-math.pi, math.pi))
        sym = sum(c * K ** s[0] * W ** s[1] for s, c in lin.items())
        ref = (W - 1) ** 2 - a * a * (W - K) ** 2 / K
        ratios.append(sym / ref)
    assert max(abs(r - 1) for r in ratios) < 1e-12


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.id)
def test_jet_linear_part_matches_finite_differences(entry):
    eq = parse_equation(entry.source)
    poly = taylor_jet(eq, entry.params())
    lin = poly.linear_terms()
    fd = linearization(eq, entry.params())
    for slot, c in fd.items():
        assert abs(lin.get(slot, 0) - c) < 1e-7 * max(1, abs(c))


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.id)
def test_jet_remainder_is_quartic(entry):
    eq = parse_equation(entry.source)
    params = entry.params()
    poly = taylor_jet(eq, params)
    rng = np.random.default_rng(11)
    orders = []
    for _ in range(20):
        v = {s: rng.normal() for s in eq.fields_used}
        dv = {s: rng.normal() for s in eq.dt_used}
        errs = []
        epsilons = [1e-2, 5e-3, 2.5e-3]
        for eps in epsilons:
            f = {s: eps * x for s, x in v.items()}
            d = {s: eps * x for s, x in dv.items()}
            exact = evaluate(eq, params, f, d)
            approx = poly({s: f[s] for s in poly.slots}, d)
            errs.append(abs(exact - approx))
        if min(errs) > 1e-15:
            orders.append(fitted_order(epsilons, errs))
        else:
            # polynomial equations of degree three are reproduced exactly
            assert max(errs) < 1e-13
    assert not orders or min(orders) >= 3.7
