import dataclasses

import numpy as np
import pytest

from _helpers import model_poly
from multiscale_lattice.catalog import get_entry, model_ids
from multiscale_lattice.eqdsl import parse_equation
from multiscale_lattice.reduction import reduce_equation
from multiscale_lattice.validation import GridEnvelope, PlaneWaveEnvelope, equation_residual, refinement_order

EPS = [1e-2, 5e-3, 2.5e-3]
OVERRIDES = {"burgers-fully-discrete": {"b": 0.2}}


def setup(model, kappa=1.0):
    entry = get_entry(model)
    poly, params = model_poly(model, OVERRIDES.get(model))
    r = reduce_equation(poly, kappa, real=entry.real_field)
    return parse_equation(entry.source), params, r


@pytest.mark.parametrize("model", model_ids())
def test_residual_is_fourth_order(model):
    eq, params, r = setup(model)
    residuals = [equation_residual(eq, params, r, eps) for eps in EPS]
    assert refinement_order(EPS, residuals) >= 3.8


@pytest.mark.parametrize("model", ["toda-hirota", "toda-naive"])
def test_wrong_nonlinear_coefficient_is_detected(model):
    eq, params, r = setup(model)
    bad = dataclasses.replace(r, rho2=r.rho2 * 1.2)
    residuals = [equation_residual(eq, params, bad, eps) for eps in EPS]
    assert refinement_order(EPS, residuals) < 3.3


def test_plane_wave_solves_reduced_equation():
    _, _, r = setup("toda-naive")
    env = PlaneWaveEnvelope.for_result(r)
    X = np.linspace(-2, 2, 7)
    T = 0.3
    lhs = 1j * env.value(X, T, dT=1)
    rhs = r.rho1 * env.value(X, T, dX=2) + r.rho2 * abs(env.value(X, T)) ** 2 * env.value(X, T)
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_grid_envelope_interpolates_and_integrates():
    L, N = 20.0, 64
    h = L / N
    X = h * np.arange(N)
    values = np.exp(1j * 2 * np.pi * X / L) + 0.5
    env = GridEnvelope(values, h, 1.0, 0.0)
    x = np.array([0.37, 5.1, 13.9])
    assert np.max(np.abs(env.value(x, 0.0) - (np.exp(1j * 2 * np.pi * x / L) + 0.5))) < 1e-12
    dx = env.value(x, 0.0, dX=1)
    assert np.max(np.abs(dx - 1j * 2 * np.pi / L * np.exp(1j * 2 * np.pi * x / L))) < 1e-12
    assert env.total_increment(lambda a, t: env.value(a, t)) == pytest.approx(0.5 * L)
