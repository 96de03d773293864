import math

import numpy as np
import pytest

from multiscale_lattice.catalog import get_entry, model_ids
from multiscale_lattice.errors import CarrierNotPeriodic, GridMismatch, UnstableScheme
from multiscale_lattice.simulate import (
    SIMULATION_PRESETS,
    Envelope,
    LatticeField,
    _fourier_shift,
    check_linear_stability,
    compare_envelopes,
    extract_envelope,
    measured_frequency,
    modulated_initial,
    nls_hamiltonian,
    nls_mass,
    run_lattice,
    run_nls,
    sech_envelope,
    simulate_envelope,
)

N = 1024
EPS = 0.05
KAPPA = 2 * math.pi * 100 / N


def sech_env(eps=EPS, n=N):
    return Envelope.from_function(sech_envelope(1.0, 2.0, eps * n / 2), n, eps)


def preset(model):
    return get_entry(model).params(SIMULATION_PRESETS[model]["params"])


# -- initial data and demodulation


def test_zero_envelope_gives_zero_field():
    f = modulated_initial(Envelope(np.zeros(N, complex), EPS), KAPPA, 0.3, 0.5, EPS)
    assert not np.any(f.values)


def test_real_field_amplitude():
    f = modulated_initial(sech_env(), KAPPA, 0.3, 0.5, EPS)
    assert np.max(np.abs(f.values[0])) == pytest.approx(2 * EPS, rel=1e-3)


def test_complex_field_modulus():
    env = sech_env()
    f = modulated_initial(env, KAPPA, 0.3, 0.5, EPS, real=False)
    assert np.max(np.abs(np.abs(f.values[0]) - EPS * np.abs(env.values))) < 1e-15


def test_carrier_must_fit_ring():
    with pytest.raises(CarrierNotPeriodic):
        modulated_initial(sech_env(n=64), 1.0, 0.3, 0.5, EPS)


def test_round_trip():
    env = sech_env()
    f = modulated_initial(env, KAPPA, 0.3, 0.5, EPS)
    back = extract_envelope(f.values[0], KAPPA, 0.3, 0, EPS)
    assert compare_envelopes(back, env)["rel_l2"] <= 3 * EPS


def test_second_harmonic_is_filtered():
    env = sech_env()
    n = np.arange(N)
    clean = modulated_initial(env, KAPPA, 0.0, 0.0, EPS).values[0]
    dirty = clean + 2 * EPS * (EPS * env.values**2 * np.exp(2j * KAPPA * n)).real
    a = extract_envelope(clean, KAPPA, 0.0, 0, EPS)
    b = extract_envelope(dirty, KAPPA, 0.0, 0, EPS)
    assert compare_envelopes(b, a)["rel_l2"] <= 1e-3


def test_zero_field_extracts_to_zero():
    assert not np.any(extract_envelope(np.zeros(N), KAPPA, 0.3, 5, EPS).values)


# -- comparison


def test_compare_identical_and_rotated():
    env = sech_env()
    same = compare_envelopes(env, env)
    assert all(same[k] == 0 for k in ("rel_l2", "sup", "rel_l2_aligned", "sup_aligned"))
    rotated = Envelope(env.values * np.exp(0.7j), env.spacing)
    assert compare_envelopes(rotated, env)["rel_l2_aligned"] < 1e-12


def test_compare_random_envelopes():
    rng = np.random.default_rng(0)
    a = Envelope(rng.normal(size=256) + 1j * rng.normal(size=256), 0.1)
    b = Envelope(rng.normal(size=256) + 1j * rng.normal(size=256), 0.1)
    assert compare_envelopes(a, b)["rel_l2"] > 0.5


def test_grid_mismatch():
    with pytest.raises(GridMismatch):
        compare_envelopes(Envelope(np.ones(8), 0.1), Envelope(np.ones(16), 0.1))
    with pytest.raises(GridMismatch):
        compare_envelopes(Envelope(np.ones(8), 0.1), Envelope(np.ones(8), 0.2))


# -- lattice steppers


@pytest.mark.parametrize("model", model_ids())
def test_zero_data_stays_zero(model):
    levels = 1 if model in ("hietarinta", "burgers-dd") else 2
    dtype = float if get_entry(model).real_field else complex
    f0 = LatticeField(np.zeros((levels, 32), dtype), EPS, (KAPPA, 0.0), get_entry(model).time_kind,
                      get_entry(model).real_field)
    hist = run_lattice(model, preset(model), f0, 5, stride=1)
    assert all(not np.any(s) for s in hist.snapshots)


@pytest.mark.parametrize("model", model_ids())
def test_linear_frequency(model):
    measured, predicted = measured_frequency(model, preset(model), 1.0)
    assert abs(measured - predicted) < 1e-6


def test_burgers_dd_integrator_order():
    env = Envelope.from_function(sech_envelope(1.0, 1.0, 3.2), 64, 0.1)
    f0 = modulated_initial(env, 2 * math.pi * 8 / 64, 0.0, 0.0, 0.1, levels=1, real=False,
                           time_kind="differential-difference")
    p = {"a": 1.0}

    def final(h):
        return run_lattice("burgers-dd", p, f0, 2, h=h).final

    ref = final(0.1 / 16)
    e1 = np.max(np.abs(final(0.1) - ref))
    e2 = np.max(np.abs(final(0.05) - ref))
    assert math.log2(e1 / e2) >= 3.8


def test_unstable_parameters_rejected():
    with pytest.raises(UnstableScheme):
        check_linear_stability("kdv-sym", {"a": 1.0, "b": 1.0}, N)
    with pytest.raises(UnstableScheme):
        check_linear_stability("burgers-fully-discrete", {"a": 1.0, "b": 0.5}, N)
    check_linear_stability("kdv-sym", {"a": 0.5, "b": 1.0}, N)


# -- envelope equation


def test_linear_schrodinger_conserves_mass():
    env = Envelope.from_function(lambda X: np.exp(-((X - 12.8) ** 2)), 256, 0.1)
    out = run_nls(0.7, 0.0, env, 1.0, 500)
    assert abs(nls_mass(out) - nls_mass(env)) <= 1e-10 * nls_mass(env)


def test_nls_invariants():
    env = Envelope.from_function(sech_envelope(1.0, 1.5, 12.8), 256, 0.1)
    out = run_nls(0.5, -1.2, env, 2.0, 2000)
    assert abs(nls_mass(out) - nls_mass(env)) <= 1e-10 * nls_mass(env)
    h0 = nls_hamiltonian(env, 0.5, -1.2)
    assert abs(nls_hamiltonian(out, 0.5, -1.2) - h0) <= 1e-6 * abs(h0)


def test_bright_soliton_keeps_shape():
    rho1, rho2, eta = -0.4, -1.3, 1.0
    b = math.sqrt(rho2 / (2 * rho1))
    env = Envelope.from_function(lambda X: eta / np.cosh(eta * b * (X - 12.8)), 512, 0.05)
    out = run_nls(rho1, rho2, env, 1.0, 2000)
    mod0 = np.abs(env.values)
    assert np.linalg.norm(np.abs(out.values) - mod0) / np.linalg.norm(mod0) < 1e-3


def test_splitting_is_second_order():
    env = Envelope.from_function(sech_envelope(1.0, 1.0, 6.4), 128, 0.1)
    ref = run_nls(0.5, 1.0, env, 1.0, 3200).values
    e1 = np.linalg.norm(run_nls(0.5, 1.0, env, 1.0, 50).values - ref)
    e2 = np.linalg.norm(run_nls(0.5, 1.0, env, 1.0, 100).values - ref)
    assert math.log2(e1 / e2) >= 1.9


# -- end to end


@pytest.fixture(scope="module")
def toda_run():
    return simulate_envelope("toda-naive", eps=EPS)


@pytest.mark.parametrize("model", ["kdv-sym"])
def test_end_to_end_kdv(model):
    assert simulate_envelope(model, eps=EPS).metrics["rel_l2_aligned"] <= 0.15


def test_end_to_end_toda(toda_run):
    assert toda_run.metrics["rel_l2_aligned"] <= 0.15
    assert toda_run.twist != 0


def test_engine_nonlinear_coefficient_fits_lattice_best(toda_run):
    r = toda_run
    env0 = sech_env()
    m = r.history.steps[-1]
    errors = {}
    for factor in (0.6, 0.8, 1.0, 1.2, 1.4):
        nls = run_nls(r.rho1, r.rho2 * factor, env0, EPS * EPS * m)
        moved = Envelope(_fourier_shift(nls.values, r.v_g * m), EPS)
        errors[factor] = compare_envelopes(r.lattice, moved)["rel_l2_aligned"]
    assert min(errors, key=errors.get) == 1.0


def test_error_shrinks_with_eps():
    coarse = simulate_envelope("toda-hirota", eps=0.1).metrics["rel_l2_aligned"]
    fine = simulate_envelope("toda-hirota", eps=0.05).metrics["rel_l2_aligned"]
    assert coarse / fine > 1.6


def test_leading_order_start_is_worse_for_toda(toda_run):
    lo = simulate_envelope("toda-naive", eps=EPS, leading_order=True)
    assert lo.initial == "leading-order"
    assert lo.metrics["rel_l2_aligned"] > 3 * toda_run.metrics["rel_l2_aligned"]


def test_runs_are_deterministic():
    a = simulate_envelope("burgers-dd", eps=0.1)
    b = simulate_envelope("burgers-dd", eps=0.1)
    assert np.array_equal(a.history.final, b.history.final)
