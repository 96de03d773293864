"""Direct lattice simulation and comparison with the reduced envelope equation."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import kernels
from .catalog import get_entry
from .dispersion import dispersion_branches, hietarinta_constraint, linear_symbol, solve_dispersion
from .eqdsl import DIFF_DIFF, parse_equation, taylor_jet
from .errors import BlowUp, CarrierNotPeriodic, FixedPointDivergence, GridMismatch, UnstableScheme
from .reduction import ReductionResult, reduce_equation
from .validation import FieldEvaluator, GridEnvelope, synthesize

BLOWUP_LIMIT = 1.0
SWEEP_TOL = 1e-12

# Carrier and parameter overrides used when a simulation request leaves them
# open.  KdV at a = 1 and fully discrete Burgers at b = 0.5 put ring
# wavenumbers on or past the leapfrog stability limit; kappa = 0.4 keeps the
# KdV carrier away from the inflection of its dispersion curve near kappa = 1.
SIMULATION_PRESETS: dict[str, dict] = {
    "toda-hirota": {"kappa": 1.0, "params": {}},
    "toda-naive": {"kappa": 1.0, "params": {}},
    "kdv-sym": {"kappa": 0.4, "params": {"a": 0.5}},
    "kdv-asym": {"kappa": 0.4, "params": {"a": 0.5}},
    "burgers-dd": {"kappa": 1.0, "params": {}},
    "burgers-fully-discrete": {"kappa": 1.0, "params": {"b": 0.2}},
    "hietarinta": {"kappa": 1.0, "params": {}},
}


@dataclass
class LatticeField:
    """Time levels ``values[-1]`` (newest) ... ``values[0]`` on a periodic ring."""

    values: np.ndarray
    eps: float
    carrier: tuple[float, float]
    time_kind: str
    real: bool = True
    twist: float = 0.0  # u[n + N] - u[n]; nonzero when a mean field leaves net strain

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values))
        if not np.all(np.isfinite(self.values)):
            raise BlowUp("non-finite lattice values")

    @property
    def N(self) -> int:
        return self.values.shape[-1]


@dataclass
class Envelope:
    """Slow envelope on the grid ``X_j = spacing * j`` at slow time ``T``."""

    values: np.ndarray
    spacing: float
    T: float = 0.0

    @property
    def X(self) -> np.ndarray:
        return self.spacing * np.arange(len(self.values))

    @classmethod
    def from_function(cls, f: Callable[[np.ndarray], np.ndarray], N: int, spacing: float) -> "Envelope":
        X = spacing * np.arange(N)
        return cls(np.asarray(f(X), dtype=complex), spacing)


@dataclass
class History:
    steps: list[int]
    snapshots: list[np.ndarray]
    stride: int
    dt: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]


def sech_envelope(amplitude: float, width: float, center: float) -> Callable[[np.ndarray], np.ndarray]:
    return lambda X: amplitude / np.cosh((X - center) / width)


def check_periodic(kappa: float, N: int, tol: float = 1e-9) -> int:
    j = kappa * N / (2 * math.pi)
    if abs(j - round(j)) > tol:
        raise CarrierNotPeriodic(f"kappa * N / 2pi = {j:.6g} is not an integer: carrier does not fit the ring")
    return int(round(j))


def quantize_kappa(kappa: float, N: int) -> float:
    return 2 * math.pi * round(kappa * N / (2 * math.pi)) / N


# ---------------------------------------------------------------------------
# Initial data


def _fourier_shift(values: np.ndarray, shift: float) -> np.ndarray:
    """Evaluate the trigonometric interpolant at ``j - shift`` (sites)."""
    k = np.fft.fftfreq(len(values)) * 2 * math.pi
    return np.fft.ifft(np.fft.fft(values) * np.exp(-1j * k * shift))


def modulated_initial(
    env0: Envelope,
    kappa: float,
    omega: float,
    v_g: float,
    eps: float,
    *,
    levels: int = 2,
    real: bool = True,
    time_kind: str = "fully-discrete",
) -> LatticeField:
    """Leading-order modulated carrier on ``levels`` consecutive time rows.

    Row ``m`` carries the envelope transported by ``v_g m`` sites.
    """
    N = len(env0.values)
    check_periodic(kappa, N)
    n = np.arange(N)
    rows = []
    for m in range(levels):
        A = _fourier_shift(env0.values, v_g * m) if m else env0.values
        u = eps * A * np.exp(1j * (kappa * n - omega * m))
        rows.append(2 * u.real if real else u)
    return LatticeField(np.array(rows), eps, (kappa, omega), time_kind, real)


def synthesized_initial(
    red: ReductionResult,
    env0: Envelope,
    eps: float,
    *,
    levels: int = 2,
    time_kind: str = "fully-discrete",
) -> LatticeField:
    """Initial rows built from every solved cascade field, not just the carrier.

    Bound harmonics and mean fields are included, so the lattice starts on the
    modulated wave instead of shedding free long waves.  Integrated mean fields
    leave a net jump across the ring, returned as ``twist``.
    """
    N = len(env0.values)
    kappa = red.point.kappa
    check_periodic(kappa, N)
    genv = GridEnvelope(env0.values, env0.spacing, red.rho1, red.rho2)
    n = np.arange(N, dtype=float)
    rows = [synthesize(red, eps, n, float(m), genv) for m in range(levels)]
    twist = FieldEvaluator(red, genv).twist(eps)
    return LatticeField(np.array(rows), eps, red.point.carrier, time_kind, red.real, twist)


def check_linear_stability(model: str, params: Mapping[str, float], N: int, sep: float = 1e-6) -> None:
    """Every ring wavenumber must carry a full set of distinct real frequencies.

    A missing or double root of a multi-level scheme grows without bound, so a
    run would only measure round-off amplification.
    """
    entry = get_entry(model)
    L = linear_symbol(taylor_jet(parse_equation(entry.source), entry.params(params)))
    if entry.time_kind == DIFF_DIFF:
        return
    shifts = [s[1] for s in L.terms]
    levels = max(shifts) - min(shifts)
    if levels < 2:
        return
    for j in range(1, N // 2 + 1):
        k = 2 * math.pi * j / N
        omegas = dispersion_branches(L, k) if j < N / 2 else dispersion_branches(L, math.pi - 1e-12)
        gaps = np.diff(sorted(omegas + [omegas[0] + 2 * math.pi])) if omegas else []
        if len(omegas) < levels or min(gaps) < sep:
            raise UnstableScheme(
                f"{model}: time stepping is not strictly stable at wavenumber {k:.6g} "
                f"({len(omegas)} of {levels} real frequencies); change parameters"
            )


# ---------------------------------------------------------------------------
# Lattice steppers


def _roll(u, k, twist=0.0):
    """``out[n] = u[n + k]`` on a ring where ``u[n + N] = u[n] + twist``."""
    out = np.roll(u, -k)
    if twist and k > 0:
        out[-k:] += twist
    elif twist and k < 0:
        out[:-k] -= twist
    return out


def _toda_naive(rows, p, twist):
    um, u = rows[-2], rows[-1]
    a = p["a"]
    return 2 * u - um + a * (np.exp(_roll(u, -1, twist) - u) - np.exp(u - _roll(u, 1, twist)))


def _kdv(sym: bool):
    def step(rows, p, twist):
        um, u = rows[-2], rows[-1]
        a, b = p["a"], p["b"]
        lin = a / 4 * (_roll(u, 3) - 3 * _roll(u, 1) + 3 * _roll(u, -1) - _roll(u, -3))
        other = _roll(u, -1) if sym else u
        return um + lin - b / 2 * (_roll(u, 1) ** 2 - other**2)

    return step


def _burgers_rhs(u, a):
    return (1 + a * u) * (_roll(u, 1) - u) + (_roll(u, -1) - u) / (1 + a * _roll(u, -1))


def _burgers_fd(rows, p, twist):
    um, u = rows[-2], rows[-1]
    a, b = p["a"], p["b"]
    return um - 2j * b / (a * a) * _burgers_rhs(u, a)


def _toda_hirota(rows, p, twist):
    u2, sweeps = kernels.toda_hirota_row(rows[-2].real, rows[-1].real, p["a"] ** 2, SWEEP_TOL, 100, twist)
    if sweeps < 0:
        raise FixedPointDivergence("toda-hirota row sweep did not converge")
    return np.asarray(u2)


def _hietarinta(rows, p, twist):
    u1, sweeps = kernels.hietarinta_row(rows[-1].real, p["e1"], p["e2"], p["o1"], p["o2"], SWEEP_TOL)
    if sweeps < 0:
        raise FixedPointDivergence("hietarinta row sweep did not converge")
    return np.asarray(u1)


# equations that see only differences of u, so a ring may carry net strain
DIFFERENCE_MODELS = frozenset({"toda-naive", "toda-hirota"})

STEPPERS = {
    "toda-naive": (_toda_naive, 2),
    "toda-hirota": (_toda_hirota, 2),
    "kdv-sym": (_kdv(True), 2),
    "kdv-asym": (_kdv(False), 2),
    "burgers-fully-discrete": (_burgers_fd, 2),
    "hietarinta": (_hietarinta, 1),
}


def burgers_dd_h(a: float, h: float | None = None) -> float:
    hmax = 0.1 * a * a
    return hmax if h is None else min(h, hmax)


def _rk4(u, h, a):
    f = lambda x: -1j / (a * a) * _burgers_rhs(x, a)  # noqa: E731
    k1 = f(u)
    k2 = f(u + 0.5 * h * k1)
    k3 = f(u + 0.5 * h * k2)
    k4 = f(u + h * k3)
    return u + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def run_lattice(
    model: str,
    params: Mapping[str, float],
    f0: LatticeField,
    steps: int,
    *,
    stride: int | None = None,
    h: float | None = None,
) -> History:
    """Advance ``steps`` time steps (or time units of length 1 for burgers-dd).

    Snapshots are kept every ``stride`` steps (default ``ceil(1/eps)``) and at the end.
    """
    stride = stride or max(1, math.ceil(1 / f0.eps)) if f0.eps > 0 else (stride or 1)
    if model == "hietarinta":
        hietarinta_constraint(params)
    rows = [r.copy() for r in f0.values]
    snaps, idx = [rows[-1].copy()], [0]
    if model == "burgers-dd":
        hh = burgers_dd_h(params["a"], h)
        sub = max(1, math.ceil(1 / hh - 1e-12))
        hh = 1.0 / sub
        u = rows[-1].astype(complex)
        for m in range(1, steps + 1):
            for _ in range(sub):
                u = _rk4(u, hh, params["a"])
            _guard(u, model, m)
            if m % stride == 0 or m == steps:
                snaps.append(u.copy())
                idx.append(m)
        return History(idx, snaps, stride, 1.0, {"model": model, "h": hh})
    try:
        step, levels = STEPPERS[model]
    except KeyError:
        raise ValueError(f"model {model!r} has no lattice stepper") from None
    if len(rows) < levels:
        raise ValueError(f"{model} needs {levels} initial time levels")
    rows = rows[-levels:]
    start = levels - 1
    if start:
        snaps, idx = [rows[-1].copy()], [start]
    for m in range(start + 1, start + steps + 1):
        new = step(rows, params, f0.twist)
        _guard(new, model, m, f0.twist if model in DIFFERENCE_MODELS else None)
        rows = rows[1:] + [new]
        if (m - start) % stride == 0 or m == start + steps:
            snaps.append(new.copy())
            idx.append(m)
    return History(idx, snaps, stride, 1.0, {"model": model})


def _guard(u, model, m, twist=None):
    size = np.abs(u) if twist is None else np.abs(_roll(u, 1, twist) - u)
    if not np.all(np.isfinite(u)) or np.max(size) > BLOWUP_LIMIT:
        raise BlowUp(f"{model}: max|u| exceeded {BLOWUP_LIMIT} at step {m}")


# ---------------------------------------------------------------------------
# Envelope equation


def _nonlinear(A, rho2: complex, dt: float):
    if rho2 == 0:
        return A
    if abs(rho2.imag) <= 1e-14 * abs(rho2):
        return A * np.exp(-1j * rho2.real * np.abs(A) ** 2 * dt)
    # exact flow of i A_T = rho2 |A|^2 A for complex rho2
    s0 = np.abs(A) ** 2
    x = -2 * rho2.imag * s0 * dt
    if np.any(x <= -1):
        raise BlowUp("envelope blows up within one splitting step")
    return A * np.exp(1j * rho2 * np.log1p(x) / (2 * rho2.imag))


def run_nls(rho1: complex, rho2: complex, env0: Envelope, slow_T: float, steps: int = 2000) -> Envelope:
    """Strang split-step Fourier for ``i A_T = rho1 A_XX + rho2 |A|^2 A`` on the periodic grid."""
    rho1, rho2 = complex(rho1), complex(rho2)
    if rho1 == 0:
        raise ValueError("rho1 must be nonzero")
    A = np.asarray(env0.values, dtype=complex).copy()
    N = len(A)
    k = 2 * math.pi * np.fft.fftfreq(N, d=env0.spacing)
    dt = slow_T / steps
    half = np.exp(1j * rho1 * k * k * dt / 2)
    for _ in range(steps):
        A = np.fft.ifft(half * np.fft.fft(A))
        A = _nonlinear(A, rho2, dt)
        A = np.fft.ifft(half * np.fft.fft(A))
        if not np.all(np.isfinite(A)) or np.max(np.abs(A)) > 1e6:
            raise BlowUp("envelope integration overflowed")
    return Envelope(A, env0.spacing, env0.T + slow_T)


def nls_mass(env: Envelope) -> float:
    return float(np.sum(np.abs(env.values) ** 2) * env.spacing)


def nls_hamiltonian(env: Envelope, rho1: float, rho2: float) -> float:
    A = env.values
    k = 2 * math.pi * np.fft.fftfreq(len(A), d=env.spacing)
    Ax = np.fft.ifft(1j * k * np.fft.fft(A))
    return float(np.sum(0.5 * rho2 * np.abs(A) ** 4 - rho1 * np.abs(Ax) ** 2) * env.spacing)


# ---------------------------------------------------------------------------
# Demodulation and comparison


def extract_envelope(u: np.ndarray, kappa: float, omega: float, m: float, eps: float, twist: float = 0.0) -> Envelope:
    """Demodulate by the carrier, keep ``|wavenumber| <= kappa/2`` and divide by eps."""
    u = np.asarray(u)
    N = len(u)
    n = np.arange(N)
    if twist:
        u = u - twist * n / N  # periodic again; the remaining kink is filtered out
    z = u * np.exp(-1j * (kappa * n - omega * m))
    zh = np.fft.fft(z)
    k = 2 * math.pi * np.fft.fftfreq(N)
    zh[np.abs(k) > abs(kappa) / 2] = 0
    return Envelope(np.fft.ifft(zh) / eps, eps, eps * eps * m)


def compare_envelopes(a: Envelope, b: Envelope) -> dict:
    if len(a.values) != len(b.values) or not math.isclose(a.spacing, b.spacing, rel_tol=1e-12):
        raise GridMismatch("envelopes live on different grids")
    x, y = np.asarray(a.values), np.asarray(b.values)
    ny = np.linalg.norm(y)
    scale = ny if ny > 0 else 1.0
    smax = np.max(np.abs(y)) if ny > 0 else 1.0
    inner = np.vdot(x, y)
    phase = np.angle(inner) if inner != 0 else 0.0
    xa = x * np.exp(1j * phase)
    return {
        "rel_l2": float(np.linalg.norm(x - y) / scale),
        "sup": float(np.max(np.abs(x - y)) / smax),
        "rel_l2_aligned": float(np.linalg.norm(xa - y) / scale),
        "sup_aligned": float(np.max(np.abs(xa - y)) / smax),
        "phase": float(phase),
    }


# ---------------------------------------------------------------------------
# End to end


@dataclass
class EndToEnd:
    model: str
    params: dict
    kappa: float
    omega: float
    v_g: float
    eps: float
    N: int
    steps: int
    rho1: complex
    rho2: complex
    metrics: dict
    lattice: Envelope
    reduced: Envelope
    history: History = field(repr=False, default=None)
    initial: str = "synthesized"
    twist: float = 0.0

    def manifest(self) -> dict:
        return {
            "model": self.model,
            "params": self.params,
            "kappa": self.kappa,
            "omega": self.omega,
            "v_g": self.v_g,
            "eps": self.eps,
            "N": self.N,
            "steps": self.steps,
            "stride": self.history.stride if self.history else None,
            "initial": self.initial,
            "twist": self.twist,
            "rho1": {"re": self.rho1.real, "im": self.rho1.imag},
            "rho2": {"re": self.rho2.real, "im": self.rho2.imag},
            "metrics": self.metrics,
        }


def simulate_envelope(
    model: str,
    params: Mapping[str, float] | None = None,
    *,
    kappa: float | None = None,
    eps: float = 0.05,
    N: int = 1024,
    slow_time: float = 1.0,
    amplitude: float = 1.0,
    width: float = 2.0,
    branch: int | None = None,
    nls_steps: int = 2000,
    leading_order: bool = False,
) -> EndToEnd:
    """Lattice run vs. reduced-equation run from the same sech envelope.

    Unset ``kappa`` and parameters fall back to ``SIMULATION_PRESETS`` and then
    to the catalog defaults.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    entry = get_entry(model)
    preset = SIMULATION_PRESETS.get(model, {"kappa": 1.0, "params": {}})
    params = entry.params({**preset["params"], **(params or {})})
    kappa = preset["kappa"] if kappa is None else kappa
    kappa = quantize_kappa(kappa, N)
    check_linear_stability(model, params, N)
    p = taylor_jet(parse_equation(entry.source), params)
    red: ReductionResult = reduce_equation(p, kappa, real=entry.real_field, branch=branch)
    omega, v = red.point.omega, red.point.v_g
    L = eps * N
    env0 = Envelope.from_function(sech_envelope(amplitude, width, L / 2), N, eps)
    levels = 1 if model in ("hietarinta", "burgers-dd") else 2
    if leading_order:
        f0 = modulated_initial(env0, kappa, omega, v, eps, levels=levels, real=entry.real_field,
                               time_kind=entry.time_kind)
    else:
        f0 = synthesized_initial(red, env0, eps, levels=levels, time_kind=entry.time_kind)
    steps = int(round(slow_time / eps**2))
    hist = run_lattice(model, params, f0, steps)
    m_final = hist.steps[-1]
    lat = extract_envelope(hist.final, kappa, omega, m_final, eps, f0.twist)
    red_env = run_nls(red.rho1, red.rho2, env0, eps * eps * m_final, nls_steps)
    moved = Envelope(_fourier_shift(red_env.values, v * m_final), eps, red_env.T)
    metrics = compare_envelopes(lat, moved)
    return EndToEnd(
        model, dict(params), kappa, omega, v, eps, N, steps, red.rho1, red.rho2, metrics, lat, moved, hist,
        "leading-order" if leading_order else "synthesized", f0.twist,
    )


def write_envelope_csv(path, env: Envelope) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for j, z in enumerate(np.asarray(env.values, dtype=complex)):
            w.writerow([j, repr(float(z.real)), repr(float(z.imag))])


def write_history_csv(path, hist: History) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "index", "re", "im"])
        for m, snap in zip(hist.steps, hist.snapshots):
            for j, z in enumerate(np.asarray(snap, dtype=complex)):
                w.writerow([m, j, repr(float(z.real)), repr(float(z.imag))])


def measured_frequency(model: str, params: Mapping[str, float], kappa: float, N: int = 64, steps: int = 40,
                       amplitude: float = 1e-6, branch: int | None = None) -> tuple[float, float]:
    """Frequency of a small plane wave advanced by the lattice stepper, and the predicted one."""
    entry = get_entry(model)
    params = entry.params(params)
    kappa = quantize_kappa(kappa, N)
    L = linear_symbol(taylor_jet(parse_equation(entry.source), params))
    d = solve_dispersion(L, kappa, branch)
    env = Envelope(np.ones(N, dtype=complex), 1.0)
    levels = 1 if model in ("hietarinta", "burgers-dd") else 2
    f0 = modulated_initial(env, kappa, d.omega, d.v_g, amplitude, levels=levels, real=entry.real_field,
                           time_kind=entry.time_kind)
    hist = run_lattice(model, params, f0, steps, stride=1)
    n = np.arange(N)
    # project every snapshot on the carrier and fit the phase rotation
    proj = np.array([np.vdot(np.exp(1j * kappa * n), s) for s in hist.snapshots])
    phases = np.unwrap(np.angle(proj))
    slope = np.polyfit(np.array(hist.steps, dtype=float), phases, 1)[0]
    return float(-slope), d.omega


__all__ = [
    "SIMULATION_PRESETS",
    "EndToEnd",
    "Envelope",
    "History",
    "LatticeField",
    "check_linear_stability",
    "compare_envelopes",
    "extract_envelope",
    "measured_frequency",
    "modulated_initial",
    "nls_hamiltonian",
    "nls_mass",
    "quantize_kappa",
    "run_lattice",
    "run_nls",
    "sech_envelope",
    "simulate_envelope",
    "synthesized_initial",
    "write_envelope_csv",
    "write_history_csv",
]
