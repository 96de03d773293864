"""Residual check of a reduction against the original lattice equation.

The solved cascade fields are instantiated on top of an exact plane-wave
solution of the reduced equation and summed into a lattice function ``u``.
If every bucket up to ``eps^3`` was solved correctly the original equation
leaves a residual of order ``eps^4``.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from . import series as S
from .eqdsl import DIFF_DIFF, EquationIR, evaluate
from .reduction import ANSATZ_ORDERS, ReductionResult, _harmonics
from .series import SlowFactor


@dataclass(frozen=True)
class PlaneWaveEnvelope:
    """``A = amp * exp(i (p X - nu T))`` with ``nu = -rho1 p^2 + rho2 |amp|^2``."""

    amp: complex
    p: float
    nu: complex

    @classmethod
    def for_result(cls, r: ReductionResult, amp: complex = 0.8 * cmath.exp(0.3j), p: float = 1.7):
        nu = -r.rho1 * p * p + r.rho2 * abs(amp) ** 2
        return cls(amp, p, nu)

    def value(self, X, T, dX: int = 0, dT: int = 0):
        base = self.amp * np.exp(1j * (self.p * X - self.nu * T))
        return (1j * self.p) ** dX * (-1j * self.nu) ** dT * base

    def antiderivative(self, g: Callable, X, T):
        # every harmonic-0 expression is X-independent here; zero constant
        return g(X, T) * X


class GridEnvelope:
    """Periodic envelope sampled on ``X_j = spacing * j``, evaluated by trigonometric interpolation.

    Slow-time dependence is the first-order Taylor step of the reduced equation,
    enough for initial data at ``T = O(eps^2)``.
    """

    def __init__(self, values, spacing: float, rho1: complex, rho2: complex, center: float | None = None):
        self.values = np.asarray(values, dtype=complex)
        self.N = len(self.values)
        self.spacing = spacing
        self.length = spacing * self.N
        self.center = self.length / 2 if center is None else center
        self.k = 2 * np.pi * np.fft.fftfreq(self.N, d=spacing)
        self.hat = np.fft.fft(self.values) / self.N
        self._phase_key, self._phase = None, None
        A = self.values
        Axx = np.fft.ifft(-(self.k**2) * np.fft.fft(A))
        self.dt_hat = np.fft.fft(-1j * (rho1 * Axx + rho2 * np.abs(A) ** 2 * A)) / self.N

    def _interp(self, coeffs, X, dX):
        X = np.asarray(X, dtype=float)
        key = (X.shape, X.tobytes())
        if self._phase_key != key:
            self._phase_key, self._phase = key, np.exp(1j * np.multiply.outer(X, self.k))
        return self._phase @ (coeffs * (1j * self.k) ** dX)

    def value(self, X, T, dX: int = 0, dT: int = 0):
        if dT == 0:
            return self._interp(self.hat, X, dX) + T * self._interp(self.dt_hat, X, dX)
        if dT == 1:
            return self._interp(self.dt_hat, X, dX)
        raise ValueError("only first slow-time derivatives are available")

    def antiderivative(self, g: Callable, X, T):
        """Integral of a harmonic-0 expression: mean slope about the centre plus periodic part."""
        grid = self.spacing * np.arange(self.N)
        gh = np.fft.fft(g(grid, T)) / self.N
        mean = gh[0].real if abs(gh[0].imag) < 1e-12 * max(1.0, abs(gh[0])) else gh[0]
        ih = np.zeros_like(gh)
        nz = self.k != 0
        ih[nz] = gh[nz] / (1j * self.k[nz])
        periodic = self._interp(ih, X, 0) - self._interp(ih, np.array([self.center]), 0)[0]
        return mean * (np.asarray(X) - self.center) + periodic

    def total_increment(self, g: Callable, T: float = 0.0):
        grid = self.spacing * np.arange(self.N)
        return np.mean(g(grid, T)) * self.length


class FieldEvaluator:
    """Numeric values of every slow amplitude and its slow derivatives."""

    def __init__(self, r: ReductionResult, env):
        self.r = r
        self.env = env
        self._cache: dict = {}

    def expr(self, e: S.MSExpr, X, T):
        total = np.zeros(np.broadcast(X, T).shape, dtype=complex)
        for (_, _, mono), c in e.data.items():
            term = c
            for f in mono:
                term = term * self.factor(f, X, T)
            total = total + term
        return total

    def factor(self, f: SlowFactor, X, T):
        if f.conj:
            return np.conj(self.factor(SlowFactor(f.k, f.alpha, False, f.deriv), X, T))
        p, q, r = f.deriv
        if q:
            return np.zeros(np.broadcast(X, T).shape, dtype=complex)
        if f.field_id == (0, 1):
            return self.env.value(X, T, p, r)
        rule = self.r.rules.get(f.field_id)
        if rule is None:
            return np.zeros(np.broadcast(X, T).shape, dtype=complex)  # free homogeneous part
        if p >= rule.p_min:
            e = rule.expr
            if p > rule.p_min:
                e = S.differentiate(e, 0, p - rule.p_min)
            if r:
                e = S.differentiate(e, 2, r)
            return self.expr(e, X, T)
        if rule.p_min - p != 1 or r:
            raise ValueError("only a single integration of a solved gradient is supported")
        return self.env.antiderivative(lambda x, t: self.expr(rule.expr, x, t), X, T)

    def twist(self, eps: float) -> float:
        """Increment of ``u`` across the ring produced by integrated mean fields."""
        total = 0.0
        for (k, alpha), rule in self.r.rules.items():
            if alpha == 0 and rule.p_min == 1 and rule.expr.data:
                g = lambda x, t, e=rule.expr: self.expr(e, x, t)  # noqa: E731
                total += eps ** (k + 1) * self.env.total_increment(g).real
        return total

    def amplitude(self, k: int, alpha: int, X, T):
        return self.factor(S.make_factor(k, alpha, real=self.r.real), X, T)


def synthesize(r: ReductionResult, eps: float, n, m, env=None, dt: bool = False):
    """Lattice function ``u(n, m)`` (or its time derivative) from the solved fields."""
    env = env or PlaneWaveEnvelope.for_result(r)
    ev = FieldEvaluator(r, env)
    kappa, omega, v = r.point.kappa, r.point.omega, r.point.v_g
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    X = eps * (n - v * m)
    T = eps * eps * m
    out = np.zeros(np.broadcast(n, m).shape, dtype=complex)
    for k in range(ANSATZ_ORDERS):
        for alpha in _harmonics(r.real):
            carrier = np.exp(1j * alpha * (kappa * n - omega * m))
            f = S.make_factor(k, alpha, real=r.real)
            if dt:
                w = (
                    -1j * alpha * omega * ev.factor(f, X, T)
                    - eps * v * ev.factor(f.with_deriv((1, 0, 0)), X, T)
                    + eps * eps * ev.factor(f.with_deriv((0, 0, 1)), X, T)
                )
            else:
                w = ev.factor(f, X, T)
            term = eps ** (k + 1) * w * carrier
            out = out + term
            if r.real and alpha > 0:
                out = out + np.conj(term)
    return out.real if r.real else out


def equation_residual(
    eq: EquationIR,
    params: Mapping[str, float],
    r: ReductionResult,
    eps: float,
    n_range: int = 6,
    m_range: int = 4,
) -> float:
    """Max |equation(u)| over a patch of sites around the origin."""
    n, m = np.meshgrid(np.arange(-n_range, n_range + 1), np.arange(-m_range, m_range + 1), indexing="ij")
    env = PlaneWaveEnvelope.for_result(r)
    fields = {}
    dts = {}
    # for differential-difference models m is read as continuous time t
    for slot in eq.fields_used:
        dn = slot[0]
        dm = slot[1] if eq.time_kind != DIFF_DIFF else 0
        fields[slot] = synthesize(r, eps, n + dn, m + dm, env)
    for slot in eq.dt_used:
        dts[slot] = synthesize(r, eps, n + slot[0], m, env, dt=True)
    res = evaluate(eq.root, params, fields, dts)
    return float(np.max(np.abs(res)))


def refinement_order(eps_values: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of log(residual) against log(eps)."""
    slope, _ = np.polyfit(np.log(eps_values), np.log(residuals), 1)
    return float(slope)


__all__ = [
    "FieldEvaluator",
    "GridEnvelope",
    "PlaneWaveEnvelope",
    "equation_residual",
    "refinement_order",
    "synthesize",
]
