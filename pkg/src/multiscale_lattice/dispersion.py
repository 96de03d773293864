"""Plane-wave symbols, dispersion branches and group velocities."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .eqdsl import DIFF_DIFF, FULLY_DISCRETE, PolyEquation
from .errors import (
    BranchOutOfRange,
    ConstraintViolated,
    DegenerateLinearPart,
    NoDispersiveBranch,
    StationarySymbol,
    UnknownModel,
)

UNIT_TOL = 1e-8


@dataclass(frozen=True)
class LinearSymbol:
    """``L(K, W)`` with ``K = e^{i kappa}`` and ``W = e^{-i omega}`` (discrete time)
    or ``L(K, omega)`` affine in omega (continuous time).

    ``terms`` maps (dn, dm) -- or (dn,) -- to coefficients; ``dt_terms`` maps
    (dn,) to the coefficient of ``dt u[dn]``.
    """

    kind: str
    terms: Mapping[tuple[int, ...], complex]
    dt_terms: Mapping[tuple[int, ...], complex]

    @property
    def scale(self) -> float:
        vals = [abs(c) for c in self.terms.values()] + [abs(c) for c in self.dt_terms.values()]
        return max(vals, default=0.0)

    def __call__(self, K: complex, W: complex) -> complex:
        """Evaluate; for continuous time the second argument is omega itself."""
        if self.kind == FULLY_DISCRETE:
            return sum(c * K ** s[0] * W ** s[1] for s, c in self.terms.items())
        total = sum(c * K ** s[0] for s, c in self.terms.items())
        total += -1j * W * sum(c * K ** s[0] for s, c in self.dt_terms.items())
        return total

    def at(self, kappa: float, omega: float) -> complex:
        if self.kind == FULLY_DISCRETE:
            return self(cmath.exp(1j * kappa), cmath.exp(-1j * omega))
        return self(cmath.exp(1j * kappa), omega)

    def d_kappa(self, kappa: float, omega: float) -> complex:
        K = cmath.exp(1j * kappa)
        if self.kind == FULLY_DISCRETE:
            W = cmath.exp(-1j * omega)
            return sum(1j * s[0] * c * K ** s[0] * W ** s[1] for s, c in self.terms.items())
        total = sum(1j * s[0] * c * K ** s[0] for s, c in self.terms.items())
        total += -1j * omega * sum(1j * s[0] * c * K ** s[0] for s, c in self.dt_terms.items())
        return total

    def d_omega(self, kappa: float, omega: float) -> complex:
        K = cmath.exp(1j * kappa)
        if self.kind == FULLY_DISCRETE:
            W = cmath.exp(-1j * omega)
            return sum(-1j * s[1] * c * K ** s[0] * W ** s[1] for s, c in self.terms.items())
        return -1j * sum(c * K ** s[0] for s, c in self.dt_terms.items())


@dataclass(frozen=True)
class DispersionPoint:
    kappa: float
    omega: float
    K: complex
    W: complex
    v_g: float
    residual: float
    branch: int

    @property
    def carrier(self) -> tuple[float, float]:
        return (self.kappa, self.omega)


def linear_symbol(p: PolyEquation) -> LinearSymbol:
    terms = {s: c for s, c in p.linear_terms().items() if c != 0}
    dt_terms = {s: c for s, c in p.dt_terms.items() if c != 0}
    if not terms and not dt_terms:
        raise DegenerateLinearPart("equation has no linear part")
    if p.time_kind == FULLY_DISCRETE:
        if not any(s[1] != 0 for s in terms):
            raise DegenerateLinearPart("linear part has no time shift: no time evolution")
    elif not dt_terms:
        raise DegenerateLinearPart("linear part has no time derivative: no time evolution")
    return LinearSymbol(p.time_kind, terms, dt_terms)


def _wrap(omega: float) -> float:
    """Map to (-pi, pi]."""
    w = math.remainder(omega, 2 * math.pi)
    if w <= -math.pi:
        w += 2 * math.pi
    return w


def _discrete_roots(L: LinearSymbol, kappa: float) -> list[float]:
    K = cmath.exp(1j * kappa)
    lo = min(s[1] for s in L.terms)
    hi = max(s[1] for s in L.terms)
    poly = np.zeros(hi - lo + 1, dtype=complex)
    for (dn, dm), c in L.terms.items():
        poly[hi - dm] += c * K**dn  # highest power first
    nz = np.flatnonzero(np.abs(poly) > 1e-14 * np.abs(poly).max())
    poly = poly[nz[0] :] if len(nz) else poly
    roots = np.roots(poly) if len(poly) > 1 else np.array([])
    omegas = []
    for W in roots:
        if abs(abs(W) - 1.0) >= UNIT_TOL or W == 0:
            continue
        omegas.append(_polish(L, kappa, -cmath.phase(W)))
    omegas = sorted(_wrap(w) for w in omegas)
    # a double root shows up twice; keep distinct branches only
    distinct: list[float] = []
    for w in omegas:
        if not distinct or abs(w - distinct[-1]) > 1e-7:
            distinct.append(w)
    return distinct


def _polish(L: LinearSymbol, kappa: float, omega: float, iters: int = 8) -> float:
    """Newton on the circle parametrisation; discards any imaginary drift."""
    w = complex(omega)
    for _ in range(iters):
        K = cmath.exp(1j * kappa)
        W = cmath.exp(-1j * w)
        f = L(K, W)
        df = sum(-1j * s[1] * c * K ** s[0] * W ** s[1] for s, c in L.terms.items())
        if df == 0:
            break
        step = f / df
        w -= step
        if abs(step) < 1e-16:
            break
    return w.real


def dispersion_branches(L: LinearSymbol, kappa: float) -> list[float]:
    """All real frequencies at ``kappa``, sorted in (-pi, pi] (discrete time)."""
    if L.kind == FULLY_DISCRETE:
        return _discrete_roots(L, kappa)
    K = cmath.exp(1j * kappa)
    P = sum(c * K ** s[0] for s, c in L.terms.items())
    D = sum(c * K ** s[0] for s, c in L.dt_terms.items())
    if D == 0:
        return []
    omega = -1j * P / D
    if abs(omega.imag) >= 1e-10 * max(1.0, abs(omega)):
        return []
    return [omega.real]


def _check_kappa(kappa: float) -> None:
    if not (-math.pi < kappa < math.pi) or kappa == 0:
        raise ValueError(f"kappa must lie in (-pi, pi) \\ {{0}}, got {kappa!r}")


def solve_dispersion(L: LinearSymbol, kappa: float, branch: int | None = None) -> DispersionPoint:
    """Solve ``L = 0`` for real omega.

    ``branch`` indexes the unit-modulus roots sorted by omega in (-pi, pi];
    ``None`` picks the acoustic branch (smallest |omega|, ties to positive omega).
    """
    _check_kappa(kappa)
    omegas = dispersion_branches(L, kappa)
    if not omegas:
        raise NoDispersiveBranch(f"no real frequency at kappa = {kappa!r}: equation is not dispersive here")
    if branch is None:
        branch = min(range(len(omegas)), key=lambda i: (round(abs(omegas[i]), 9), -omegas[i]))
    if not 0 <= branch < len(omegas):
        raise BranchOutOfRange(f"branch {branch} requested but only {len(omegas)} real branch(es) exist")
    return _point(L, kappa, omegas[branch], branch)


def _point(L: LinearSymbol, kappa: float, omega: float, branch: int) -> DispersionPoint:
    residual = abs(L.at(kappa, omega))
    point = DispersionPoint(
        kappa=kappa,
        omega=omega,
        K=cmath.exp(1j * kappa),
        W=cmath.exp(-1j * omega),
        v_g=math.nan,
        residual=residual,
        branch=branch,
    )
    return DispersionPoint(**{**point.__dict__, "v_g": group_velocity(L, point)})


def nearest_branch(L: LinearSymbol, kappa: float, omega_target: float) -> DispersionPoint:
    """Branch whose frequency is closest (mod 2 pi) to ``omega_target``."""
    _check_kappa(kappa)
    omegas = dispersion_branches(L, kappa)
    if not omegas:
        raise NoDispersiveBranch(f"no real frequency at kappa = {kappa!r}")
    i = min(range(len(omegas)), key=lambda i: abs(_wrap(omegas[i] - omega_target)))
    return _point(L, kappa, omegas[i], i)


def sweep_dispersion(L: LinearSymbol, kappas: Sequence[float], branch: int | None = None) -> list[DispersionPoint]:
    """Follow one branch across a kappa grid by nearest continuation."""
    points: list[DispersionPoint] = []
    for kappa in kappas:
        if not points:
            points.append(solve_dispersion(L, kappa, branch))
        else:
            prev = points[-1]
            guess = prev.omega + prev.v_g * (kappa - prev.kappa)
            points.append(nearest_branch(L, kappa, guess))
    return points


def group_velocity(L: LinearSymbol, p: DispersionPoint) -> float:
    dk = L.d_kappa(p.kappa, p.omega)
    dw = L.d_omega(p.kappa, p.omega)
    if abs(dw) <= 1e-12 * max(L.scale, 1e-300):
        raise StationarySymbol(f"dL/domega vanishes at kappa = {p.kappa!r}")
    v = -dk / dw
    if abs(v.imag) > 1e-8 * max(1.0, abs(v)):
        raise StationarySymbol(f"complex group velocity {v!r} at kappa = {p.kappa!r}")
    return v.real


# ---------------------------------------------------------------------------
# Closed-form dispersion relations (test oracles)


def hietarinta_constraint(params: Mapping[str, float], tol: float = 1e-12) -> None:
    e1, e2, o1, o2 = (params[k] for k in ("e1", "e2", "o1", "o2"))
    if abs((o1 + e1) - (o2 + e2)) > tol * max(1.0, abs(o1) + abs(e1)):
        raise ConstraintViolated(
            f"Hietarinta parameters need o1 + e1 = o2 + e2 (got {o1 + e1!r} vs {o2 + e2!r})"
        )


def oracle_omega(model_id: str, kappa: float, params: Mapping[str, float]) -> float:
    """Closed-form frequency for a catalog model (lattice-index units)."""
    s, c = math.sin(kappa), math.cos(kappa)
    if model_id == "toda-hirota":
        a = params["a"]
        r = cmath.exp(0.5j * kappa)
        W = r * (a * r + 1) / (a + r)
        return -cmath.phase(W)
    if model_id == "toda-naive":
        return math.acos(1 + params["a"] * (c - 1))
    if model_id in ("kdv-sym", "kdv-asym"):
        return math.asin(params["a"] * s**3)
    if model_id == "burgers-dd":
        return 2 * (c - 1) / params["a"] ** 2
    if model_id == "burgers-fully-discrete":
        a, b = params["a"], params["b"]
        x = 2 * b / a**2 * (c - 1)
        if abs(x) > 1:
            raise NoDispersiveBranch(f"|2b(cos k - 1)/a^2| = {abs(x):.3g} > 1: no real frequency")
        return math.asin(x)
    if model_id == "hietarinta":
        hietarinta_constraint(params)
        A = params["o2"] - params["o1"]
        B = params["e1"] - params["e2"]
        C = params["e2"] - params["o1"]
        del A  # equals B under the constraint
        return 2 * math.atan((B - C) / (B + C) * math.tan(kappa / 2))
    raise UnknownModel(f"unknown model {model_id!r}")


__all__ = [
    "DIFF_DIFF",
    "DispersionPoint",
    "LinearSymbol",
    "dispersion_branches",
    "group_velocity",
    "hietarinta_constraint",
    "linear_symbol",
    "nearest_branch",
    "oracle_omega",
    "solve_dispersion",
    "sweep_dispersion",
]
