"""Formal multiscale series.

An :class:`MSExpr` is a finite sum of terms ``coeff * eps^j * E^alpha * monomial``
where ``E = exp(i(kappa n - omega m))`` is the carrier and the monomial is a
product of slow amplitudes ``w[k, alpha]`` (optionally conjugated) carrying
slow-derivative multi-indices.

Derivative axes are stored as a 3-tuple.  In the lab frame the axes are
``(n1, m1, m2)`` (``(n1, t1, t2)`` for continuous time); after the moving-frame
substitution they are ``(n2, -, m2)`` with the middle entry always zero.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, NamedTuple

from .errors import ComplexFieldModel, FullyDiscreteModel

MAX_ORDER = 3
HARMONIC_CAP = 3
DERIV_CAP = 3

LAB = "lab"
MOVING = "moving"

AXES = {LAB: ("n1", "m1", "m2"), MOVING: ("n2", None, "m2")}


class SlowFactor(NamedTuple):
    k: int
    alpha: int
    conj: bool = False
    deriv: tuple[int, int, int] = (0, 0, 0)

    @property
    def harmonic(self) -> int:
        return -self.alpha if self.conj else self.alpha

    @property
    def field_id(self) -> tuple[int, int]:
        return (self.k, self.alpha)

    def with_deriv(self, deriv: tuple[int, int, int]) -> "SlowFactor":
        return SlowFactor(self.k, self.alpha, self.conj, deriv)


Monomial = tuple  # sorted tuple of SlowFactor


def make_factor(k: int, alpha: int, *, conj: bool = False, deriv=(0, 0, 0), real: bool = True) -> SlowFactor:
    """Canonical factor: real-field amplitudes are stored with ``alpha >= 0``."""
    deriv = tuple(deriv)
    if real:
        if alpha < 0:
            alpha, conj = -alpha, not conj
        if alpha == 0:
            conj = False
    elif conj:
        raise ComplexFieldModel("conjugated amplitudes do not occur for complex-field models")
    return SlowFactor(k, alpha, conj, deriv)


def monomial_harmonic(mono: Monomial) -> int:
    return sum(f.harmonic for f in mono)


@dataclass(frozen=True)
class MSTerm:
    coeff: complex
    eps_power: int
    harmonic: int
    monomial: Monomial

    def __post_init__(self):
        if self.harmonic != monomial_harmonic(self.monomial):
            raise ValueError(
                f"term harmonic {self.harmonic} disagrees with its monomial ({monomial_harmonic(self.monomial)})"
            )


Key = tuple  # (eps_power, harmonic, monomial)


@dataclass
class MSExpr:
    """Sum of :class:`MSTerm` stored as ``{(eps, harmonic, monomial): coeff}``."""

    data: dict = field(default_factory=dict)
    max_order: int = MAX_ORDER
    real: bool = True
    frame: str = LAB
    discarded: int = 0

    @classmethod
    def from_terms(cls, terms: Iterable[MSTerm], *, max_order=MAX_ORDER, real=True, frame=LAB) -> "MSExpr":
        out = cls(max_order=max_order, real=real, frame=frame)
        for t in terms:
            key = (t.eps_power, t.harmonic, tuple(sorted(t.monomial)))
            out.data[key] = out.data.get(key, 0j) + complex(t.coeff)
        return out

    @classmethod
    def constant(cls, value: complex, **kw) -> "MSExpr":
        return cls.from_terms([MSTerm(value, 0, 0, ())], **kw)

    def like(self, data=None) -> "MSExpr":
        return MSExpr(data if data is not None else {}, self.max_order, self.real, self.frame, self.discarded)

    @property
    def terms(self) -> list[MSTerm]:
        return [MSTerm(c, j, h, m) for (j, h, m), c in sorted(self.data.items(), key=_sort_key)]

    def __len__(self) -> int:
        return len(self.data)

    def __add__(self, other: "MSExpr") -> "MSExpr":
        out = dict(self.data)
        for k, v in other.data.items():
            out[k] = out.get(k, 0j) + v
        return self.like(out)

    def __sub__(self, other: "MSExpr") -> "MSExpr":
        return self + other.scaled(-1.0)

    def scaled(self, c: complex) -> "MSExpr":
        return self.like({k: v * c for k, v in self.data.items()})

    def max_abs(self) -> float:
        return max((abs(v) for v in self.data.values()), default=0.0)

    def __str__(self) -> str:
        return pretty(self)


def _sort_key(item):
    (j, h, m), _ = item
    return (j, h, len(m), m)


# ---------------------------------------------------------------------------
# Normalisation and algebra


def normalize(e: MSExpr, rel_tol: float = 1e-14) -> MSExpr:
    """Merge duplicates, drop negligible terms and order terms canonically."""
    merged: dict = {}
    for (j, h, m), c in e.data.items():
        key = (j, h, tuple(sorted(m)))
        merged[key] = merged.get(key, 0j) + c
    scale = max((abs(c) for c in merged.values()), default=0.0)
    cut = rel_tol * scale
    kept = {k: c for k, c in merged.items() if c != 0 and abs(c) >= cut}
    return e.like(dict(sorted(kept.items(), key=_sort_key)))


def _merge_monomials(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    return tuple(sorted(a + b))


def mul(a: MSExpr, b: MSExpr, max_order: int | None = None) -> MSExpr:
    """Distributive product truncated at ``eps^max_order`` and ``|harmonic| <= 3``."""
    max_order = a.max_order if max_order is None else max_order
    by_eps: dict[int, list] = {}
    for (j, h, m), c in b.data.items():
        by_eps.setdefault(j, []).append((h, m, c))
    out: dict = {}
    discarded = a.discarded + b.discarded
    for (ja, ha, ma), ca in a.data.items():
        for jb, items in by_eps.items():
            j = ja + jb
            if j > max_order:
                continue
            for hb, mb, cb in items:
                h = ha + hb
                if abs(h) > HARMONIC_CAP:
                    discarded += 1
                    continue
                key = (j, h, _merge_monomials(ma, mb))
                out[key] = out.get(key, 0j) + ca * cb
    res = MSExpr(out, max_order, a.real, a.frame, discarded)
    return normalize(res)


def conjugate(e: MSExpr) -> MSExpr:
    if not e.real:
        raise ComplexFieldModel("conjugation is only defined for real-field models")
    out: dict = {}
    for (j, h, m), c in e.data.items():
        mono = tuple(sorted(make_factor(f.k, f.alpha, conj=not f.conj, deriv=f.deriv) for f in m))
        key = (j, -h, mono)
        out[key] = out.get(key, 0j) + c.conjugate()
    return e.like(out)


def bucket(e: MSExpr, order: int, harmonic: int) -> list[tuple[complex, Monomial]]:
    return [(c, m) for (j, h, m), c in e.data.items() if j == order and h == harmonic]


def truncate(e: MSExpr, max_order: int) -> MSExpr:
    return e.like({k: v for k, v in e.data.items() if k[0] <= max_order})


# ---------------------------------------------------------------------------
# Slow derivatives


@lru_cache(maxsize=None)
def _derive_once(mono: Monomial, axis: int) -> tuple:
    """Product rule for one slow derivative; returns ((mult, monomial), ...)."""
    out: dict = {}
    for i, f in enumerate(mono):
        d = list(f.deriv)
        d[axis] += 1
        if sum(d) > DERIV_CAP:
            continue
        new = tuple(sorted(mono[:i] + (f.with_deriv(tuple(d)),) + mono[i + 1 :]))
        out[new] = out.get(new, 0) + 1
    return tuple(out.items())


@lru_cache(maxsize=None)
def derive_monomial(mono: Monomial, orders: tuple[int, int, int]) -> tuple:
    """Apply ``d0^a d1^b d2^c`` to a monomial by the product rule."""
    current = {mono: 1}
    for axis, count in enumerate(orders):
        for _ in range(count):
            nxt: dict = {}
            for m, mult in current.items():
                for m2, k in _derive_once(m, axis):
                    nxt[m2] = nxt.get(m2, 0) + mult * k
            current = nxt
    return tuple(current.items())


def differentiate(e: MSExpr, axis: int, times: int = 1) -> MSExpr:
    """Slow derivative along ``axis`` (no eps bookkeeping)."""
    orders = [0, 0, 0]
    orders[axis] = times
    orders = tuple(orders)
    out: dict = {}
    for (j, h, m), c in e.data.items():
        for m2, mult in derive_monomial(m, orders):
            key = (j, h, m2)
            out[key] = out.get(key, 0j) + c * mult
    return normalize(e.like(out))


@lru_cache(maxsize=None)
def _shift_operator(dn: int, dm: int, budget: int) -> tuple:
    """Terms of exp(dn eps d_n1) exp(dm (eps d_m1 + eps^2 d_m2)) up to eps^budget.

    Returns ((eps_weight, (a, b, c), coeff), ...).
    """
    out = []
    for a in range(budget + 1):
        for b in range(budget + 1 - a):
            for c in range((budget - a - b) // 2 + 1):
                coeff = (dn**a / math.factorial(a)) * (dm**b / math.factorial(b)) * (dm**c / math.factorial(c))
                if coeff == 0:
                    continue
                out.append((a + b + 2 * c, (a, b, c), coeff))
    return tuple(out)


def apply_shift(e: MSExpr, dn: int, dm: int, carrier: tuple[float, float], max_order: int | None = None) -> MSExpr:
    """Action of the lattice shift ``T_n^dn T_m^dm`` on a lab-frame series."""
    kappa, omega = carrier
    max_order = e.max_order if max_order is None else max_order
    out: dict = {}
    for (j, h, m), c in e.data.items():
        budget = max_order - j
        if budget < 0:
            continue
        phase = cmath.exp(1j * h * (kappa * dn - omega * dm))
        cp = c * phase
        for w, orders, oc in _shift_operator(dn, dm, budget):
            if orders == (0, 0, 0):
                key = (j, h, m)
                out[key] = out.get(key, 0j) + cp
                continue
            for m2, mult in derive_monomial(m, orders):
                key = (j + w, h, m2)
                out[key] = out.get(key, 0j) + cp * oc * mult
    return normalize(MSExpr(out, max_order, e.real, e.frame, e.discarded))


def apply_time_derivative(
    e: MSExpr, carrier: tuple[float, float], max_order: int | None = None, *, continuous: bool = True
) -> MSExpr:
    """Total time derivative ``d_t = d_t0 + eps d_t1 + eps^2 d_t2`` on the carrier."""
    if not continuous:
        raise FullyDiscreteModel("time derivatives exist only for differential-difference models")
    _, omega = carrier
    max_order = e.max_order if max_order is None else max_order
    out: dict = {}
    for (j, h, m), c in e.data.items():
        if j > max_order:
            continue
        if h:
            key = (j, h, m)
            out[key] = out.get(key, 0j) + c * (-1j * h * omega)
        for w, axis in ((1, 1), (2, 2)):
            if j + w > max_order:
                continue
            for m2, mult in _derive_once(m, axis):
                key = (j + w, h, m2)
                out[key] = out.get(key, 0j) + c * mult
    return normalize(MSExpr(out, max_order, e.real, e.frame, e.discarded))


def frame_change(e: MSExpr, v_g: float) -> MSExpr:
    """Substitute ``d_m1 -> -v_g d_n2`` and ``d_n1 -> d_n2``."""
    out: dict = {}
    for (j, h, m), c in e.data.items():
        factor = 1.0
        new = []
        for f in m:
            p, q, r = f.deriv
            if q:
                factor *= (-v_g) ** q
            new.append(f.with_deriv((p + q, 0, r)))
        key = (j, h, tuple(sorted(new)))
        out[key] = out.get(key, 0j) + c * factor
    return normalize(MSExpr(out, e.max_order, e.real, MOVING, e.discarded))


# ---------------------------------------------------------------------------
# Substitution of solved amplitudes


class Rule(NamedTuple):
    """``d_n2^p_min w[k, alpha] = expr`` with ``expr`` an eps-free slow series."""

    p_min: int
    expr: MSExpr


def _replacement(f: SlowFactor, rule: Rule, real: bool) -> MSExpr | None:
    p, q, r = f.deriv
    if p < rule.p_min:
        return None
    expr = rule.expr
    if f.conj:
        expr = conjugate(expr)
    if p > rule.p_min:
        expr = differentiate(expr, 0, p - rule.p_min)
    if q:
        expr = differentiate(expr, 1, q)
    if r:
        expr = differentiate(expr, 2, r)
    return expr


def substitute(e: MSExpr, rules: Mapping[tuple[int, int], Rule]) -> MSExpr:
    """Replace every factor that has a rule; factors below ``p_min`` are kept."""
    if not rules:
        return e
    cache: dict = {}
    out = e.like({})
    acc: dict = {}
    for (j, h, m), c in e.data.items():
        if not any(f.field_id in rules for f in m):
            acc[(j, h, m)] = acc.get((j, h, m), 0j) + c
            continue
        kept = []
        parts = []
        for f in m:
            rule = rules.get(f.field_id)
            rep = None
            if rule is not None:
                if f not in cache:
                    cache[f] = _replacement(f, rule, e.real)
                rep = cache[f]
            if rep is None:
                kept.append(f)
            else:
                parts.append(rep)
        kept_h = monomial_harmonic(tuple(kept))
        prod = MSExpr({(j, kept_h, tuple(sorted(kept))): c}, e.max_order, e.real, e.frame)
        for rep in parts:
            if not rep.data:
                prod = prod.like({})
                break
            prod = mul(prod, rep, max_order=10**6)
        for k, v in prod.data.items():
            acc[k] = acc.get(k, 0j) + v
    out.data = acc
    return normalize(out)


# ---------------------------------------------------------------------------
# Pretty printer (stable format for golden files)


def format_factor(f: SlowFactor, frame: str = LAB) -> str:
    names = AXES[frame]
    parts = []
    for name, p in zip(names, f.deriv):
        if p and name is not None:
            parts.append(f"d[{name}]^{p}")
    sign = "-" if f.conj else "+"
    parts.append(f"w[{f.k},{f.alpha}]({sign})")
    return " ".join(parts)


def format_term(t: MSTerm, frame: str = LAB) -> str:
    c = complex(t.coeff)
    head = f"({c.real:+.12e}{c.imag:+.12e}j) * eps^{t.eps_power} * E^{t.harmonic}"
    if not t.monomial:
        return head
    return head + " * " + " * ".join(format_factor(f, frame) for f in t.monomial)


def pretty(e: MSExpr) -> str:
    return "\n".join(format_term(t, e.frame) for t in normalize(e).terms)


__all__ = [
    "LAB",
    "MOVING",
    "MSExpr",
    "MSTerm",
    "Rule",
    "SlowFactor",
    "apply_shift",
    "apply_time_derivative",
    "bucket",
    "conjugate",
    "differentiate",
    "format_term",
    "frame_change",
    "make_factor",
    "monomial_harmonic",
    "mul",
    "normalize",
    "pretty",
    "substitute",
    "truncate",
]
