"""Engine output against closed-form dispersion relations and NLS coefficients."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .catalog import get_entry, model_ids
from .dispersion import linear_symbol, oracle_omega, solve_dispersion
from .eqdsl import parse_equation, taylor_jet
from .errors import MultiscaleError
from .reduction import oracle_nls_coefficients, reduce_equation

DEFAULT_KAPPAS = tuple(round(0.3 * i, 10) for i in range(1, 10))  # 0.3, 0.6, ..., 2.7

TOLERANCES = {
    "omega": ("abs", 1e-9),
    "v_g": ("abs", 1e-6),
    "rho1": ("rel", 1e-9),
    "rho2": ("rel", 1e-9),
}

FD_STEP = 1e-4


@dataclass
class OracleRow:
    model: str
    quantity: str
    max_deviation: float
    tolerance: float
    mode: str
    worst_kappa: float | None
    points: int
    skipped: int
    passed: bool
    note: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _deviation(mode: str, engine: complex, oracle: complex) -> float:
    diff = abs(complex(engine) - complex(oracle))
    if mode == "abs":
        return diff
    scale = abs(complex(oracle))
    return diff / scale if scale > 1e-12 else diff


def _fd_group_velocity(model: str, kappa: float, params) -> float:
    h = FD_STEP
    f = lambda k: oracle_omega(model, k, params)  # noqa: E731
    return (f(kappa + h) - f(kappa - h)) / (2 * h)


def evaluate_model(
    model: str,
    kappas: Sequence[float] = DEFAULT_KAPPAS,
    params: Mapping[str, float] | None = None,
    *,
    corrected: bool = False,
    fault: float = 0.0,
) -> list[OracleRow]:
    """One row per quantity; ``fault`` multiplies every oracle value by ``1 + fault``."""
    entry = get_entry(model)
    p = entry.params(params)
    qty = {q: {"dev": 0.0, "worst": None, "points": 0, "skipped": 0, "notes": set()} for q in TOLERANCES}

    def record(q, engine, oracle, kappa):
        mode, _ = TOLERANCES[q]
        dev = _deviation(mode, engine, complex(oracle) * (1 + fault))
        slot = qty[q]
        slot["points"] += 1
        if slot["worst"] is None or dev > slot["dev"]:
            slot["dev"], slot["worst"] = dev, kappa

    def skip(qs, note):
        for q in qs:
            qty[q]["skipped"] += 1
            qty[q]["notes"].add(note)

    try:
        poly = taylor_jet(parse_equation(entry.source), p)
        L = linear_symbol(poly)
    except MultiscaleError as exc:
        return [
            OracleRow(model, q, math.inf, TOLERANCES[q][1], TOLERANCES[q][0], None, 0, len(kappas), False,
                      f"{type(exc).__name__}: {exc}")
            for q in TOLERANCES
        ]

    for kappa in kappas:
        # dispersion
        try:
            oracle_w = oracle_omega(model, kappa, p)
        except MultiscaleError as exc:
            oracle_w, oracle_exc = None, exc
        else:
            oracle_exc = None
        try:
            d = solve_dispersion(L, kappa)
        except MultiscaleError as exc:
            if oracle_exc is not None and type(oracle_exc) is type(exc):
                # both sides agree that there is nothing to compare here
                skip(TOLERANCES, f"{type(exc).__name__} on both sides")
                continue
            qty["omega"]["points"] += 1
            qty["omega"]["dev"] = math.inf
            qty["omega"]["worst"] = kappa
            qty["omega"]["notes"].add(f"engine {type(exc).__name__}")
            if oracle_exc is not None:
                qty["omega"]["notes"].add(f"{type(oracle_exc).__name__}: {oracle_exc}")
            skip(("v_g", "rho1", "rho2"), "no dispersion point")
            continue
        if oracle_exc is not None:
            qty["omega"]["points"] += 1
            qty["omega"]["dev"] = math.inf
            qty["omega"]["notes"].add(f"{type(oracle_exc).__name__}: {oracle_exc}")
            skip(("v_g", "rho1", "rho2"), "oracle failed")
            continue
        record("omega", d.omega, oracle_w, kappa)
        record("v_g", d.v_g, _fd_group_velocity(model, kappa, p), kappa)

        # reduction
        try:
            red = reduce_equation(poly, kappa, real=entry.real_field)
        except MultiscaleError as exc:
            for q in ("rho1", "rho2"):
                qty[q]["points"] += 1
                qty[q]["dev"] = math.inf
                qty[q]["notes"].add(f"engine {type(exc).__name__}")
            continue
        try:
            o1, o2 = oracle_nls_coefficients(model, kappa, p, corrected=corrected)
        except MultiscaleError as exc:
            skip(("rho1", "rho2"), f"oracle {type(exc).__name__}")
            continue
        record("rho1", red.rho1, o1, kappa)
        # a vanishing coefficient is compared absolutely
        if abs(o2) < 1e-12:
            dev = abs(red.rho2 - o2 * (1 + fault))
            qty["rho2"]["points"] += 1
            if dev > qty["rho2"]["dev"]:
                qty["rho2"]["dev"], qty["rho2"]["worst"] = dev, kappa
        else:
            record("rho2", red.rho2, o2, kappa)

    rows = []
    for q, (mode, tol) in TOLERANCES.items():
        s = qty[q]
        ok = s["points"] > 0 and s["dev"] <= tol
        rows.append(OracleRow(model, q, s["dev"], tol, mode, s["worst"], s["points"], s["skipped"], ok,
                              "; ".join(sorted(s["notes"]))))
    return rows


def run_suite(
    models: Iterable[str] | None = None,
    kappas: Sequence[float] = DEFAULT_KAPPAS,
    params: Mapping[str, Mapping[str, float]] | None = None,
    *,
    corrected: bool = False,
    fault: float = 0.0,
) -> list[OracleRow]:
    rows: list[OracleRow] = []
    for model in models or model_ids():
        rows.extend(evaluate_model(model, kappas, (params or {}).get(model), corrected=corrected, fault=fault))
    return rows


__all__ = ["DEFAULT_KAPPAS", "OracleRow", "TOLERANCES", "evaluate_model", "run_suite"]
