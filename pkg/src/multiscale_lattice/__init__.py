"""Multiscale reduction of lattice equations to nonlinear Schrodinger envelopes.

Typical use::

    from multiscale_lattice import analyze
    result = analyze("toda-hirota", kappa=1.0)
    result.rho1, result.rho2, result.classification
"""

from __future__ import annotations

from typing import Mapping

from .catalog import ENTRIES, get_entry, model_ids
from .dispersion import linear_symbol, solve_dispersion
from .eqdsl import parse_equation, taylor_jet
from .errors import MultiscaleError
from .reduction import ReductionResult, reduce_equation

__version__ = "0.1.0"


def analyze(model_or_equation: str, kappa: float, params: Mapping[str, float] | None = None, *,
            real: bool | None = None, branch: int | None = None) -> ReductionResult:
    """Reduce a catalog model (by id) or a DSL equation at carrier wavenumber ``kappa``."""
    if model_or_equation in model_ids():
        entry = get_entry(model_or_equation)
        source, full, is_real = entry.source, entry.params(params), entry.real_field
    else:
        source, full, is_real = model_or_equation, dict(params or {}), None
    poly = taylor_jet(parse_equation(source), full)
    if real is not None:
        is_real = real
    elif is_real is None:
        is_real = poly.real_coefficients
    return reduce_equation(poly, kappa, real=is_real, branch=branch)


__all__ = [
    "ENTRIES",
    "MultiscaleError",
    "ReductionResult",
    "__version__",
    "analyze",
    "get_entry",
    "linear_symbol",
    "model_ids",
    "parse_equation",
    "reduce_equation",
    "solve_dispersion",
    "taylor_jet",
]
