"""Built-in lattice equations with default parameters and expected outcomes."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .eqdsl import DIFF_DIFF, FULLY_DISCRETE
from .errors import UnknownModel

INTEGRABLE = "IntegrableNLS"
LINEAR = "LinearSchrodinger"
NONINTEGRABLE = "NonIntegrable"


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    source: str
    defaults: Mapping[str, float]
    field: str  # "real" or "complex"
    time_kind: str
    expected: str
    description: str
    oracles: tuple[str, ...] = ("omega", "v_g", "rho1", "rho2")
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def real_field(self) -> bool:
        return self.field == "real"

    def params(self, overrides: Mapping[str, float] | None = None) -> dict[str, float]:
        out = dict(self.defaults)
        out.update(overrides or {})
        return out

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "equation": self.source,
            "params": dict(self.defaults),
            "field": self.field,
            "time_kind": self.time_kind,
            "expected": self.expected,
            "description": self.description,
            "oracles": list(self.oracles),
        }


_KDV_RHS = "a/4*(u[3,0] - 3*u[1,0] + 3*u[-1,0] - u[-3,0])"

ENTRIES: tuple[CatalogEntry, ...] = (
    CatalogEntry(
        id="toda-hirota",
        source="exp(u[0,0]-u[0,1]) - exp(u[0,1]-u[0,2]) = a^2*(exp(u[-1,2]-u[0,1]) - exp(u[0,1]-u[1,0]))",
        defaults={"a": 0.5},
        field="real",
        time_kind=FULLY_DISCRETE,
        expected=INTEGRABLE,
        description="integrable discrete-time Toda lattice (Hirota form)",
    ),
    CatalogEntry(
        id="toda-naive",
        source="u[0,1] - 2*u[0,0] + u[0,-1] = a*(exp(u[-1,0]-u[0,0]) - exp(u[0,0]-u[1,0]))",
        defaults={"a": 0.5},
        field="real",
        time_kind=FULLY_DISCRETE,
        expected=INTEGRABLE,
        description="non-integrable dispersive discretization of the Toda lattice",
    ),
    CatalogEntry(
        id="kdv-sym",
        source=f"u[0,1] - u[0,-1] = {_KDV_RHS} - b/2*(u[1,0]^2 - u[-1,0]^2)",
        defaults={"a": 1.0, "b": 1.0},
        field="real",
        time_kind=FULLY_DISCRETE,
        expected=INTEGRABLE,
        description="discrete KdV with symmetric nonlinear part",
    ),
    CatalogEntry(
        id="kdv-asym",
        source=f"u[0,1] - u[0,-1] = {_KDV_RHS} - b/2*(u[1,0]^2 - u[0,0]^2)",
        defaults={"a": 1.0, "b": 1.0},
        field="real",
        time_kind=FULLY_DISCRETE,
        expected=NONINTEGRABLE,
        description="discrete KdV with asymmetric nonlinear part",
    ),
    CatalogEntry(
        id="burgers-dd",
        source="i*a^2*dt(u[0]) = (1 + a*u[0])*(u[1] - u[0]) + (u[-1] - u[0])/(1 + a*u[-1])",
        defaults={"a": 1.0},
        field="complex",
        time_kind=DIFF_DIFF,
        expected=LINEAR,
        description="dispersive differential-difference Burgers equation",
    ),
    CatalogEntry(
        id="burgers-fully-discrete",
        source=(
            "i*a^2/(2*b)*(u[0,1] - u[0,-1]) = (1 + a*u[0,0])*(u[1,0] - u[0,0])"
            " + (u[-1,0] - u[0,0])/(1 + a*u[-1,0])"
        ),
        defaults={"a": 1.0, "b": 0.5},
        field="complex",
        time_kind=FULLY_DISCRETE,
        expected=LINEAR,
        description="symmetric fully discrete Burgers equation (leapfrog in time, step b)",
    ),
    CatalogEntry(
        id="hietarinta",
        source=(
            "(1 + e2*u[0,0])/(1 + e1*u[0,0]) * (1 + o2*u[1,1])/(1 + o1*u[1,1])"
            " = (1 + e2*u[1,0])/(1 + o1*u[1,0]) * (1 + o2*u[0,1])/(1 + e1*u[0,1])"
        ),
        defaults={"e1": 3.0, "e2": 1.0, "o1": 2.0, "o2": 4.0},
        field="real",
        time_kind=FULLY_DISCRETE,
        expected=LINEAR,
        description="linearizable Hietarinta equation, coefficients inverted (e_i -> 1/e_i, o_i -> 1/o_i)",
        notes=("real dispersion requires o1 + e1 = o2 + e2",),
    ),
)

_BY_ID = {e.id: e for e in ENTRIES}


def get_entry(model_id: str) -> CatalogEntry:
    try:
        return _BY_ID[model_id]
    except KeyError:
        raise UnknownModel(f"unknown model {model_id!r}; known: {', '.join(_BY_ID)}") from None


def model_ids() -> list[str]:
    return list(_BY_ID)
