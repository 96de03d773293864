"""Command-line front end: catalog, analyze, simulate, check-oracles.

Exit codes: 0 success, 1 usage or parse error, 2 structural analysis error,
3 a numerical check above its threshold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .catalog import ENTRIES, get_entry, model_ids
from .eqdsl import parse_equation, taylor_jet
from .errors import MultiscaleError
from .reduction import TOL_CLASSIFY, TOL_STRUCTURAL, reduce_equation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_STRUCTURAL = 2
EXIT_THRESHOLD = 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Deterministic serialization


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON with insertion-ordered keys and 17 significant digits for every float."""
    obj = to_jsonable(obj)
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Configuration


@dataclass
class AnalysisConfig:
    model: str | None = None
    equation: str | None = None
    params: dict = field(default_factory=dict)
    kappas: list = field(default_factory=list)
    branch: int | None = None
    tol_structural: float = TOL_STRUCTURAL
    tol_classify: float = TOL_CLASSIFY
    out: str | None = None
    fmt: str = "json"
    jobs: int = 1

    @property
    def source(self) -> str:
        return get_entry(self.model).source if self.model else self.equation

    def full_params(self) -> dict:
        return get_entry(self.model).params(self.params) if self.model else dict(self.params)


def _parse_param(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise UsageError(f"--param expects name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise UsageError(f"parameter {name.strip()!r} needs a real value, got {value!r}") from None


def parse_sweep(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--kappa-sweep expects start:stop:count, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"malformed --kappa-sweep {text!r}") from None
    if n < 1:
        raise UsageError("--kappa-sweep count must be >= 1")
    return [a] if n == 1 else [round(float(x), 12) for x in np.linspace(a, b, n)]


def _check_kappas(kappas: Sequence[float]) -> None:
    for k in kappas:
        if not 0 < k < math.pi:
            raise UsageError(f"kappa must lie in (0, pi), got {k!r}")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path!r}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    return data


def _config_kappas(value) -> list[float]:
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, dict):
        try:
            return parse_sweep(f"{value['start']}:{value['stop']}:{value['count']}")
        except KeyError as exc:
            raise UsageError(f"kappa sweep in config misses {exc}") from None
    if isinstance(value, list):
        return [float(v) for v in value]
    raise UsageError("config 'kappa' must be a number, a list or {start, stop, count}")


def build_config(args: argparse.Namespace, *, need_kappa: bool = True) -> AnalysisConfig:
    file_cfg = _load_config(getattr(args, "config", None))
    cfg = AnalysisConfig()
    eq = file_cfg.get("equation")
    if eq is not None:
        if eq in model_ids():
            cfg.model = eq
        else:
            cfg.equation = eq
    if args.id and args.eq:
        raise UsageError("give either --id or --eq, not both")
    if args.id:
        cfg.model, cfg.equation = args.id, None
    if args.eq:
        cfg.model, cfg.equation = None, args.eq
    if cfg.model is None and cfg.equation is None:
        raise UsageError("an equation is required: --id MODEL or --eq 'DSL'")
    if cfg.model is not None:
        get_entry(cfg.model)
    cfg.params = {k: float(v) for k, v in file_cfg.get("params", {}).items()}
    for text in args.param or []:
        k, v = _parse_param(text)
        cfg.params[k] = v
    if "kappa" in file_cfg:
        cfg.kappas = _config_kappas(file_cfg["kappa"])
    if getattr(args, "kappa_sweep", None):
        cfg.kappas = parse_sweep(args.kappa_sweep)
    if getattr(args, "kappa", None) is not None:
        cfg.kappas = [args.kappa]
    if need_kappa and not cfg.kappas:
        raise UsageError("a carrier is required: --kappa K or --kappa-sweep a:b:n")
    _check_kappas(cfg.kappas)
    cfg.branch = file_cfg.get("branch")
    if getattr(args, "branch", None) is not None:
        cfg.branch = args.branch
    tols = file_cfg.get("tolerances", {})
    cfg.tol_structural = float(tols.get("structural", cfg.tol_structural))
    cfg.tol_classify = float(tols.get("classify", cfg.tol_classify))
    if getattr(args, "tol_structural", None) is not None:
        cfg.tol_structural = args.tol_structural
    if getattr(args, "tol_classify", None) is not None:
        cfg.tol_classify = args.tol_classify
    output = file_cfg.get("output", {})
    cfg.out = args.out or output.get("path")
    cfg.fmt = args.format or output.get("format", "json")
    if cfg.fmt not in ("json", "csv"):
        raise UsageError(f"unknown format {cfg.fmt!r}")
    cfg.jobs = max(1, getattr(args, "jobs", None) or int(file_cfg.get("jobs", 1)))
    return cfg


# ---------------------------------------------------------------------------
# analyze


def analyze_point(source: str, params: dict, real: bool | None, kappa: float, branch, tol_s, tol_c, model) -> dict:
    """One reduction; structural failures come back as a row with ``error`` set."""
    try:
        poly = taylor_jet(parse_equation(source), params)
        is_real = poly.real_coefficients if real is None else real
        r = reduce_equation(poly, kappa, real=is_real, branch=branch, tol_structural=tol_s, tol_classify=tol_c)
    except MultiscaleError as exc:
        if not exc.structural:
            raise
        return {"model": model, "kappa": kappa, "params": params, "error": type(exc).__name__, "message": str(exc)}
    row = r.to_dict(model, params)
    row["mean_field_kind"] = r.mean_field_kind
    row["error"] = None
    return row


CSV_COLUMNS = [
    "model", "kappa", "omega", "v_g", "transport", "second_harmonic", "mean_field", "mean_field_kind",
    "rho1", "rho2", "classification", "error",
]


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = []
    for c in CSV_COLUMNS:
        header += [f"{c}_re", f"{c}_im"] if c in ("transport", "second_harmonic", "mean_field", "rho1", "rho2") else [c]
    w.writerow(header)
    for row in rows:
        out = []
        for c in CSV_COLUMNS:
            v = row.get(c)
            if c in ("transport", "second_harmonic", "mean_field", "rho1", "rho2"):
                out += ["", ""] if v is None else [_fmt_float(v["re"]), _fmt_float(v["im"])]
            elif isinstance(v, float):
                out.append(_fmt_float(v))
            else:
                out.append("" if v is None else str(v))
        w.writerow(out)
    return buf.getvalue()


def cmd_analyze(args) -> int:
    cfg = build_config(args)
    params = cfg.full_params()
    real = get_entry(cfg.model).real_field if cfg.model else None
    label = cfg.model or "custom"
    tasks = [(cfg.source, params, real, k, cfg.branch, cfg.tol_structural, cfg.tol_classify, label) for k in cfg.kappas]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            rows = list(pool.map(analyze_point, *zip(*tasks)))
    else:
        rows = [analyze_point(*t) for t in tasks]
    if cfg.fmt == "csv":
        _emit(rows_to_csv(rows), cfg.out)
    else:
        body = rows[0] if len(rows) == 1 else {"model": label, "params": params, "results": rows}
        _emit(dumps(body) + "\n", cfg.out)
    failed = [r for r in rows if r.get("error")]
    for r in failed:
        print(f"error: {label} at kappa = {r['kappa']!r}: {r['error']}: {r['message']}", file=sys.stderr)
    return EXIT_STRUCTURAL if failed else EXIT_OK


# ---------------------------------------------------------------------------
# catalog


def cmd_catalog(args) -> int:
    entries = [get_entry(args.id)] if args.id else list(ENTRIES)
    if args.format == "json":
        _emit(dumps([e.as_dict() for e in entries]) + "\n", args.out)
        return EXIT_OK
    lines = []
    for e in entries:
        params = ", ".join(f"{k}={v:g}" for k, v in e.defaults.items())
        lines.append(f"{e.id:<24} {e.expected:<18} {e.field:<8} {e.time_kind:<24} {params}")
        lines.append(f"    {e.source}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args) -> int:
    from . import simulate as sim

    if args.eq:
        raise UsageError("simulation needs a catalog model (--id); custom equations have no lattice stepper")
    cfg = build_config(args, need_kappa=False)
    file_cfg = _load_config(args.config)

    def pick(name, default):
        value = getattr(args, name)
        return file_cfg.get(name, default) if value is None else value

    eps = float(pick("eps", 0.05))
    sites = int(pick("sites", 1024))
    slow_time = float(pick("slow_time", 1.0))
    threshold = float(pick("threshold", 0.15))
    amplitude = float(pick("amplitude", 1.0))
    width = float(pick("width", 2.0))
    if not eps > 0:
        raise UsageError("eps must be > 0")
    if sites < 8:
        raise UsageError("--sites must be at least 8")
    if len(cfg.kappas) > 1:
        raise UsageError("simulate takes a single --kappa")
    kappa = cfg.kappas[0] if cfg.kappas else None
    result = sim.simulate_envelope(
        cfg.model, cfg.params, kappa=kappa, eps=eps, N=sites, slow_time=slow_time, amplitude=amplitude,
        width=width, branch=cfg.branch, leading_order=args.initial == "leading-order",
    )
    manifest = result.manifest()
    manifest.update({"amplitude": amplitude, "width": width, "slow_time": slow_time, "threshold": threshold})
    metric = result.metrics["rel_l2_aligned"]
    manifest["passed"] = metric <= threshold
    text = dumps(manifest) + "\n"
    if cfg.out:
        os.makedirs(cfg.out, exist_ok=True)
        with open(os.path.join(cfg.out, "metrics.json"), "w") as fh:
            fh.write(text)
        sim.write_envelope_csv(os.path.join(cfg.out, "lattice_envelope.csv"), result.lattice)
        sim.write_envelope_csv(os.path.join(cfg.out, "nls_envelope.csv"), result.reduced)
        if args.history:
            sim.write_history_csv(os.path.join(cfg.out, "history.csv"), result.history)
    else:
        sys.stdout.write(text)
    if not manifest["passed"]:
        print(f"envelope error {metric:.4g} exceeds threshold {threshold:g}", file=sys.stderr)
        return EXIT_THRESHOLD
    return EXIT_OK


# ---------------------------------------------------------------------------
# check-oracles


def cmd_check_oracles(args) -> int:
    from .oracles import DEFAULT_KAPPAS, run_suite

    models = [args.id] if args.id else model_ids()
    for m in models:
        get_entry(m)
    overrides: dict[str, float] = {}
    for text in args.param or []:
        k, v = _parse_param(text)
        overrides[k] = v
    params = {m: {k: v for k, v in overrides.items() if k in get_entry(m).defaults} for m in models}
    kappas = parse_sweep(args.kappa_sweep) if args.kappa_sweep else list(DEFAULT_KAPPAS)
    _check_kappas(kappas)
    rows = run_suite(models, kappas, params, corrected=args.corrected, fault=args.inject_fault)
    ok = all(r.passed for r in rows)
    if args.format == "json":
        body = {"kappas": kappas, "corrected": args.corrected, "fault": args.inject_fault,
                "rows": [r.as_dict() for r in rows], "passed": ok}
        _emit(dumps(body) + "\n", args.out)
    else:
        lines = [f"{'model':<24} {'quantity':<8} {'max dev':>10} {'tol':>8} {'pts':>4} {'skip':>4}  status"]
        for r in rows:
            status = "pass" if r.passed else "FAIL"
            note = f"  ({r.note})" if r.note else ""
            lines.append(f"{r.model:<24} {r.quantity:<8} {r.max_deviation:>10.3g} {r.tolerance:>8.0e} "
                         f"{r.points:>4} {r.skipped:>4}  {status}{note}")
        _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_THRESHOLD


# ---------------------------------------------------------------------------
# Argument parsing


def _add_equation_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--id", help="catalog model id")
    p.add_argument("--eq", help="equation in the lattice DSL")
    p.add_argument("--param", action="append", metavar="NAME=VALUE", help="parameter override (repeatable)")
    p.add_argument("--kappa", type=float, help="carrier wavenumber in (0, pi)")
    p.add_argument("--branch", type=int, help="dispersion branch index (default: acoustic)")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--out", help="output file (directory for simulate)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multiscale-lattice",
        description="Multiscale reduction of lattice equations to nonlinear Schrodinger envelopes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", help="list built-in models")
    p.add_argument("--id")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("analyze", help="dispersion, reduction and classification")
    _add_equation_args(p)
    p.add_argument("--kappa-sweep", metavar="A:B:N")
    p.add_argument("--tol-structural", type=float)
    p.add_argument("--tol-classify", type=float)
    p.add_argument("--format", choices=("json", "csv"))
    p.add_argument("--jobs", type=int, help="worker processes for sweeps")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="lattice run against the reduced envelope equation")
    _add_equation_args(p)
    p.add_argument("--eps", type=float)
    p.add_argument("--sites", type=int)
    p.add_argument("--slow-time", type=float)
    p.add_argument("--threshold", type=float, help="maximum phase-aligned relative L2 error (default 0.15)")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--initial", choices=("synthesized", "leading-order"), default="synthesized")
    p.add_argument("--history", action="store_true", help="also write every snapshot to history.csv")
    p.set_defaults(func=cmd_simulate, format=None, kappa_sweep=None)

    p = sub.add_parser("check-oracles", help="compare the engine with closed-form results")
    p.add_argument("--id")
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--kappa-sweep", metavar="A:B:N")
    p.add_argument("--corrected", action="store_true", help="use corrected closed forms where they are known")
    p.add_argument("--inject-fault", type=float, default=0.0, metavar="REL",
                   help="perturb every oracle value by this relative amount (self-test)")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_oracles)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MultiscaleError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL if exc.structural else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
