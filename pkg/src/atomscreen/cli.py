"""Batch command line: ionization tables, spectra, zeta diagnostics, convergence, comparison.

Settings resolve as command-line flags > JSON config file > built-in defaults
(600 splines of order 10 in a 200 bohr box).  Every output carries the
resolved configuration and the package version.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .atoms import (
    HARTREE_EV,
    builtin_elements,
    catalog_csv,
    element,
    excited_spectrum,
    ionization_potential,
    parse_orbital,
)
from .errors import (
    AtomScreenError,
    ConfigError,
    ConvergenceError,
    LabelError,
    MissingOrbitalError,
    NonPhysicalError,
    NotPositiveDefiniteError,
    ReferenceParseError,
)
from .potentials import ModelKind, ZetaTruncation
from .radial import SolverConfig, get_solver
from .report import (
    ANOMALIES,
    ComputedRow,
    build_report,
    load_reference,
    zeta_deviation_map,
    zeta_map_csv,
    zeta_map_summary,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4

FIXTURE_ENV = "ATOMSCREEN_FIXTURES"
DEFAULT_IP_ELEMENTS = ("He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg")
DEFAULT_ZETA_R = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)
MODELS = ("v1", "v2")


def fixture_dir() -> Path:
    env = os.environ.get(FIXTURE_ENV)
    return Path(env) if env else Path(__file__).parent / "data"


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig = SolverConfig()
    model: str | None = None
    elements: tuple[str, ...] | None = None
    format: str = "csv"
    m_override: dict = field(default_factory=dict)
    hartree_ev: float = HARTREE_EV
    ref: str | None = None

    def models(self) -> tuple[str, ...]:
        return MODELS if self.model is None else (ModelKind.parse(self.model).value,)

    def snapshot(self) -> dict:
        d = asdict(self)
        d["solver"] = self.solver.snapshot()
        d["elements"] = list(self.elements) if self.elements else None
        d["m_override"] = dict(sorted(self.m_override.items()))
        return d


_SOLVER_KEYS = {f.name for f in fields(SolverConfig)}
_RUN_KEYS = {"model", "elements", "format", "m_override", "hartree_ev", "ref"}


def parse_m_override(items) -> dict:
    out = {}
    for item in items or ():
        sym, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--m-override expects SYM=INT, got {item!r}")
        try:
            out[element(sym).symbol] = int(val)
        except ValueError:
            raise ConfigError(f"--m-override value must be an integer, got {val!r}") from None
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Merge built-in defaults, an optional JSON file and explicit flags."""
    values: dict = {}
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        unknown = set(loaded) - _SOLVER_KEYS - _RUN_KEYS
        if unknown:
            raise ConfigError(f"{args.config}: unknown keys {sorted(unknown)}")
        values.update(loaded)
    flag_map = {"splines": "n_splines", "rmax": "r_max", "order": "order", "gamma": "gamma",
                "first_interval": "first_interval", "quad_nodes": "quad_nodes", "grid": "grid",
                "model": "model", "format": "format", "hartree_ev": "hartree_ev", "ref": "ref"}
    for flag, key in flag_map.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[key] = v
    if getattr(args, "elements", None):
        values["elements"] = [e for chunk in args.elements for e in chunk.split(",") if e]
    m_override = dict(values.get("m_override") or {})
    m_override.update(parse_m_override(getattr(args, "m_override", None)))

    solver = SolverConfig(**{k: values[k] for k in _SOLVER_KEYS if k in values})
    elements = values.get("elements")
    if elements is not None:
        elements = tuple(element(e).symbol for e in elements)
    fmt = values.get("format", "csv")
    if fmt not in ("csv", "json", "pretty"):
        raise ConfigError(f"unknown format {fmt!r}")
    model = values.get("model")
    if model is not None:
        model = ModelKind.parse(model).value
    for sym, m in m_override.items():
        element(sym, {sym: m})  # validates 1 <= m <= n
    return RunConfig(solver, model, elements, fmt, m_override, float(values.get("hartree_ev", HARTREE_EV)),
                     values.get("ref"))


# ---------------------------------------------------------------- rendering

def _header_lines(command: str, config: RunConfig, extra: dict | None = None) -> list[str]:
    lines = [f"# atomscreen {__version__} {command}",
             "# config: " + json.dumps(config.snapshot(), sort_keys=True)]
    for k, v in (extra or {}).items():
        lines.append(f"# {k}: " + json.dumps(v, sort_keys=True))
    return lines


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _pretty(header, rows) -> str:
    cells = [list(map(str, header))] + [["" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    out = []
    for j, r in enumerate(cells):
        out.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
        if j == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def render(command: str, config: RunConfig, header, display_rows, json_rows, extra: dict | None = None) -> str:
    """Serialize a table in the configured format (csv/pretty round, json keeps full precision)."""
    if config.format == "json":
        doc = {"version": __version__, "command": command, "config": config.snapshot(), "rows": json_rows}
        doc.update(extra or {})
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    head = "\n".join(_header_lines(command, config, extra)) + "\n"
    body = _csv(header, display_rows) if config.format == "csv" else _pretty(header, display_rows)
    return head + body


def _fmt(x, places):
    return None if x is None else f"{x:.{places}f}"


# ---------------------------------------------------------------- commands

def cmd_ip_table(config: RunConfig) -> str:
    """Ionization potentials under both models for each selected element."""
    solver = get_solver(config.solver)
    symbols = config.elements or DEFAULT_IP_ELEMENTS
    display, full = [], []
    for sym in symbols:
        rec = element(sym, config.m_override)
        ips = {k: ionization_potential(rec, k, solver, config.hartree_ev).ip_eV for k in MODELS}
        ref = _fixture_value("table1.csv", rec.symbol, "IP", rec.reference_ip_eV)
        display.append([rec.n_electrons, rec.symbol, rec.occupancy_label,
                        _fmt(ips["v1"], 2), _fmt(ips["v2"], 2), _fmt(ref, 2)])
        full.append({"n": rec.n_electrons, "atom": rec.symbol, "m": rec.m, "m/n": rec.occupancy_label,
                     "outermost": rec.outermost_label, "v1_eV": ips["v1"], "v2_eV": ips["v2"],
                     "ref_eV": ref})
    return render("ip-table", config, ["n", "atom", "m/n", "v1_eV", "v2_eV", "ref_eV"], display, full)


def _fixture_value(name: str, label: str, kind: str, fallback=None):
    path = fixture_dir() / name
    if not path.exists():
        return fallback
    row = load_reference(path).lookup(label, kind)
    return fallback if row is None else row.value_eV


def cmd_spectrum(config: RunConfig, n_max: int = 4, l_max: int = 3) -> str:
    """Scaled bound levels of one element under both models."""
    solver = get_solver(config.solver)
    sym = config.elements[0] if config.elements else "Li"
    rec = element(sym, config.m_override)
    levels = {k: excited_spectrum(rec, k, n_max, l_max, solver, config.hartree_ev) for k in MODELS}
    by_label = {k: {row.label: row for row in rows} for k, rows in levels.items()}
    labels = [row.label for row in levels["v1"]]
    labels += [lab for lab in (row.label for row in levels["v2"]) if lab not in labels]
    labels.sort(key=parse_orbital)
    display, full = [], []
    for lab in labels:
        vals = {k: by_label[k][lab].energy_scaled_eV if lab in by_label[k] else None for k in MODELS}
        ref = _fixture_value("table2.csv", lab, "level") if rec.symbol == "Li" else None
        display.append([lab, _fmt(vals["v1"], 3), _fmt(vals["v2"], 3), _fmt(ref, 3)])
        full.append({"state": lab, "v1_eV": vals["v1"], "v2_eV": vals["v2"], "ref_eV": ref})
    extra = {"element": rec.symbol, "n_max": n_max, "l_max": l_max}
    return render("spectrum", config, ["state", "v1_eV", "v2_eV", "ref_eV"], display, full, extra)


def cmd_zeta(config: RunConfig, z_list=(3,), r_grid=DEFAULT_ZETA_R, k_max: int | None = 1) -> str:
    """Closed-form zeta against both quadrature orientations."""
    trunc = ZetaTruncation(k_max=k_max)
    rows = zeta_deviation_map(z_list, r_grid, trunc)
    summary = zeta_map_summary(rows)
    extra = {"truncation_k_max": k_max, "summary": summary}
    if config.format == "json":
        return render("zeta", config, None, None, [asdict(r) for r in rows], extra)
    if config.format == "csv":
        head = "\n".join(_header_lines("zeta", config, extra)) + "\n"
        return head + zeta_map_csv(rows)
    display = [[f"{r.Z:g}", f"{r.r:g}", f"{r.zeta_closed:.6f}", f"{r.oracle_active:.6f}",
                f"{r.oracle_passive:.6f}", "yes" if r.divergent else ""] for r in rows]
    return render("zeta", config, ["Z", "r", "zeta", "active", "passive", "divergent"], display, None, extra)


def parse_sweep(items) -> list[tuple[int, float | None, float | None]]:
    out = []
    for item in items:
        parts = item.split(":")
        if not 1 <= len(parts) <= 3:
            raise ConfigError(f"sweep point must be N[:RMAX[:GAMMA]], got {item!r}")
        try:
            n = int(parts[0])
            rmax = float(parts[1]) if len(parts) > 1 and parts[1] else None
            gamma = float(parts[2]) if len(parts) > 2 and parts[2] not in ("", "auto") else None
        except ValueError:
            raise ConfigError(f"bad sweep point {item!r}") from None
        out.append((n, rmax, gamma))
    return out


def cmd_converge(config: RunConfig, sweep, state: str = "2s", symbol: str | None = None) -> str:
    """Energy of one state across basis settings; the largest basis is the yardstick."""
    if not sweep:
        raise ConfigError("sweep must contain at least one point")
    sym = symbol or (config.elements[0] if config.elements else "Li")
    rec = element(sym, config.m_override)
    kind = config.model or "v2"
    n, l = parse_orbital(state)
    points = []
    for n_spl, rmax, gamma in sweep:
        sc = replace(config.solver, n_splines=n_spl,
                     r_max=config.solver.r_max if rmax is None else rmax, gamma=gamma)
        st = get_solver(sc).state(rec.model(kind), n, l)
        points.append((sc, st.energy_raw))
    finest = max(range(len(points)), key=lambda i: (points[i][0].n_splines, i))
    e_ref = points[finest][1]
    by_n = sorted(points, key=lambda p: p[0].n_splines)
    monotone = all(b[1] <= a[1] + 1e-12 for a, b in zip(by_n, by_n[1:]))
    display, full = [], []
    for sc, e in points:
        g = sc.resolved_gamma()
        display.append([sc.n_splines, f"{sc.r_max:g}", f"{g:.6f}" if g is not None else "uniform",
                        f"{e:.12f}", f"{e - e_ref:.3e}"])
        full.append({"n_splines": sc.n_splines, "r_max": sc.r_max, "gamma": g,
                     "energy_hartree": e, "delta_to_finest_hartree": e - e_ref})
    extra = {"element": rec.symbol, "model": kind, "state": state, "monotone_from_above": monotone}
    return render("converge", config, ["n_splines", "r_max", "gamma", "energy_hartree", "delta_to_finest"],
                  display, full, extra)


def anomaly_notes(m_override: dict) -> dict:
    notes = dict(ANOMALIES)
    if "Mg" in m_override:
        for model in MODELS:
            notes[("Mg", "IP", model)] = f"magnesium: m overridden to {m_override['Mg']}"
    return notes


def computed_rows(config: RunConfig, reference) -> list[ComputedRow]:
    """Model values for every reference label the catalog can produce."""
    solver = get_solver(config.solver)
    rows = []
    level_sym = config.elements[0] if config.elements else "Li"
    for ref in reference.rows:
        for kind in config.models():
            if ref.kind == "IP":
                try:
                    rec = element(ref.label, config.m_override)
                except ConfigError:
                    continue
                ip = ionization_potential(rec, kind, solver, config.hartree_ev).ip_eV
                rows.append(ComputedRow(rec.symbol, "IP", ip, kind, rec.Z, 0))
            else:
                rec = element(level_sym, config.m_override)
                n, l = parse_orbital(ref.label)
                levels = excited_spectrum(rec, kind, n, l, solver, config.hartree_ev, n_min=n)
                hit = [lv for lv in levels if (lv.principal_n, lv.l) == (n, l)]
                if not hit:
                    raise MissingOrbitalError(f"{ref.label} not bound for {rec.symbol} ({kind})")
                rows.append(ComputedRow(ref.label, "level", hit[0].energy_scaled_eV, kind, rec.Z,
                                        100 * n + l))
    # one row per (label, kind, model) even if the reference lists several sources
    unique = {(r.label, r.kind, r.model): r for r in rows}
    return list(unique.values())


def cmd_compare(config: RunConfig) -> str:
    ref_path = Path(config.ref) if config.ref else fixture_dir() / "table1.csv"
    reference = load_reference(ref_path)
    report = build_report(computed_rows(config, reference), reference,
                          annotations=anomaly_notes(config.m_override),
                          metadata={"reference": ref_path.name})
    if config.format == "json":
        doc = report.to_dict()
        doc.update(version=__version__, command="compare", config=config.snapshot())
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    summary = {"max_abs_dev_eV": report.max_abs_dev_eV, "mean_abs_dev_eV": report.mean_abs_dev_eV,
               "agreement_eV": report.agreement_eV, "reference": ref_path.name}
    if config.format == "csv":
        return "\n".join(_header_lines("compare", config, {"summary": summary})) + "\n" + report.to_csv()
    display = [[r.label, r.kind, r.model, f"{r.computed_eV:.3f}", f"{r.reference_eV:.3f}",
                f"{r.abs_dev_eV:.3f}", r.annotation] for r in report.rows]
    return render("compare", config, ["label", "kind", "model", "computed", "reference", "|dev|", "note"],
                  display, None, {"summary": summary})


def cmd_catalog(config: RunConfig) -> str:
    recs = [element(r.symbol, config.m_override) for r in builtin_elements()]
    return "\n".join(_header_lines("catalog", config)) + "\n" + catalog_csv(recs)


# ---------------------------------------------------------------- entry point

def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _kmax(text: str):
    if text.lower() in ("none", "exact", "inf"):
        return None
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--config", help="JSON file with configuration keys")
    g.add_argument("--splines", type=int, help="number of B-splines (default 600)")
    g.add_argument("--rmax", type=float, help="box radius in bohr (default 200)")
    g.add_argument("--order", type=int, help="spline order k (default 10)")
    g.add_argument("--gamma", type=float, help="exponential knot clustering (default: first interval 1e-4 bohr)")
    g.add_argument("--first-interval", type=float, help="first knot interval in bohr when --gamma is unset")
    g.add_argument("--quad-nodes", type=int, help="Gauss nodes per knot interval (default k)")
    g.add_argument("--grid", choices=("exponential", "uniform"))
    g.add_argument("--model", choices=("v1", "v2", "coulomb"))
    g.add_argument("--elements", action="append", help="element symbols, comma separated")
    g.add_argument("--format", choices=("csv", "json", "pretty"))
    g.add_argument("--m-override", action="append", metavar="SYM=INT")
    g.add_argument("--hartree-ev", type=float, help=f"eV per hartree (default {HARTREE_EV})")
    g.add_argument("--ref", help="reference CSV (label,kind,value_eV,source)")
    g.add_argument("--out", help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="atomscreen", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"atomscreen {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("ip-table", parents=[common], help="ionization potentials for both models")
    sp = sub.add_parser("spectrum", parents=[common], help="excited levels of one element")
    sp.add_argument("--n-max", type=int, default=4)
    sp.add_argument("--l-max", type=int, default=3)
    zp = sub.add_parser("zeta", parents=[common], help="closed-form zeta vs quadrature oracles")
    zp.add_argument("--Z", type=_float_list, default=[3.0], dest="z_list")
    zp.add_argument("--r", type=_float_list, default=list(DEFAULT_ZETA_R), dest="r_grid")
    zp.add_argument("--kmax", type=_kmax, default=1, help="binomial truncation order or 'none'")
    cp = sub.add_parser("converge", parents=[common], help="basis convergence of one state")
    cp.add_argument("--sweep", action="append", metavar="N[:RMAX[:GAMMA]]")
    cp.add_argument("--state", default="2s")
    sub.add_parser("compare", parents=[common], help="deviation report against a reference table")
    sub.add_parser("catalog", parents=[common], help="bundled element data as CSV")
    return p


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def run(argv=None) -> str:
    """Parse ``argv`` and return the rendered output without writing it."""
    args = build_parser().parse_args(argv)
    return _dispatch(args, resolve_config(args))


def _dispatch(args, config: RunConfig) -> str:
    if args.command == "ip-table":
        return cmd_ip_table(config)
    if args.command == "spectrum":
        return cmd_spectrum(config, args.n_max, args.l_max)
    if args.command == "zeta":
        return cmd_zeta(config, args.z_list, args.r_grid, args.kmax)
    if args.command == "converge":
        sweep = parse_sweep(args.sweep or ["150", "300", "600"])
        return cmd_converge(config, sweep, args.state)
    if args.command == "compare":
        return cmd_compare(config)
    return cmd_catalog(config)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = resolve_config(args)
        text = _dispatch(args, config)
        _write(text, args.out)
    except (ConfigError, NonPhysicalError) as exc:
        print(f"atomscreen: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, LabelError, NotPositiveDefiniteError, MissingOrbitalError) as exc:
        print(f"atomscreen: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (OSError, ReferenceParseError) as exc:
        print(f"atomscreen: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except AtomScreenError as exc:
        print(f"atomscreen: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
