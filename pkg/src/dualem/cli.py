"""Command-line front end.

Exit codes: 0 success, 1 failed validation, 2 solver or configuration
error, 64 bad invocation.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

from . import __version__
from .circuit import (
    ACNetwork,
    SimultaneousParams,
    mna_solve,
    simultaneous_readout,
    track_resistance,
)
from .config import (
    ConfigError,
    OverrideError,
    config_hash,
    geometry_from,
    instrument_from,
    load_config,
    quadrature_from,
    scenario_spec_from,
)
from .core import DualEMError, Excitation, PlateSample
from .electrostatic import (
    PotentialAssignment,
    SampleLayer,
    aggregate_coupling,
    default_cross_section,
    default_extrusion_length,
    segment_capacitance_matrix,
    sensitivity_map,
    solve_potential,
    write_grid_csv,
    write_heatmap_svg,
    write_matrix_csv,
)
from .inductive import ComplexInductance, induced_voltage, solve_coupling
from .scenarios import KINDS, default_threads, plot_scenario, run_scenario, write_scenario_csv
from .validation import run_checks

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file layered over the defaults")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key, e.g. geometry.w=0.05 (repeatable)")
    common.add_argument("--plot", action="store_true", help="also write SVG plots (needs matplotlib)")
    common.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")

    parser = _Parser(prog="dualem", description="Dual-modality planar spiral sensor models.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("inductive", parents=[common], help="mutual inductance, plate change and pickup voltage")
    sub.add_parser("capacitive", parents=[common], help="segment capacitances and sensitivity")
    sub.add_parser("circuit", parents=[common], help="equivalent-circuit mode readouts or a netlist solve")
    sc = sub.add_parser("scenario", parents=[common], help="replicate one bench experiment")
    sc.add_argument("name", choices=KINDS)
    sub.add_parser("validate", parents=[common], help="run the oracle cross-checks")
    return parser


def _fmt(v) -> str:
    return format(float(v), ".12g")


def _header(cfg, extra=()):
    lines = [f"dualem {__version__}", f"config_sha256 {config_hash(cfg)}"]
    q = cfg["quadrature"]
    lines.append("quadrature " + " ".join(f"{k}={q[k]}" for k in sorted(q)))
    lines.append(f"cell {cfg['cross_section']['cell']}")
    lines.extend(extra)
    return lines


def _write_csv(path: Path, header_lines, columns, rows):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _cross_section(cfg, layers=()):
    cs = dict(cfg["cross_section"])
    g = geometry_from(cfg)
    if cs["extrusion_length"] is None:
        cs["extrusion_length"] = default_extrusion_length(g)
    track = {"track_width": cs.pop("track_width"), "track_gap": cs.pop("track_gap")}
    return default_cross_section(g, **track, **cs).with_layers(layers)


def _estimates(cfg, what):
    flags = []
    if geometry_from(cfg) == geometry_from(load_config()):
        flags.append("est:geometry")
    if "section" in what and cfg["cross_section"]["extrusion_length"] is None:
        flags.append("est:extrusion_length")
    if "instrument" in what and cfg["instrument"] == load_config()["instrument"]:
        flags.append("est:zs")
    return "estimates " + (",".join(flags) or "none")


def cmd_inductive(cfg, out: Path, args):
    g, q = geometry_from(cfg), quadrature_from(cfg)
    plate = PlateSample(**cfg["inductive"]["plate"])
    rows = []
    for f in cfg["inductive"]["frequencies"]:
        sol = solve_coupling(g, plate, 2 * math.pi * f, q)
        v = induced_voltage(ComplexInductance(sol.total, f), Excitation(f, current=cfg["inductive"]["current"]))
        rows.append([_fmt(f), _fmt(sol.free_space.real), _fmt(sol.delta.real), _fmt(sol.delta.imag),
                     _fmt(sol.total.real), _fmt(sol.total.imag), _fmt(v.real), _fmt(v.imag)])
    cols = ["frequency_Hz", "M_free_H", "re_dL_H", "im_dL_H", "re_M_H", "im_M_H", "re_V", "im_V"]
    _write_csv(out / "inductive.csv", _header(cfg, [_estimates(cfg, ())]), cols, rows)
    return [f"f={r[0]} Hz  M={r[4]} H  dL={r[2]}{'+' if not r[3].startswith('-') else ''}{r[3]}j H" for r in rows]


def cmd_capacitive(cfg, out: Path, args):
    opts = cfg["capacitive"]
    layers = []
    if opts["sample_thickness"] > 0:
        layers.append(SampleLayer(opts["sample_eps_r"], opts["sample_thickness"]))
    m = _cross_section(cfg, layers)
    cm = segment_capacitance_matrix(m)
    header = _header(cfg, [_estimates(cfg, ("section",)), f"extrusion_m {_fmt(m.extrusion_length)}"])
    write_matrix_csv(out / "capacitance_matrix.csv", cm, header)
    aggregate = aggregate_coupling(cm)
    rows = [[tx, _fmt(cm.coupling_to(tx, m.receiver))] for tx in m.transmitter]
    rows.append(["transmitter", _fmt(aggregate)])
    _write_csv(out / "couplings.csv", header, ["segment", "coupling_to_receiver_F"], rows)
    smap = sensitivity_map(m)
    xc, col = smap.column_profile()
    _write_csv(out / "sensitivity_profile.csv", header, ["x_m", "column_sensitivity"],
               [[_fmt(x), _fmt(s)] for x, s in zip(xc, col)])
    if opts["write_fields"]:
        field = solve_potential(m, PotentialAssignment.ramp(m, opts["receiver_scale"]))
        write_grid_csv(out / "potential.csv", field, "potential", header)
        write_grid_csv(out / "sensitivity.csv", smap, "sensitivity", header)
    if args.plot:
        write_heatmap_svg(out / "sensitivity.svg", smap, "sensitivity")
    summary = [f"aggregate coupling {aggregate * 1e12:.4f} pF", f"largest pair {'-'.join(cm.largest_pair())}"]
    summary += cm.warnings
    return summary


def _netlist(spec) -> ACNetwork:
    net = ACNetwork()
    kinds = {"R": net.resistor, "C": net.capacitor, "L": net.inductor, "V": net.voltage_source,
             "I": net.current_source}
    for item in spec:
        kind = item.get("type")
        if kind == "M":
            net.mutual(item["name"], item["l1"], item["l2"], complex(item["value"]))
        elif kind in kinds:
            kinds[kind](item["name"], item["a"], item["b"], complex(item["value"]) if kind in "VI" else float(item["value"]))
        else:
            raise ConfigError(f"netlist element {item.get('name')!r}: unknown type {kind!r}")
    return net


def cmd_circuit(cfg, out: Path, args):
    c = cfg["circuit"]
    header = _header(cfg, [_estimates(cfg, ("section", "instrument"))])
    if c["netlist"]:
        net = _netlist(c["netlist"])
        rows = []
        for f in c["frequencies"]:
            sol = mna_solve(net, 2 * math.pi * f)
            rows += [[_fmt(f), n, _fmt(v.real), _fmt(v.imag)] for n, v in sol.voltages.items()]
        _write_csv(out / "circuit_nodes.csv", header, ["frequency_Hz", "node", "re_V", "im_V"], rows)
        return [f"solved {len(net.nodes)} nodes at {len(c['frequencies'])} frequencies"]
    m = _cross_section(cfg)
    cm = segment_capacitance_matrix(m)
    couplings = [cm.receiver_couplings()[n] for n in m.receiver]
    mutual = c["mutual_inductance"]
    if mutual is None:
        mutual = solve_coupling(geometry_from(cfg), None, 0.0, quadrature_from(cfg)).free_space.real
    params = SimultaneousParams(c["self_inductance"], c["self_inductance"], mutual, couplings,
                                [track_resistance(m.extrusion_length)] * 5, instrument_from(cfg), c["v_exc"])
    rows = []
    for f in c["frequencies"]:
        r = simultaneous_readout(params, 2 * math.pi * f)
        rows.append([_fmt(f), _fmt(r.v_diff.real), _fmt(r.v_diff.imag), _fmt(r.v_common.real),
                     _fmt(r.v_common.imag), _fmt(r.c_m)])
    cols = ["frequency_Hz", "re_v_diff", "im_v_diff", "re_v_common", "im_v_common", "C_m_F"]
    _write_csv(out / "circuit.csv", header, cols, rows)
    return [f"f={r[0]} Hz  C_m={r[5]} F" for r in rows]


def cmd_scenario(cfg, out: Path, args):
    spec = scenario_spec_from(cfg, args.name)
    results = run_scenario(spec, threads=default_threads())
    settings = " ".join(f"{k}={_fmt(v)}" for k, v in sorted(spec.solver_settings().items()))
    header = _header(cfg, [f"scenario {args.name}", f"settings {settings}",
                           "estimates " + (",".join(spec.estimate_flags()) or "none")])
    path = out / f"scenario_{args.name}.csv"
    write_scenario_csv(path, results, header)
    if args.plot:
        plot_scenario(out / f"scenario_{args.name}.svg", results, args.name)
    lines = [f"wrote {path} ({sum(len(r.readouts) for r in results)} rows)"]
    for r in results:
        parts = [f"{m}={r.normalized[m]:.4f}" for m in r.readouts]
        if r.c_m is not None:
            parts.append(f"C_m={r.c_m * 1e12:.4f} pF")
        lines.append(f"  {r.sweep_value}: " + "  ".join(parts))
    return lines


def cmd_validate(cfg, out: Path, args):
    results = run_checks()
    width = max(len(r.name) for r in results)
    lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<{width}}  {r.detail}" for r in results]
    return lines, all(r.passed for r in results)


COMMANDS = {
    "inductive": cmd_inductive,
    "capacitive": cmd_capacitive,
    "circuit": cmd_circuit,
    "scenario": cmd_scenario,
    "validate": cmd_validate,
}


def dispatch(args) -> int:
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"dualem: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, OverrideError) else EXIT_SOLVER
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"dualem: cannot create output directory {str(out)!r}: {exc.strerror}", file=sys.stderr)
        return EXIT_SOLVER
    try:
        result = COMMANDS[args.command](cfg, out, args)
    except (DualEMError, ValueError, TypeError, KeyError) as exc:
        print(f"dualem: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    ok = True
    if isinstance(result, tuple):
        result, ok = result
    if not args.quiet or not ok:
        for line in result:
            print(line)
    return EXIT_OK if ok else EXIT_VALIDATION


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return dispatch(args)


if __name__ == "__main__":
    sys.exit(main())
