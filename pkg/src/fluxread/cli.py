"""Command-line interface: deterministic artifact emission for every report.

Machine-readable summaries go to stdout, progress to stderr.  All dimensioned
flags require an explicit unit suffix (fF/pF, pH/nH, uA, ns, ...); bare
numbers are rejected to keep unit errors out of the pipeline.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (run_point, sweep, table3_rows, write_rows_csv,
                       write_table2_csv, write_table3_csv)
from .circuit import PhysicalParams, load_config, to_dimensionless
from .dynamics import (evolve_amplitudes, fidelity_report, oracle_overlap,
                       splitstep_oracle)
from .errors import FluxreadError
from .spectrum import GridSpec, dump_csv, solve_spectrum

_UNIT = {
    "capacitance": {"fF": 1e-15, "pF": 1e-12, "nF": 1e-9},
    "inductance": {"pH": 1e-12, "nH": 1e-9, "uH": 1e-6, "µH": 1e-6},
    "current": {"nA": 1e-9, "uA": 1e-6, "µA": 1e-6, "mA": 1e-3},
    # internal time unit is ns
    "time": {"ps": 1e-3, "ns": 1.0, "us": 1e3, "µs": 1e3},
}

_PARAM_DIMENSION = {
    "C": "capacitance", "Cr": "capacitance",
    "L": "inductance", "Lr": "inductance", "M": "inductance",
    "I0": "current",
}


def parse_quantity(text: str, dimension: str) -> float:
    """Strictly parse `1.8nH`-style values; bare numbers are an error."""
    stripped = text.strip()
    try:
        float(stripped)
    except ValueError:
        pass
    else:
        raise argparse.ArgumentTypeError(
            f"{text!r}: bare number; an explicit unit suffix is required "
            f"(one of {sorted(_UNIT[dimension])})"
        )
    m = re.fullmatch(r"([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*([a-zA-Zµ]+)",
                     stripped)
    if not m:
        raise argparse.ArgumentTypeError(
            f"{text!r}: expected <number><unit> with an explicit unit suffix"
        )
    value, unit = float(m.group(1)), m.group(2)
    scales = _UNIT[dimension]
    if unit not in scales:
        raise argparse.ArgumentTypeError(
            f"{text!r}: unit {unit!r} is not a {dimension} unit "
            f"(expected one of {sorted(scales)})"
        )
    return value * scales[unit]


def _qty(dimension):
    def parse(text):
        return parse_quantity(text, dimension)
    return parse


def parse_range(text: str, dimension: str) -> tuple[float, float]:
    """Parse `0.3:1.2pF` (suffix applies to both ends) or `0.3pF:1.2pF`."""
    lo_s, hi_s = text.split(":", 1)
    hi = parse_quantity(hi_s, dimension)
    try:
        lo = parse_quantity(lo_s, dimension)
    except argparse.ArgumentTypeError:
        m = re.fullmatch(r"[-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?", lo_s.strip())
        if not m:
            raise
        unit = re.fullmatch(r".*?([a-zA-Zµ]+)", hi_s.strip()).group(1)
        lo = float(lo_s) * _UNIT[dimension][unit]
    return lo, hi


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _resolve_params(args) -> PhysicalParams:
    pp = load_config(args.config) if args.config else PhysicalParams()
    overrides = {}
    for name in ("C", "L", "I0", "Cr", "Lr", "M"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    if getattr(args, "phi_p", None) is not None:
        overrides["phi_p"] = args.phi_p
    if getattr(args, "n_quanta", None) is not None:
        overrides["n_quanta"] = args.n_quanta
    return pp.with_(**overrides) if overrides else pp.validate()


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, command: str, pp: PhysicalParams, options: dict) -> None:
    data = {
        "tool": "fluxread",
        "version": __version__,
        "command": command,
        "params_SI": {k: getattr(pp, k) for k in
                      ("C", "L", "I0", "Cr", "Lr", "M", "phi_p", "n_quanta")},
        "options": options,
    }
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _write_trajectory_csv(path, traj) -> None:
    with open(path, "w") as fh:
        fh.write("t_ns,phi_r,p_r,theta\n")
        for i in range(len(traj.t)):
            fh.write(f"{traj.t[i]!r},{traj.phi_r[i]!r},{traj.p_r[i]!r},{traj.theta[i]!r}\n")


def cmd_spectrum(args) -> int:
    pp = _resolve_params(args)
    dp = to_dimensionless(pp)
    out = _out_dir(args)
    spec = solve_spectrum(args.phi_r, dp,
                          GridSpec(points=args.grid, verify=args.verify_grid))
    dump_csv(spec, out / "spectrum.csv")
    if not args.no_figures:
        from .plots import render_spectrum
        render_spectrum(spec, dp, out / "spectrum.png")
    _manifest(out, "spectrum", pp, {"phi_r": args.phi_r, "grid": args.grid,
                                "verify_grid": args.verify_grid})
    _emit({
        "n_left": spec.n_left,
        "energies_GHz": [float(e) for e in spec.energies],
        "barrier_GHz": spec.geometry.U_barrier,
        "f01_GHz": float(spec.energies[1] - spec.energies[0]) if spec.n_left > 1 else None,
        "files": ["spectrum.csv"],
    })
    return 0


def cmd_phase(args) -> int:
    from .analysis import pipeline_point
    from .resonator import reference_trajectory

    pp = _resolve_params(args)
    out = _out_dir(args)
    _progress(f"phase: integrating {args.t_end} ns trajectories ...")
    res = pipeline_point(pp, t_a=args.t_a, t_end=args.t_end,
                         need_fidelity=False, need_extremes=False)
    ref = reference_trajectory(res.dp, args.t_end)
    for n in (0, 1):
        _write_trajectory_csv(out / f"trajectory_n{n}.csv", res.trajectories[n])
    _write_trajectory_csv(out / "trajectory_reference.csv", ref)
    obs = res.observables
    dressed = {
        f"dressed_f{n}_GHz": float(np.polyfit(res.trajectories[n].t,
                                              res.trajectories[n].theta, 1)[0]
                                   / (2.0 * np.pi))
        for n in (0, 1)
    }
    summary = {
        "rate_rad_per_ns": obs.rate,
        "theta_ta_rad": obs.diff_at(args.t_a),
        "t_a_ns": args.t_a,
        "A_0": res.trajectories[0].A,
        "A_1": res.trajectories[1].A,
        **dressed,
    }
    (out / "phase_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.no_figures:
        from .plots import render_phase
        render_phase(obs, out / "phase.png")
    _manifest(out, "phase", pp, {"t_end": args.t_end, "t_a": args.t_a})
    _emit(summary)
    return 0


def cmd_fidelity(args) -> int:
    from .analysis import pipeline_point

    pp = _resolve_params(args)
    out = _out_dir(args)
    t_end = max(args.t_a, args.t_end or 0.0)
    states = (0, 1) if args.n0 == "both" else (int(args.n0),)
    _progress(f"fidelity: evolving amplitudes over {t_end} ns ...")
    res = pipeline_point(pp, t_a=args.t_a, t_end=t_end, states=(0, 1),
                         need_fidelity=False, need_extremes=False)
    reports = []
    payload = {"t_a_ns": args.t_a}
    for n0 in states:
        amp = evolve_amplitudes(n0, res.dp, res.trajectories[n0], t_end=t_end,
                                table=res.table)
        rep = fidelity_report(amp, args.t_a,
                              theta_at_ta=res.observables.diff_at(args.t_a))
        reports.append(rep)
        with open(out / f"fidelity_n{n0}.csv", "w") as fh:
            fh.write("t_ns,f\n")
            for i in range(len(rep.t)):
                fh.write(f"{rep.t[i]!r},{rep.f_t[i]!r}\n")
        with open(out / f"events_n{n0}.csv", "w") as fh:
            fh.write("t_ns,level\n")
            for t, lvl in rep.truncation_events:
                fh.write(f"{t!r},{lvl}\n")
        payload[f"F{n0}"] = rep.F
        payload[f"events_n{n0}"] = len(rep.truncation_events)
        if args.oracle_check:
            oc = splitstep_oracle(n0, res.dp, res.trajectories[n0],
                                  t_end=min(args.oracle_t_end, t_end), table=res.table)
            ov = oracle_overlap(oc, amp)
            payload[f"oracle_min_overlap_n{n0}"] = float(ov.min())
    payload["theta_at_ta_rad"] = res.observables.diff_at(args.t_a)
    (out / "fidelity_report.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    if not args.no_figures:
        from .plots import render_fidelity
        render_fidelity(reports, out / "fidelity.png")
    _manifest(out, "fidelity", pp, {"t_a": args.t_a, "t_end": t_end,
                                    "n0": args.n0, "oracle": args.oracle_check})
    _emit(payload)
    return 0


def cmd_tables(args) -> int:
    pp = _resolve_params(args)
    out = _out_dir(args)
    emitted = []
    if args.which in ("2", "all"):
        write_table2_csv(out / "table2.csv", t_m=args.t_m)
        emitted.append("table2.csv")
    if args.which in ("1", "all"):
        _progress("tables: full pipeline for each mutual-inductance row ...")
        rows = []
        for M in (0.5e-9, 1.0e-9, 1.5e-9, 1.8e-9, 2.0e-9):
            _progress(f"  M = {M * 1e9:.1f} nH")
            rows.append(run_point(pp.with_(M=M), t_a=args.t_a,
                                  t_end=args.t_end, swept_param="M", value=M))
        write_rows_csv(out / "table1.csv", rows)
        emitted.append("table1.csv")
    if args.which in ("3", "all"):
        _progress("tables: reproducibility-target bisection per parameter ...")
        rows3 = table3_rows(pp, F1_required=args.F1_req, t_a=args.t_a)
        write_table3_csv(out / "table3.csv", rows3)
        emitted.append("table3.csv")
    _manifest(out, "tables", pp, {"which": args.which, "t_a": args.t_a,
                                  "F1_req": args.F1_req, "t_m": args.t_m})
    _emit({"files": emitted})
    return 0


_FIG_BY_PARAM = {"M": "fig5", "L": "fig6", "C": "fig7",
                 "Lr": "fig8", "Cr": "fig9", "I0": "fig10"}


def cmd_sweep(args) -> int:
    pp = _resolve_params(args)
    out = _out_dir(args)
    dim = _PARAM_DIMENSION[args.param]
    lo, hi = parse_range(args.range, dim)
    values = list(np.linspace(lo, hi, args.points))
    variants = None
    if args.M_variants:
        variants = [parse_quantity(tok, "inductance")
                    for tok in args.M_variants.split(",")]
    elif args.param != "M":
        variants = [pp.M]
    _progress(f"sweep: {args.param} over [{lo:g}, {hi:g}] x "
              f"{len(variants) if variants else 1} M variant(s)")
    rows = sweep(args.param, values, pp, M_variants=variants,
                 t_a=args.t_a, t_end=args.t_end)
    name = _FIG_BY_PARAM[args.param]
    write_rows_csv(out / f"{name}.csv", rows)
    if not args.no_figures:
        from .plots import render_sweep
        render_sweep(rows, args.param, out / f"{name}.png")
    _manifest(out, "sweep", pp, {"param": args.param, "range": [lo, hi],
                                 "points": args.points,
                                 "M_variants": variants, "t_a": args.t_a,
                                 "t_end": args.t_end})
    _emit({"file": f"{name}.csv",
           "ok_rows": sum(1 for r in rows if r.status == "ok"),
           "failed_rows": sum(1 for r in rows if r.status != "ok")})
    return 0


def cmd_oracle_check(args) -> int:
    from .analysis import pipeline_point

    pp = _resolve_params(args)
    out = _out_dir(args)
    t_orbit = max(args.t_end, 3.0 / to_dimensionless(pp).f_r)
    res = pipeline_point(pp, t_a=args.t_end, t_end=t_orbit,
                         need_fidelity=False, need_extremes=False)
    payload = {"t_end_ns": args.t_end}
    for n0 in (0, 1):
        amp = evolve_amplitudes(n0, res.dp, res.trajectories[n0],
                                t_end=args.t_end, table=res.table)
        oc = splitstep_oracle(n0, res.dp, res.trajectories[n0],
                              t_end=args.t_end, table=res.table)
        ov = oracle_overlap(oc, amp)
        payload[f"min_overlap_n{n0}"] = float(ov.min())
        payload[f"final_norm_n{n0}"] = float(oc.norms[-1])
    (out / "oracle_check.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _manifest(out, "oracle-check", pp, {"t_end": args.t_end})
    _emit(payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fluxread",
        description="Adiabatic non-demolition readout simulator for a "
                    "flux-biased phase qubit coupled to a quasi-classical resonator.",
    )
    ap.add_argument("--version", action="version", version=f"fluxread {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", type=str, default=None,
                       help="key-value config file (C_fF, L_pH, ...)")
        p.add_argument("--out-dir", type=str, default="out")
        p.add_argument("--no-figures", action="store_true")
        p.add_argument("--C", type=_qty("capacitance"), default=None, metavar="Q[fF|pF]")
        p.add_argument("--L", type=_qty("inductance"), default=None, metavar="Q[pH|nH]")
        p.add_argument("--I0", type=_qty("current"), default=None, metavar="Q[uA]")
        p.add_argument("--Cr", type=_qty("capacitance"), default=None, metavar="Q[pF]")
        p.add_argument("--Lr", type=_qty("inductance"), default=None, metavar="Q[nH]")
        p.add_argument("--M", type=_qty("inductance"), default=None, metavar="Q[nH]")
        p.add_argument("--phi-p", dest="phi_p", type=float, default=None)
        p.add_argument("--n-quanta", dest="n_quanta", type=float, default=None)

    p = sub.add_parser("spectrum", help="instantaneous left-well spectrum dump")
    common(p)
    p.add_argument("--phi-r", dest="phi_r", type=float, default=0.0)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--verify-grid", action="store_true",
                   help="refine the grid until halving shifts stay below 1e-4 GHz")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("phase", help="trajectories, phase shifts and the 0-1 rate")
    common(p)
    p.add_argument("--t-end", type=_qty("time"), default=100.0, metavar="Q[ns]")
    p.add_argument("--t-a", type=_qty("time"), default=10.0, metavar="Q[ns]")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("fidelity", help="amplitude evolution and averaged fidelity")
    common(p)
    p.add_argument("--t-a", type=_qty("time"), default=10.0, metavar="Q[ns]")
    p.add_argument("--t-end", type=_qty("time"), default=None, metavar="Q[ns]")
    p.add_argument("--n0", choices=("0", "1", "both"), default="both")
    p.add_argument("--oracle-check", action="store_true")
    p.add_argument("--oracle-t-end", type=_qty("time"), default=1.0, metavar="Q[ns]")
    p.set_defaults(func=cmd_fidelity)

    p = sub.add_parser("tables", help="emit the summary tables as CSV")
    common(p)
    p.add_argument("--which", choices=("1", "2", "3", "all"), default="all")
    p.add_argument("--t-a", type=_qty("time"), default=10.0, metavar="Q[ns]")
    p.add_argument("--t-end", type=_qty("time"), default=100.0, metavar="Q[ns]")
    p.add_argument("--t-m", type=_qty("time"), default=100.0, metavar="Q[ns]")
    p.add_argument("--F1-req", dest="F1_req", type=float, default=0.9985)
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("sweep", help="figure-style parameter sweeps")
    common(p)
    p.add_argument("--param", choices=sorted(_FIG_BY_PARAM), required=True)
    p.add_argument("--range", required=True,
                   help="lo:hi with a unit suffix, e.g. 0.3:1.2pF")
    p.add_argument("--points", type=int, default=7)
    p.add_argument("--M-variants", dest="M_variants", type=str, default=None,
                   help="comma-separated, e.g. 1nH,1.8nH")
    p.add_argument("--t-a", type=_qty("time"), default=10.0, metavar="Q[ns]")
    p.add_argument("--t-end", type=_qty("time"), default=100.0, metavar="Q[ns]")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check",
                       help="adiabatic-basis vs split-operator cross-validation")
    common(p)
    p.add_argument("--t-end", type=_qty("time"), default=1.0, metavar="Q[ns]")
    p.set_defaults(func=cmd_oracle_check)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FluxreadError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
