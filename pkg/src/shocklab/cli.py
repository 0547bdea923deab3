"""Command line front end.

Subcommands: hugoniot (jump conditions as JSON), profile (wave table as
CSV), simulate (full run into a directory), analyze (recompute the energy
ledger from snapshots), check (inequality suite). Exit codes: 0 success,
1 runtime abort or failed check, 2 configuration or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .config import ConfigError, SimConfig, parse_config, read_config
from .diagnostics import energy_record, inequality_checks, write_energy_csv
from .gas import check_lax, solve_hugoniot
from .grid import MassTooLarge, SnapshotError, make_boundary, read_snapshot
from .profile import build_profile
from .solver import run


def _config_from_args(args) -> SimConfig:
    cfg = read_config(args.config) if args.config else parse_config("")
    if args.set:
        merged = cfg.to_key_values()
        for item in args.set:
            key, _, value = item.partition("=")
            if not value:
                raise ConfigError(f"--set needs key=value, got {item!r}")
            merged[key.strip()] = value.strip()
        text = "\n".join(f"{k} = {v}" for k, v in merged.items())
        cfg = parse_config(text)
    return cfg


def _add_config_options(sub) -> None:
    sub.add_argument("-c", "--config", help="configuration file")
    sub.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override one configuration key (repeatable)")


def cmd_hugoniot(args) -> int:
    cfg = _config_from_args(args)
    conn = solve_hugoniot(cfg.gas_params(), cfg.rho_minus, cfg.delta)
    lax = check_lax(conn)
    doc = {
        "gas": asdict(conn.gas),
        "rho_minus": conn.minus.rho,
        "rho_plus": conn.plus.rho,
        "u1_minus": conn.minus.u1,
        "u1_plus": conn.plus.u1,
        "speed": conn.speed,
        "delta": conn.delta,
        "mass_flux": conn.mass_flux,
        "lax": asdict(lax),
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_profile(args) -> int:
    cfg = _config_from_args(args)
    conn = solve_hugoniot(cfg.gas_params(), cfg.rho_minus, cfg.delta)
    table = build_profile(conn)
    cols = ("xi", "rho_bar", "u1_bar", "u1_prime", "u1_second", "m_bar",
            "w_bar")
    arrays = [table.xi, table.rho_bar, table.u1_bar, table.u1_prime,
              table.u1_second, table.m_bar, table.w_bar]
    lines = [",".join(cols)]
    for row in zip(*arrays):
        lines.append(",".join("%.17g" % v for v in row))
    out = Path(args.out)
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {out} ({table.xi.size} nodes, "
          f"xi in [{table.xi[0]:.4g}, {table.xi[-1]:.4g}])")
    return 0


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    art = run(cfg, args.out)
    for w in art.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"alpha = {art.alpha:.12g}")
    print(f"{art.n_steps} steps, {len(art.records)} output records "
          f"-> {art.path}")
    if art.abort is not None:
        print(f"ABORT {art.abort['type']} at t = {art.abort['time']:.6g}: "
              f"{art.abort['message']}", file=sys.stderr)
        return 1
    return 0


def analyze_run(run_dir):
    """Recompute the energy ledger from a run directory's snapshots.

    Returns (records, meta). Byte-identical to the run's own energy.csv by
    construction: same table, same boundary data, and exact snapshot
    round-trips of the states.
    """
    run_dir = Path(run_dir)
    meta_path = run_dir / "run.json"
    if not meta_path.is_file():
        raise SnapshotError(f"no run.json in {run_dir}")
    meta = json.loads(meta_path.read_text())
    text = "\n".join(f"{k} = {v}" for k, v in meta["config"].items())
    cfg = parse_config(text)
    conn = solve_hugoniot(cfg.gas_params(), cfg.rho_minus, cfg.delta)
    table = build_profile(conn)
    alpha = meta["alpha"]
    records = []
    prev = None
    bc = None
    for entry in meta["outputs"]:
        state = read_snapshot(run_dir / entry["snapshot"])
        if bc is None:
            bc = make_boundary(state.grid, conn, cfg.k_mean, cfg.k_amp)
        records.append(energy_record(state, table, alpha, bc, prev=prev))
        prev = state
    return records, meta


def cmd_analyze(args) -> int:
    records, _ = analyze_run(args.run_dir)
    run_dir = Path(args.run_dir)
    csv_path = run_dir / "energy.csv"
    recheck = run_dir / "energy_recheck.csv"
    write_energy_csv(records, recheck)
    fresh = recheck.read_bytes()
    if not csv_path.is_file():
        csv_path.write_bytes(fresh)
        recheck.unlink()
        print(f"no prior ledger; wrote {csv_path} ({len(records)} records)")
        return 0
    if csv_path.read_bytes() == fresh:
        recheck.unlink()
        print(f"energy.csv reproduced byte-identically "
              f"({len(records)} records)")
        return 0
    print(f"MISMATCH: recomputation differs from {csv_path}; "
          f"kept {recheck}", file=sys.stderr)
    return 1


def cmd_check(args) -> int:
    rep = inequality_checks(samples=args.samples)
    doc = rep.to_dict()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / "inequality_report.json"
    out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for key, value in sorted(doc.items()):
        print(f"{key} = {value}")
    print(f"wrote {out}")
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shocklab",
        description="planar viscous shock laboratory on the slip-wall slab",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("hugoniot", help="print shock jump data as JSON")
    _add_config_options(p)
    p.set_defaults(func=cmd_hugoniot)

    p = subs.add_parser("profile", help="tabulate the viscous profile to CSV")
    _add_config_options(p)
    p.add_argument("-o", "--out", default="profile.csv", help="output file")
    p.set_defaults(func=cmd_profile)

    p = subs.add_parser("simulate", help="execute a configured run")
    _add_config_options(p)
    p.add_argument("-o", "--out", required=True, help="run directory")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("analyze",
                        help="recompute the energy ledger from snapshots")
    p.add_argument("run_dir", help="directory produced by simulate")
    p.set_defaults(func=cmd_analyze)

    p = subs.add_parser("check", help="run the functional-inequality suite")
    p.add_argument("--samples", type=int, default=100,
                   help="random fields per inequality (default 100)")
    p.add_argument("-o", "--out", default=".",
                   help="directory for inequality_report.json")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MassTooLarge, SnapshotError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
