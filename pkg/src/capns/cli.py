"""Command-line entry points.

    capns simulate <cfg> [--out DIR]       run one model, write snapshots
    capns sweep <cfg> [--out DIR]          convergence sweep + rate figure
    capns norms <snapshot> --s S [--beta B] [--out DIR]
    capns verify-symbols [--grid d,n,L] [--out DIR]

Exit code 0 on success / all-PASS; nonzero with a machine-readable failure
list otherwise.  CAPNS_OUTPUT_ROOT sets the default output root.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from capns import verify
from capns.besov import besov_norm, block_decomposition, build_partition, hybrid_norm
from capns.config import ConfigError, config_hash, parse_config, serialize
from capns.convergence import (
    SweepSpec,
    default_h_menu,
    reeval_at_h,
    run_alpha_sweep,
    run_epsilon_sweep,
)
from capns.outputs import (
    atomic_write_text,
    output_root,
    read_snapshot,
    write_manifest,
    write_report,
    write_snapshot,
    write_trajectory,
)
from capns.solver import SolverHalt, State, make_initial_data, simulate
from capns import plots


def _outdir(args, cfg, default_name: str) -> str:
    if args.out:
        return args.out
    configured = cfg.get("output", "directory") if cfg is not None else ""
    if configured:
        return configured
    return os.path.join(output_root(), default_name)


def _fail(outdir: str, failures: list) -> int:
    payload = json.dumps({"failures": failures}, indent=2, sort_keys=True)
    print(payload, file=sys.stderr)
    if outdir:
        atomic_write_text(os.path.join(outdir, "failures.json"), payload + "\n")
    return 1


def cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    outdir = _outdir(args, cfg, f"simulate-{config_hash(cfg)[:8]}")
    grid = cfg.grid()
    model = cfg.model()
    initial = make_initial_data(grid, cfg.profile())
    try:
        traj = simulate(grid, initial, model, cfg.params(), cfg.law(), cfg.stepper())
    except SolverHalt as halt:
        os.makedirs(outdir, exist_ok=True)
        snap = halt.snapshot
        if "q" in snap and "u" in snap:
            u = np.asarray(snap["u"])
            if u.shape[0] != grid.dim:
                u = np.stack(list(snap["u"]))
            write_snapshot(
                os.path.join(outdir, "halt_snapshot.bin"),
                grid,
                State(t=float(snap.get("t", -1.0)), q=np.asarray(snap["q"]), u=u),
            )
        write_manifest(outdir, {"config": serialize(cfg), "halted": str(halt)})
        return _fail(outdir, [{"name": "simulate", "detail": str(halt)}])

    paths = write_trajectory(outdir, traj)
    plots.field_plot(grid, traj.state(traj.n_samples - 1), os.path.join(outdir, "final_state.png"))
    write_manifest(
        outdir,
        {
            "config": serialize(cfg),
            "config_sha256": config_hash(cfg),
            "run": traj.manifest,
            "samples": len(paths),
        },
    )
    print(f"simulate: {len(paths)} samples -> {outdir}")
    return 0


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config)
    values = cfg.sweep_values()
    if len(values) < 3:
        raise ConfigError("sweep requires >= 3 points")
    family = cfg.get("sweep", "family")
    grid = cfg.grid()
    h_cfg = cfg.get("sweep", "h")
    h_menu = [h_cfg] if h_cfg is not None else list(default_h_menu(grid.dim))
    spec = SweepSpec(
        family=family,
        values=tuple(values),
        h=h_menu[0],
        kappa=cfg.get("model", "kappa"),
        grid=grid,
        params=cfg.params(),
        law=cfg.law(),
        cfg=cfg.stepper(),
        profile=cfg.profile(),
    )
    runner = run_epsilon_sweep if family == "NSRW" else run_alpha_sweep
    first = runner(spec, keep_trajectories=len(h_menu) > 1)
    reports = [first] + [reeval_at_h(spec, first, h) for h in h_menu[1:]]
    first.trajectories = None  # runs are not part of the written artifact

    outdir = _outdir(args, cfg, f"sweep-{config_hash(cfg)[:8]}")
    failures = []
    for report in reports:
        name = "sweep" if len(reports) == 1 else f"sweep_h{report.h:g}"
        fig = "rate.png" if len(reports) == 1 else f"{name}_rate.png"
        files = write_report(outdir, report, name=name)
        plots.rate_plot(report, os.path.join(outdir, fig))
        print(
            f"sweep {family} h={report.h:g}: verdict={report.verdict} "
            f"slope={report.slope} -> {files['csv']}"
        )
        if not (report.passed or report.verdict.startswith("degenerate")):
            failures.append(
                {"name": name, "detail": report.verdict, "slope": report.slope, "h": report.h}
            )
    write_manifest(
        outdir,
        {
            "config": serialize(cfg),
            "config_sha256": config_hash(cfg),
            "verdicts": {f"h={r.h:g}": r.verdict for r in reports},
        },
    )
    return _fail(outdir, failures) if failures else 0


def cmd_norms(args) -> int:
    grid, state = read_snapshot(args.snapshot)
    p = build_partition(grid)
    outdir = _outdir(args, None, "norms")
    os.makedirs(outdir, exist_ok=True)
    decomp = block_decomposition(p, state.q, s=args.s, beta=args.beta)
    csv_path = os.path.join(outdir, "blocks.csv")
    atomic_write_text(csv_path, decomp.to_csv())
    plots.block_spectrum_plot(decomp, os.path.join(outdir, "blocks.png"))
    b = besov_norm(p, state.q, args.s)
    print(f"besov(q, s={args.s:g}) = {b!r}")
    if args.beta is not None:
        print(f"hybrid(q, s={args.s:g}, beta={args.beta:g}) = {hybrid_norm(p, state.q, args.s, args.beta)!r}")
    print(f"blocks -> {csv_path}")
    return 0


def cmd_verify_symbols(args) -> int:
    grid = None
    if args.grid:
        try:
            d, n, L = args.grid.split(",")
            from capns.grid import make_grid

            grid = make_grid(int(d), int(n), float(L))
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"--grid expects dim,n,length: {exc}") from None
    checks = verify.run_all(grid)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['detail']}")
    failures = [c for c in checks if not c["passed"]]
    outdir = args.out or ""
    if outdir:
        os.makedirs(outdir, exist_ok=True)
        atomic_write_text(
            os.path.join(outdir, "verify_symbols.json"),
            json.dumps(checks, indent=2, sort_keys=True) + "\n",
        )
    if failures:
        return _fail(outdir, failures)
    print(f"all {len(checks)} checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="capns", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one model from a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("sweep", help="convergence sweep from a config file")
    p.add_argument("config")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("norms", help="block decomposition of a snapshot")
    p.add_argument("snapshot")
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("verify-symbols", help="run the exact-identity certification")
    p.add_argument("--grid", default=None, help="dim,n,length")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_verify_symbols)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
