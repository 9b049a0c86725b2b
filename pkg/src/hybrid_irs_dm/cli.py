"""Command-line entry point: ``hybrid-irs {run,sweep,oracle,validate}``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .algorithms import METHODS, run_method
from .errors import ConfigError
from .experiments import FIGURES, SweepSpec, emit_plots, run_sweep, write_csv
from .oracle import GridSpec, brute_force
from .scenario import ScenarioConfig, load_config

log = logging.getLogger("hybrid_irs_dm")


def _apply_overrides(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.seed is not None:
        changes["rng_seed"] = args.seed
    if args.epsilon is not None:
        changes["epsilon"] = args.epsilon
    if args.max_iters is not None:
        changes["max_outer_iters"] = args.max_iters
    return cfg.replace(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg, _ = load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    methods = args.methods.split(",") if args.methods else list(METHODS)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for m in methods:
        res = run_method(cfg, m)
        rows.append(
            [m, f"{res.rate:.12g}", res.outer_iters, res.termination.value, f"{res.flops:.12g}",
             f"{res.relay_power:.12g}", int(not res.constraint_report)]
        )
        print(f"{m:>13}  rate={res.rate:.6f} bits/s/Hz  iters={res.outer_iters:<3d} {res.termination.value}"
              f"  Pr={res.relay_power:.3e} W  violations={len(res.constraint_report)}")
    path = out / "run.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# code_version: hybrid_irs_dm {__version__}\n")
        fh.write(f"# scenario: {json.dumps(cfg.to_dict(), sort_keys=True)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "rate_bps_hz", "outer_iters", "termination", "flops", "relay_power_w", "constraints_ok"])
        w.writerows(rows)
    print(f"wrote {path}")
    return 0


def cmd_sweep(args) -> int:
    cfg, raw = load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    spec = SweepSpec.from_config(args.figure_id, raw, args.out)
    if args.seed is not None:
        spec.seeds = [args.seed]
    rows = run_sweep(spec, cfg, jobs=args.jobs)
    csv_path = write_csv(rows, spec, cfg)
    svg_path = emit_plots(rows, spec.figure_id, spec.out_dir, cfg)
    skipped = sum(1 for r in rows if r["status"] == "skipped")
    print(f"wrote {csv_path} and {svg_path} ({len(rows)} rows, {skipped} skipped)")
    return 0


def cmd_oracle(args) -> int:
    cfg, _ = load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    grid = GridSpec(phase_steps=args.phase_steps, amp_steps=args.amp_steps)
    res = brute_force(cfg, grid, jobs=args.jobs)
    print(f"oracle rate {res.best_rate:.9f} bits/s/Hz over {res.candidates} candidates ({res.feasible} feasible)")
    for m in ("fp", "mm", "ear"):
        r = run_method(cfg, m).rate
        print(f"{m:>4}: {r:.9f}  ratio to oracle {r / res.best_rate:.6f}")
    return 0


def cmd_validate(args) -> int:
    cfg, _ = load_config(args.config)
    cfg = _apply_overrides(cfg, args)
    cfg.channels()
    cfg.layout()
    print(json.dumps(cfg.to_dict(), indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybrid-irs", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default="results")
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--epsilon", type=float, default=None)
    common.add_argument("--max-iters", type=int, default=None)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[common], help="run every method on one scenario")
    r.add_argument("config")
    r.add_argument("--methods", default=None, help=f"comma-separated subset of {','.join(METHODS)}")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[common], help="reproduce one figure as CSV + SVG")
    s.add_argument("figure_id", choices=FIGURES)
    s.add_argument("config")
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("oracle", parents=[common], help="brute-force check on a tiny scenario")
    o.add_argument("config")
    o.add_argument("--phase-steps", type=int, default=180)
    o.add_argument("--amp-steps", type=int, default=32)
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("validate", parents=[common], help="check a config and print it resolved")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
