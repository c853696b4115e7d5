"""Command-line entry point.

Subcommands: solve, feasibility, blockage-sweep, misalignment-sweep,
strict-hc, queue-sim, oracle-check, config.  Every experiment writes a
CSV (RFC-4180, shortest round-trip float formatting) plus a JSON run
manifest; re-running from a manifest reproduces the CSV byte-for-byte.

Exit codes: 0 success, 1 config error, 2 numerical non-convergence,
3 infeasibility.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from .channel import derive_link_budget
from .config import ConfigError, SystemConfig, default_config_text, load_config
from .experiments import (
    BeamAdaptationError,
    blockage_sweep,
    delay_sweep,
    feasibility_region,
    misalignment_sweep,
    strict_hc_sweep,
    sweep_metadata,
)
from .optimizer import grid_oracle, random_config, sca_solve

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NO_CONVERGENCE = 2
EXIT_INFEASIBLE = 3


def parse_grid(spec: str) -> list[float]:
    """Parse a ``start:step:end`` grid specification (end inclusive)."""
    try:
        start, step_, end = (float(x) for x in spec.split(":"))
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}, expected start:step:end") from exc
    if step_ <= 0 or end < start:
        raise ConfigError(f"bad grid spec {spec!r}: need step > 0 and end >= start")
    n = int(round((end - start) / step_))
    grid = [start + i * step_ for i in range(n + 1)]
    if grid[-1] > end + 1e-12 * max(1.0, abs(end)):
        grid.pop()
    return grid


def _load_cfg(args) -> SystemConfig:
    cfg = load_config(args.config) if args.config else SystemConfig()
    if getattr(args, "alpha", None) is not None:
        cfg = cfg.with_(alpha=args.alpha)
    return cfg


def _write_manifest(path: str, experiment: str, cfg: SystemConfig, args,
                    outputs: list[str], t0: float) -> None:
    manifest = {
        "experiment": experiment,
        "config": cfg.as_dict(),
        "args": {
            k: v
            for k, v in vars(args).items()
            if k not in ("func", "config", "command", "out", "_t0")
            and v is not None
        },
        "outputs": outputs,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "config_hash": sweep_metadata(cfg)["config_hash"],
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "wall_time_s": time.time() - t0,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(result, out: str | None, experiment: str, cfg: SystemConfig, args,
          t0: float) -> None:
    if out:
        result.write_csv(out)
        _write_manifest(out + ".manifest.json", experiment, cfg, args, [out], t0)
    else:
        writer = csv.writer(sys.stdout)
        cols = list(result.records[0].keys())
        writer.writerow(cols)
        for rec in result.records:
            writer.writerow([rec[c] for c in cols])


def cmd_config(args) -> int:
    if args.show_defaults:
        sys.stdout.write(default_config_text())
    else:
        cfg = _load_cfg(args)
        json.dump(cfg.as_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load_cfg(args)
    budget = derive_link_budget(cfg)
    hook = None
    if args.trace:
        def hook(it, obj, mu, p):
            line = {
                "iteration": it,
                "objective": obj,
                "mu": [mu.mu_h_01, mu.mu_h_10, mu.mu_h_11, mu.mu_l],
                "p": [p.p_h_d, p.p_h_r, p.p_l_d, p.p_l_r],
            }
            print(json.dumps(line), file=sys.stderr)
    res = sca_solve(cfg, budget, trace_hook=hook)
    payload = {
        "p": asdict(res.p),
        "R_h": res.R.R_h,
        "R_l": res.R.R_l,
        "delta_h": _jsonable(res.delta[0]),
        "delta_l": _jsonable(res.delta[1]),
        "objective": _jsonable(res.objective),
        "iterations": res.iterations,
        "converged": res.converged,
    }
    json.dump(payload, sys.stdout, indent=2)
    sys.stdout.write("\n")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        _write_manifest(
            args.out + ".manifest.json", "solve", cfg, args, [args.out], args._t0
        )
    return EXIT_OK if res.converged else EXIT_NO_CONVERGENCE


def _jsonable(x: float):
    return x if math.isfinite(x) else repr(x)


def cmd_feasibility(args) -> int:
    cfg = _load_cfg(args)
    res = feasibility_region(cfg, parse_grid(args.alpha_grid), jobs=args.jobs)
    _emit(res, args.out, "feasibility", cfg, args, args._t0)
    return EXIT_OK


def cmd_blockage_sweep(args) -> int:
    cfg = _load_cfg(args)
    res = blockage_sweep(cfg, parse_grid(args.qd_grid), jobs=args.jobs)
    _emit(res, args.out, "blockage-sweep", cfg, args, args._t0)
    return EXIT_OK


def cmd_misalignment_sweep(args) -> int:
    cfg = _load_cfg(args)
    res = misalignment_sweep(cfg, parse_grid(args.sigma_grid), jobs=args.jobs)
    _emit(res, args.out, "misalignment-sweep", cfg, args, args._t0)
    return EXIT_OK


def cmd_strict_hc(args) -> int:
    cfg = _load_cfg(args)
    res = strict_hc_sweep(
        cfg,
        parse_grid(args.sigma_grid),
        alpha_min=args.alpha_min,
        target=args.target,
        jobs=args.jobs,
    )
    _emit(res, args.out, "strict-hc", cfg, args, args._t0)
    return EXIT_OK


def cmd_queue_sim(args) -> int:
    cfg = _load_cfg(args)
    grid = parse_grid(args.alpha_grid)
    schemes = ["mcsc", "time_sharing"] if args.scheme == "both" else [args.scheme]
    records = []
    res = None
    for scheme in schemes:
        res = delay_sweep(
            cfg,
            grid,
            scheme,
            n_slots=args.slots,
            n_reps=args.reps,
            master_seed=args.seed,
            jobs=args.jobs,
        )
        records.extend(res.records)
    res.records = records
    _emit(res, args.out, "queue-sim", cfg, args, args._t0)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = _load_cfg(args)
    rng = np.random.default_rng(args.seed)
    failures = 0
    for i in range(args.n):
        c = random_config(rng, base=cfg)
        budget = derive_link_budget(c)
        sca = sca_solve(c, budget)
        ref = grid_oracle(c, budget, n_grid=args.grid)
        tol = 1e-3 * (1.0 + abs(ref.objective))
        ok = abs(sca.objective - ref.objective) <= tol
        monotone = all(
            b >= a - 1e-8 * (1.0 + abs(a))
            for a, b in zip(sca.objective_trace, sca.objective_trace[1:])
        )
        status = "ok" if ok and monotone else "FAIL"
        print(
            f"[{i:3d}] {status} sca={sca.objective:.6g} grid={ref.objective:.6g} "
            f"monotone={monotone}"
        )
        if not (ok and monotone):
            failures += 1
    print(f"oracle-check: {args.n - failures}/{args.n} passed")
    return EXIT_OK if failures == 0 else EXIT_NO_CONVERGENCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risthz",
        description="RIS-assisted THz mixed-criticality link simulator/optimizer",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grids=()):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output CSV path (manifest written alongside)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        p.add_argument("--trace", action="store_true",
                       help="emit per-iteration solver diagnostics on stderr")
        for name, default, hlp in grids:
            p.add_argument(name, default=default, help=hlp)

    p = sub.add_parser("config", help="show resolved or default configuration")
    common(p)
    p.add_argument("--show-defaults", action="store_true")
    p.set_defaults(func=cmd_config)

    p = sub.add_parser("solve", help="solve the power allocation at one alpha")
    common(p)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("feasibility", help="max arrival rate over the alpha grid")
    common(p, [("--alpha-grid", "0:0.05:1", "alpha grid start:step:end")])
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("blockage-sweep", help="throughput vs direct blockage")
    common(p, [("--qd-grid", "0:0.1:0.5", "q_d grid start:step:end")])
    p.set_defaults(func=cmd_blockage_sweep)

    p = sub.add_parser("misalignment-sweep", help="throughput vs pointing error")
    common(p, [("--sigma-grid", "0.02:0.04:0.3", "sigma_m grid start:step:end")])
    p.set_defaults(func=cmd_misalignment_sweep)

    p = sub.add_parser("strict-hc", help="beamwidth-adapted strict-HC comparison")
    common(p, [("--sigma-grid", "0.04:0.05:0.24", "sigma_m grid start:step:end")])
    p.add_argument("--alpha-min", type=float, default=0.3)
    p.add_argument("--target", type=float, default=0.05)
    p.set_defaults(func=cmd_strict_hc)

    p = sub.add_parser("queue-sim", help="queueing delay/peak sweep")
    common(p, [("--alpha-grid", "0:0.05:1", "alpha grid start:step:end")])
    p.add_argument("--scheme", choices=["mcsc", "time_sharing", "both"],
                   default="mcsc")
    p.add_argument("--slots", type=int, default=20000)
    p.add_argument("--reps", type=int, default=1)
    p.set_defaults(func=cmd_queue_sim)

    p = sub.add_parser("oracle-check", help="verify SCA against the grid oracle")
    common(p)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--grid", type=int, default=500)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def run_from_manifest(manifest_path: str, out: str) -> int:
    """Re-execute the experiment recorded in a run manifest, writing its
    CSV to ``out``.  Given the same build, the output is byte-identical."""
    with open(manifest_path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    argv = [manifest["experiment"], "--out", out]
    for key, value in manifest["args"].items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv.extend([flag, str(value)])
    # replay the resolved config through a temp key=value document
    cfg_lines = [f"{k} = {v!r}" for k, v in manifest["config"].items()]
    with tempfile.NamedTemporaryFile(
        "w", suffix=".cfg", delete=False, encoding="utf-8"
    ) as fh:
        fh.write("\n".join(cfg_lines) + "\n")
        cfg_path = fh.name
    try:
        argv.extend(["--config", cfg_path])
        return main(argv)
    finally:
        os.unlink(cfg_path)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._t0 = time.time()
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BeamAdaptationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
