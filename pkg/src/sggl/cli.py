"""Command-line entry points.

Subcommands: skeleton, simulate, controlled, rate, sweep, tail, audit,
verify.  All take --config and --out; --seed overrides the config master
seed, --workers (or SGGL_WORKERS) sizes the trajectory worker pool, and
--resume continues an interrupted sweep from its checkpoint.  Exit codes:
0 ok, 1 invariant violation or module error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from . import harness, outputs
from .config import ConfigError, RunSpec, parse_config
from .jumps import Control, NoiseScale, constant_control
from .params import ParameterError
from .rate import EndpointSpec, OptConfig, estimate_rate
from .skeleton import galerkin_refine, solve_skeleton
from .spde import solve_controlled_spde, solve_spde
from .timestep import BlowUpError
from .verify import run_invariant_suite

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2


def _pool_mapper(workers: int):
    """Order-preserving mapper; results are keyed by index, so statistics are
    identical for any worker count."""
    if workers <= 1:
        return None
    executor = ProcessPoolExecutor(max_workers=workers)

    def mapper(fn, args):
        return executor.map(fn, args, chunksize=8)
    mapper._executor = executor
    return mapper


def _emit_error(out_dir: str, exc: Exception):
    outputs.ensure_dir(out_dir)
    payload = {"error": type(exc).__name__, "message": str(exc)}
    with open(os.path.join(out_dir, "error.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _opt_config(spec: RunSpec) -> OptConfig:
    o = spec.options
    return OptConfig(n_bins=o["rate_n_bins"], rho0=o["rate_rho0"],
                     n_rho=o["rate_n_rho"], max_inner=o["rate_max_inner"],
                     fd_step=o["rate_fd_step"], step0=o["rate_step0"],
                     gap_tol=o["rate_gap_tol"])


def cmd_skeleton(spec: RunSpec, out: str, args) -> int:
    traj = solve_skeleton(spec.params, spec.basis, spec.u0, spec.jm, spec.ctrl,
                          spec.grid, blowup_factor=spec.options["blowup_factor"])
    outputs.write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj,
                                 spec.config_hash, spec.master_seed)
    outputs.write_fields_bin(os.path.join(out, "fields.bin"), traj,
                             spec.config_hash, spec.master_seed)
    return EXIT_OK


def cmd_simulate(spec: RunSpec, out: str, args) -> int:
    eps = NoiseScale(spec.eps_list[0])
    log: list = []
    traj = solve_spde(spec.params, spec.basis, spec.u0, spec.jm, eps, spec.grid,
                      seed=spec.master_seed,
                      blowup_factor=spec.options["blowup_factor"], event_log=log)
    outputs.write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj,
                                 spec.config_hash, spec.master_seed)
    outputs.write_fields_bin(os.path.join(out, "fields.bin"), traj,
                             spec.config_hash, spec.master_seed)
    outputs.write_event_log(os.path.join(out, "events.csv"), log,
                            spec.config_hash, spec.master_seed)
    return EXIT_OK


def cmd_controlled(spec: RunSpec, out: str, args) -> int:
    eps = NoiseScale(spec.eps_list[0])
    log: list = []
    traj = solve_controlled_spde(spec.params, spec.basis, spec.u0, spec.jm, eps,
                                 spec.ctrl, spec.grid, seed=spec.master_seed,
                                 blowup_factor=spec.options["blowup_factor"],
                                 event_log=log)
    outputs.write_trajectory_csv(os.path.join(out, "trajectory.csv"), traj,
                                 spec.config_hash, spec.master_seed)
    outputs.write_fields_bin(os.path.join(out, "fields.bin"), traj,
                             spec.config_hash, spec.master_seed)
    outputs.write_event_log(os.path.join(out, "events.csv"), log,
                            spec.config_hash, spec.master_seed)
    return EXIT_OK


def _target_from_spec(spec: RunSpec) -> EndpointSpec:
    if spec.target_phi is None:
        raise ConfigError("rate/tail runs need [rate] target_phi")
    ctrl = Control(T=spec.grid.T, phi=spec.target_phi)
    traj = solve_skeleton(spec.params, spec.basis, spec.u0, spec.jm, ctrl, spec.grid)
    return EndpointSpec(center=traj.endpoint, radius=spec.target_radius)


def cmd_rate(spec: RunSpec, out: str, args) -> int:
    target = _target_from_spec(spec)
    res = estimate_rate(target, spec.params, spec.basis, spec.jm, spec.u0,
                        spec.grid, _opt_config(spec))
    outputs.write_json(os.path.join(out, "rate.json"), {
        "value": res.value,
        "endpoint_gap": res.endpoint_gap,
        "iterations": res.iterations,
        "feasible": res.feasible,
        "control_phi": res.control.phi.tolist(),
        "target_radius": target.radius,
    }, spec.config_hash, spec.master_seed)
    return EXIT_OK


def _cell_to_dict(c: harness.SweepCell) -> dict:
    return asdict(c)


def cmd_sweep(spec: RunSpec, out: str, args) -> int:
    ckpt_path = os.path.join(out, "sweep.checkpoint.json")
    precomputed = {}
    if args.resume and os.path.exists(ckpt_path):
        with open(ckpt_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if doc.get("config_sha256") == spec.config_hash \
                and doc.get("master_seed") == spec.master_seed:
            for row in doc.get("cells", []):
                precomputed[row["eps"]] = harness.SweepCell(**row)

    def on_cell(cell):
        precomputed[cell.eps] = cell
        with open(ckpt_path, "w", encoding="utf-8") as fh:
            json.dump({"config_sha256": spec.config_hash,
                       "master_seed": spec.master_seed,
                       "cells": [_cell_to_dict(c) for c in precomputed.values()]},
                      fh, indent=2)
            fh.write("\n")

    mapper = _pool_mapper(args.workers)
    report = harness.convergence_sweep(
        spec.params, spec.basis, spec.jm, spec.u0, spec.ctrl, spec.grid,
        spec.eps_list, spec.options["n_samples"], spec.master_seed,
        r2_floor=spec.options["r2_floor"], _pool_map=mapper,
        precomputed=precomputed, on_cell=on_cell)
    outputs.write_sweep_csv(os.path.join(out, "sweep.csv"), report,
                            spec.config_hash, spec.master_seed)
    outputs.write_json(os.path.join(out, "sweep.json"), {
        "slope": report.slope,
        "r2": report.r2,
        "slope_flag": report.slope_flag,
        "eps": [c.eps for c in report.cells],
        "mean_sup_sq": [c.mean_sup_sq for c in report.cells],
    }, spec.config_hash, spec.master_seed)
    return EXIT_OK


def cmd_tail(spec: RunSpec, out: str, args) -> int:
    target = _target_from_spec(spec)
    rate_res = estimate_rate(target, spec.params, spec.basis, spec.jm, spec.u0,
                             spec.grid, _opt_config(spec))
    mapper = _pool_mapper(args.workers)
    report = harness.tail_probability(
        spec.params, spec.basis, spec.jm, spec.u0, spec.grid, target,
        spec.eps_list, spec.options["n_samples"], spec.master_seed,
        rate_value=rate_res.value, rate_feasible=rate_res.feasible,
        _pool_map=mapper)
    outputs.write_tail_csv(os.path.join(out, "tail.csv"), report,
                           spec.config_hash, spec.master_seed)
    outputs.write_json(os.path.join(out, "tail.json"), {
        "rate_value": report.rate_value,
        "rate_feasible": report.rate_feasible,
        "cells": [asdict(c) for c in report.cells],
    }, spec.config_hash, spec.master_seed)
    return EXIT_OK


def cmd_audit(spec: RunSpec, out: str, args) -> int:
    traj = solve_skeleton(spec.params, spec.basis, spec.u0, spec.jm, spec.ctrl,
                          spec.grid, blowup_factor=spec.options["blowup_factor"])
    p_audit = spec.options["p_audit"] or None
    report = harness.energy_audit(traj, spec.params, spec.jm, ctrl=spec.ctrl,
                                  p=p_audit, c_f=spec.options["c_f"],
                                  c_g=spec.options["c_g"],
                                  slack=spec.options["energy_slack"])
    outputs.write_json(os.path.join(out, "audit.json"),
                       outputs.audit_payload(report),
                       spec.config_hash, spec.master_seed)
    return EXIT_OK if not report.violations else EXIT_VIOLATION


def cmd_verify(spec: RunSpec, out: str, args) -> int:
    failures = run_invariant_suite(spec)
    outputs.write_json(os.path.join(out, "verify.json"), {
        "ok": not failures,
        "failures": failures,
    }, spec.config_hash, spec.master_seed)
    for f in failures:
        print(f"FAIL {f}", file=sys.stderr)
    return EXIT_OK if not failures else EXIT_VIOLATION


_COMMANDS = {
    "skeleton": cmd_skeleton,
    "simulate": cmd_simulate,
    "controlled": cmd_controlled,
    "rate": cmd_rate,
    "sweep": cmd_sweep,
    "tail": cmd_tail,
    "audit": cmd_audit,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sggl",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="run specification file")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config master seed")
        sp.add_argument("--workers", type=int,
                        default=int(os.environ.get("SGGL_WORKERS", "0")) or None,
                        help="trajectory worker pool size")
        sp.add_argument("--resume", action="store_true",
                        help="resume an interrupted sweep from its checkpoint")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK

    try:
        spec = parse_config(args.config)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if args.seed is not None:
        spec.master_seed = args.seed
    if args.workers is None:
        args.workers = spec.workers

    outputs.ensure_dir(args.out)
    try:
        rc = _COMMANDS[args.command](spec, args.out, args)
    except (BlowUpError, ValueError, RuntimeError) as exc:
        _emit_error(args.out, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    return rc


if __name__ == "__main__":
    sys.exit(main())
