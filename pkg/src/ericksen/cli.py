"""Command line interface: ``ericksen run | mesh-check | energy-report``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import output
from .energy import energy_breakdown
from .errors import (AssemblyError, ConfigurationError, ConvergenceError, FlowError,
                     IndefiniteError)
from .fem import P1Quadrature, assemble_stiffness, check_angles_2d, check_weak_acuteness
from .flow import run_flow
from .scenarios import PRESETS, from_ini, preset, to_ini

log = logging.getLogger("ericksen")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


def load_scenario(args):
    if args.config:
        try:
            with open(args.config) as fh:
                return from_ini(fh.read())
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {args.config}: {exc}") from exc
    if args.preset:
        return preset(args.preset)
    raise ConfigurationError("one of --preset or --config is required")


def cmd_run(args) -> int:
    scn = load_scenario(args)
    if args.max_steps is not None:
        scn.max_steps = args.max_steps
    if args.stride is not None:
        scn.stride = args.stride
    if args.tol is not None:
        scn.stop_tol = args.tol
    problem, s0, n0 = scn.build()
    out = args.out
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "scenario.ini"), "w") as fh:
        fh.write(to_ini(scn))
    mesh = problem.mesh
    last_frame = [-1]

    def frame(state):
        path = os.path.join(out, f"frame_{state.step:06d}.vtk")
        output.write_vtk(path, mesh, state.s, state.n, title=f"{scn.name} step {state.step}")
        last_frame[0] = state.step

    summary = {
        "scenario": scn.name,
        "nodes": mesh.num_nodes,
        "cells": mesh.num_cells,
        "acuteness": {"min_offdiag": problem.acuteness.min_offdiag,
                      "passed": problem.acuteness.passed,
                      "violations": len(problem.acuteness.violations)},
    }
    with output.EnergyLog(os.path.join(out, "energy.csv")) as elog:
        def callback(state, rec):
            elog.append(rec)
            if state.step % scn.stride == 0:
                frame(state)
            if args.verbose and state.step % scn.stride == 0:
                log.info("step %d  E=%.12g  min s=%.4g  decrement=%.3e", rec.step, rec.total,
                         rec.min_s, rec.decrement)

        try:
            result = run_flow(problem, s0, n0, callback=callback)
        except FlowError as exc:
            summary["error"] = str(exc)
            summary["steps"] = len(exc.records) - 1
            if exc.state is not None:
                output.write_state(os.path.join(out, "final_state.txt"), exc.state.s, exc.state.n)
            output.write_json(os.path.join(out, "run.json"), summary)
            raise
    state = result.state
    if last_frame[0] != state.step:
        frame(state)
    output.write_state(os.path.join(out, "final_state.txt"), state.s, state.n)
    summary.update({
        "steps": state.step,
        "converged": result.converged,
        "final_energy": state.energy.as_dict(),
        "min_s": float(np.min(state.s)),
        "potential_clamps": result.clamped,
        "bound_violations": sum(not r.bound_ok for r in result.records),
    })
    output.write_json(os.path.join(out, "run.json"), summary)
    print(f"{scn.name}: {state.step} steps, E = {state.energy.total:.12g}, "
          f"min s = {np.min(state.s):.6g}, converged = {result.converged}")
    return EXIT_OK


def cmd_mesh_check(args) -> int:
    scn = load_scenario(args)
    mesh = scn.build_mesh()
    graph = assemble_stiffness(mesh)
    report = check_weak_acuteness(graph)
    print(f"mesh: dim={mesh.dim} nodes={mesh.num_nodes} cells={mesh.num_cells}")
    print(f"min off-diagonal k_ij = {report.min_offdiag:.6e}")
    ok = report.passed
    if mesh.dim == 2:
        angles = check_angles_2d(mesh)
        print(f"max opposite-angle sum = {math.degrees(angles.max_sum):.12g} deg")
        ok = ok and angles.passed
    print("weak acuteness: " + ("PASS" if ok else f"FAIL ({len(report.violations)} violating pairs)"))
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_energy_report(args) -> int:
    if not args.preset and not args.config:
        sibling = os.path.join(os.path.dirname(os.path.abspath(args.state)), "scenario.ini")
        if not os.path.exists(sibling):
            raise ConfigurationError("no --preset/--config given and no scenario.ini next to the state file")
        args.config = sibling
    scn = load_scenario(args)
    s, n = output.read_state(args.state)
    mesh = scn.build_mesh()
    if len(s) != mesh.num_nodes or n.shape[1] != mesh.dim:
        raise ConfigurationError(f"state has {len(s)} nodes in {n.shape[1]}D, "
                                 f"scenario mesh has {mesh.num_nodes} in {mesh.dim}D")
    graph = assemble_stiffness(mesh)
    eb = energy_breakdown(graph, P1Quadrature(mesh), scn.build_potential(), scn.kappa, s, n)
    for key, value in eb.as_dict().items():
        print(f"{key:>18s} = {value:.17g}")
    print(f"{'identity_residual':>18s} = {eb.identity_residual:.3e}")
    print(f"{'relative_residual':>18s} = {abs(eb.identity_residual) / (1 + abs(eb.e1)):.3e}")
    print(f"{'min_s':>18s} = {np.min(s):.17g}")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ericksen", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--preset", choices=sorted(PRESETS))
        g.add_argument("--config", help="INI scenario file")

    r = sub.add_parser("run", help="run a quasi-gradient flow")
    scenario_args(r)
    r.add_argument("--out", required=True, help="output directory")
    r.add_argument("--max-steps", type=int)
    r.add_argument("--stride", type=int, help="write a VTK frame every STRIDE steps")
    r.add_argument("--tol", type=float, help="stopping threshold on the per-step decrement")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("mesh-check", help="verify weak acuteness of a scenario mesh")
    scenario_args(m)
    m.set_defaults(func=cmd_mesh_check)

    e = sub.add_parser("energy-report", help="recompute energies of a saved state")
    e.add_argument("state")
    scenario_args(e)
    e.set_defaults(func=cmd_energy_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlowError, ConvergenceError, IndefiniteError, AssemblyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
