"""Command-line surface.

    sabrashell simulate <config.json>   forward run -> trajectory CSV + report
    sabrashell optimize <config.json>   adjoint gradient descent -> control CSV + report
    sabrashell feedback <config.json>   closed-loop constrained run -> CSV + report
    sabrashell spectrum <config.json>   time-averaged per-shell energy table
    sabrashell check    <config.json>   invariant suite, one line per property

Exit status: 0 success, 1 validation error, 2 numerical failure (blow-up),
3 failed check.  ``SABRASHELL_OUTDIR`` overrides the configured output
directory (the only environment variable the tool reads).
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from ._kernels import backend_name
from .adjoint import evaluate_cost
from .checks import run_checks
from .config import ConfigError, RunConfig, cost_spec_from_config, parse_config_file
from .constraints import simulate_closed_loop
from .integrate import BlowUpError, Trajectory, diagnostics, simulate
from .model import wavenumbers
from .optimal import optimize
from .storage import OutputBundle, write_report_json, write_trajectory_csv

__all__ = ["main", "run"]


def _out_paths(cfg: RunConfig):
    directory = os.environ.get("SABRASHELL_OUTDIR", cfg.output_directory)
    base = os.path.join(directory, cfg.output_prefix)
    return base + "-trajectory.csv", base + "-control.csv", base + "-report.json"


def _report_skeleton(cfg: RunConfig, task: str) -> dict:
    return {
        "task": task,
        "config": cfg.to_dict(),
        "applied_defaults": list(cfg.applied_defaults),
        "backend": backend_name(),
        "version": __version__,
    }


def _print_defaults(cfg: RunConfig):
    if cfg.applied_defaults:
        print("defaults applied: " + ", ".join(cfg.applied_defaults), file=sys.stderr)


def _control_trajectory(cfg: RunConfig, control: np.ndarray) -> Trajectory:
    # store the piecewise-constant control on the same grid; final row repeats
    # the last interval value so the CSV shape matches a trajectory
    m = cfg.grid.n_steps
    rows = np.vstack([control, control[m - 1][None, :]])
    return Trajectory(grid=cfg.grid, states=rows)


def _do_simulate(cfg: RunConfig) -> tuple[int, OutputBundle]:
    traj = simulate(cfg.model, cfg.initial_state(), cfg.forcing, None, cfg.grid, cfg.scheme)
    diag = diagnostics(cfg.model, traj)
    traj_path, _, report_path = _out_paths(cfg)
    write_trajectory_csv(traj_path, traj)
    report = _report_skeleton(cfg, "simulate")
    report["diagnostics"] = diag.as_dict()
    write_report_json(report_path, report)
    print(f"wrote {traj_path} and {report_path}")
    return 0, OutputBundle(traj_path, report_path, report["config"])


def _do_spectrum(cfg: RunConfig) -> tuple[int, OutputBundle]:
    traj = simulate(cfg.model, cfg.initial_state(), cfg.forcing, None, cfg.grid, cfg.scheme)
    diag = diagnostics(cfg.model, traj)
    k = wavenumbers(cfg.model)
    print(f"{'shell':>5} {'k':>12} {'mean |u_n|^2':>14}")
    for n in range(cfg.model.n_shells):
        print(f"{n + 1:>5} {k[n]:>12.6g} {diag.spectrum[n]:>14.6e}")
    _, _, report_path = _out_paths(cfg)
    report = _report_skeleton(cfg, "spectrum")
    report["spectrum"] = {"k": k.tolist(), "mean_energy": diag.spectrum.tolist()}
    write_report_json(report_path, report)
    print(f"wrote {report_path}")
    return 0, OutputBundle(None, report_path, report["config"])


def _do_optimize(cfg: RunConfig) -> tuple[int, OutputBundle]:
    spec = cost_spec_from_config(cfg)
    u0 = cfg.initial_state()
    g, traj, rep = optimize(cfg.model, spec, u0, cfg.forcing, cfg.grid, cfg.task.optimizer)
    traj_path, control_path, report_path = _out_paths(cfg)
    write_trajectory_csv(traj_path, traj)
    write_trajectory_csv(control_path, _control_trajectory(cfg, g))
    report = _report_skeleton(cfg, "optimize")
    report["optimization"] = rep.as_dict()
    report["final_cost"] = evaluate_cost(cfg.model, spec, traj, g)
    report["diagnostics"] = diagnostics(cfg.model, traj).as_dict()
    write_report_json(report_path, report)
    print(
        f"optimize: {rep.n_iterations} iterations, cost {rep.costs[0]:.6e} -> "
        f"{rep.costs[-1]:.6e}, residual {rep.residual:.3e} ({rep.stop_reason})"
    )
    print(f"wrote {traj_path}, {control_path} and {report_path}")
    return 0, OutputBundle(traj_path, report_path, report["config"])


def _do_feedback(cfg: RunConfig) -> tuple[int, OutputBundle]:
    task = cfg.task
    traj, control, rep = simulate_closed_loop(
        cfg.model, cfg.initial_state(), cfg.forcing, task.law, task.constraint,
        cfg.grid, cfg.scheme, mask=task.mask, penalty=task.penalty, band=task.band,
    )
    traj_path, control_path, report_path = _out_paths(cfg)
    write_trajectory_csv(traj_path, traj)
    write_trajectory_csv(control_path, _control_trajectory(cfg, control))
    report = _report_skeleton(cfg, "feedback")
    report["invariance"] = rep.as_dict()
    report["diagnostics"] = diagnostics(cfg.model, traj).as_dict()
    write_report_json(report_path, report)
    print(
        f"feedback({task.law}): max excess {rep.max_excess:.3e}, "
        f"inside fraction {rep.fraction_inside:.4f}"
    )
    print(f"wrote {traj_path}, {control_path} and {report_path}")
    return 0, OutputBundle(traj_path, report_path, report["config"])


def _do_check(cfg: RunConfig) -> tuple[int, OutputBundle]:
    results = run_checks(cfg.task.fast)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    _, _, report_path = _out_paths(cfg)
    report = _report_skeleton(cfg, "check")
    report["check"] = {
        "results": [r.as_dict() for r in results],
        "all_passed": all(r.passed for r in results),
    }
    write_report_json(report_path, report)
    print(f"wrote {report_path}")
    status = 0 if report["check"]["all_passed"] else 3
    return status, OutputBundle(None, report_path, report["config"])


_TASKS = {
    "simulate": _do_simulate,
    "optimize": _do_optimize,
    "feedback": _do_feedback,
    "spectrum": _do_spectrum,
    "check": _do_check,
}


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sabrashell",
        description="Shell-model turbulence simulation and control toolkit",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _TASKS:
        sp = sub.add_parser(name, help=f"run the {name} task from a JSON config")
        sp.add_argument("config", help="path to the JSON configuration file")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config_file(args.config)
    except ConfigError as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 1

    if cfg.task.kind != args.command:
        print(
            f"error: validation: config task is {cfg.task.kind!r} but the "
            f"{args.command!r} subcommand was invoked",
            file=sys.stderr,
        )
        return 1
    _print_defaults(cfg)

    try:
        status, _ = _TASKS[args.command](cfg)
        return status
    except BlowUpError as e:
        print(f"error: blow-up: {e}", file=sys.stderr)
        return 2
    except (ConfigError, ValueError) as e:
        print(f"error: validation: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io: {e}", file=sys.stderr)
        return 1


def main():  # console entry point
    sys.exit(run())
