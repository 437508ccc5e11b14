"""Command-line harness.

Subcommands ``optimize``, ``sweep``, ``robust``, ``gradcheck`` and
``trajectory`` read a JSON configuration (``--config``) and write their
results under ``--out``.  Exit status: 0 converged / check passed,
1 ran but did not converge (or the gradient check failed), 2 configuration
error, 3 numerical failure.
"""

import argparse
import logging
import shutil
import sys
import time
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig
from .objectives import Objective, finite_difference_gradient, objective_gradient
from .optimize import optimize
from .problem import TimeGrid
from .records import (
    SWEEP_HEADER,
    RunRecord,
    read_pulse,
    write_csv,
    write_meta,
    write_pulse,
    write_trace,
    write_trajectory,
)
from .scenarios import bloch_trajectories, robustness_report, run_sweep, train_pulses

EXIT_OK, EXIT_NOT_CONVERGED, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3

logger = logging.getLogger("qhtcontrol")


def _run_optimizer(cfg, problem, objective):
    o = cfg.optimizer
    return optimize(problem, objective, method=o["method"], restarts=o["restarts"],
                    seed=o["seed"], grape_options=cfg.grape_options,
                    anneal_options=cfg.anneal_options, init_scale=o["init_scale"])


def cmd_optimize(cfg, out, jobs):
    problem = cfg.problem()
    res = _run_optimizer(cfg, problem, Objective.for_problem(problem))
    write_pulse(out / "pulse.csv", res.controls, problem.grid.dt)
    write_trace(out / "trace.csv", res.trace)
    times, r0, r1 = bloch_trajectories(problem, res.controls)
    outputs = {"pe_helstrom": res.pe_helstrom, "pe_fixed": res.pe_fixed,
               "final_bloch": {"h0": r0[-1].tolist(), "h1": r1[-1].tolist()},
               "files": ["pulse.csv", "trace.csv"]}
    RunRecord("optimize", cfg.data, res, outputs).save(out / "record.json")
    print(f"P_e^H = {res.pe_helstrom:.6g}  P_e = {res.pe_fixed:.6g}  "
          f"iterations = {res.n_iter}  converged = {res.converged}")
    return (EXIT_OK if res.converged else EXIT_NOT_CONVERGED), res.wall_seconds


def cmd_sweep(cfg, out, jobs):
    spec = cfg.sweep_spec()
    rows = run_sweep(spec, jobs=jobs)
    table, converged = [], True
    for i, row in enumerate(rows):
        name = f"controls/point_{i:03d}.csv"
        dt = spec.problem(row.value).grid.dt
        write_pulse(out / name, row.controls, dt)
        table.append((row.value, row.pe_helstrom, row.pe_fixed, name))
        if row.result is not None:
            converged &= row.result.converged
    write_csv(out / "sweep.csv", SWEEP_HEADER, table)
    write_csv(out / "sweep_uncontrolled.csv", ("value", "pe_helstrom"),
              [(r.value, r.pe_uncontrolled) for r in rows])
    outputs = {"parameter": spec.parameter, "values": list(spec.values),
               "pe_helstrom": [r.pe_helstrom for r in rows],
               "pe_fixed": [r.pe_fixed for r in rows],
               "pe_uncontrolled": [r.pe_uncontrolled for r in rows],
               "converged": [None if r.result is None else r.result.converged for r in rows]}
    RunRecord("sweep", cfg.data, None, outputs).save(out / "record.json")
    for line in table:
        print(f"{line[0]:g}: P_e^H = {line[1]:.6g}  P_e = {line[2]:.6g}")
    return EXIT_OK if converged else EXIT_NOT_CONVERGED, None


def cmd_robust(cfg, out, jobs):
    problem = cfg.problem()
    r, o = cfg.robust, cfg.optimizer
    optimal, robust = train_pulses(problem, r["training_window"], r["n_train"],
                                   method=o["method"], restarts=o["restarts"], seed=o["seed"],
                                   grape_options=cfg.grape_options,
                                   anneal_options=cfg.anneal_options)
    report = robustness_report(problem, {"optimal": optimal.controls,
                                         "robust": robust.controls},
                               r["evaluation_window"], r["samples"], r["training_window"])
    write_csv(out / "robust.csv", ("detuning", "pe_none", "pe_optimal", "pe_robust"),
              zip(report.detunings, *(report.errors[s] for s in ("none", "optimal", "robust"))))
    write_csv(out / "robust_summary.csv", ("scheme", "mean_pe_helstrom"),
              [(s, report.averages[s]) for s in ("none", "optimal", "robust")])
    write_pulse(out / "pulse_optimal.csv", optimal.controls, problem.grid.dt)
    write_pulse(out / "pulse_robust.csv", robust.controls, problem.grid.dt)
    outputs = {"window": list(report.window), "averages": report.averages,
               "reduction": report.reduction(), "optimal_converged": optimal.converged}
    RunRecord("robust", cfg.data, robust, outputs).save(out / "record.json")
    for s in ("none", "optimal", "robust"):
        print(f"<P_e^H> {s:8s} {report.averages[s]:.6g}")
    print(f"reduction robust vs optimal: {report.reduction():.1%}")
    ok = optimal.converged and robust.converged
    return EXIT_OK if ok else EXIT_NOT_CONVERGED, optimal.wall_seconds + robust.wall_seconds


def _relative_error(g, ref):
    scale = np.abs(ref).max()
    err = np.abs(g - ref).max()
    return float(err / scale) if scale > 0 else float(err)


def cmd_gradcheck(cfg, out, jobs):
    g = cfg.gradcheck
    problem = cfg.problem()
    objective = Objective.for_problem(problem)
    rng = np.random.default_rng(cfg.optimizer["seed"])
    u = rng.uniform(-g["amplitude"], g["amplitude"], problem.control_shape)
    # same piecewise-constant field on a grid with half the slice width
    fine = problem.with_grid(TimeGrid(problem.grid.T, 2 * problem.n_slices))
    u_fine = np.repeat(u, 2, axis=1)
    rows = []
    for label, p, v in (("dt", problem, u), ("dt/2", fine, u_fine)):
        fd = finite_difference_gradient(p, v, objective, g["step"])
        for mode in ("exact", "truncated"):
            ga = objective_gradient(p, v, objective, mode)
            rows.append((mode, label, p.grid.dt, _relative_error(ga, fd),
                         float(np.abs(ga).max())))
    ratio = rows[1][3] / rows[3][3] if rows[3][3] > 0 else float("inf")
    write_csv(out / "gradcheck.csv",
              ("mode", "grid", "dt", "max_relative_error", "max_abs_gradient"), rows)
    exact_err = max(rows[0][3], rows[2][3])
    RunRecord("gradcheck", cfg.data, None,
              {"exact_max_relative_error": exact_err, "truncated_max_relative_error": rows[1][3],
               "truncated_halving_ratio": ratio}).save(out / "record.json")
    for mode, label, dt, err, gmax in rows:
        print(f"{mode:9s} dt={dt:.6g}  max relative error {err:.3e}  (max |grad| {gmax:.3e})")
    print(f"truncated error ratio dt -> dt/2: {ratio:.3f}")
    return EXIT_OK if exact_err <= g["threshold"] else EXIT_NOT_CONVERGED, None


def cmd_trajectory(cfg, out, jobs):
    problem = cfg.problem()
    path = cfg.data.get("trajectory", {}).get("controls_file")
    if path is None:
        u = problem.zero_controls()
    else:
        try:
            u, _ = read_pulse(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"trajectory.controls_file: {exc}") from None
        if u.shape != problem.control_shape:
            raise ConfigError(f"trajectory.controls_file: pulse has shape {u.shape}, "
                              f"problem needs {problem.control_shape}")
    times, r0, r1 = bloch_trajectories(problem, u)
    write_trajectory(out / "trajectory_h0.csv", times, r0)
    write_trajectory(out / "trajectory_h1.csv", times, r1)
    print(f"final Bloch vectors: h0 {np.round(r0[-1], 6)}  h1 {np.round(r1[-1], 6)}")
    return EXIT_OK, None


COMMANDS = {
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "robust": cmd_robust,
    "gradcheck": cmd_gradcheck,
    "trajectory": cmd_trajectory,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="qhtcontrol", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (default: config 'output' or ./out)")
        p.add_argument("--seed", type=int, help="override optimizer.seed")
        p.add_argument("--restarts", type=int, help="override optimizer.restarts")
        p.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    started = time.time()
    t0 = time.perf_counter()
    try:
        if args.jobs < 1:
            raise ConfigError("--jobs: must be >= 1")
        cfg = RunConfig.load(args.config).with_overrides(args.seed, args.restarts)
        out = Path(args.out if args.out is not None else cfg.output)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"output: cannot create {out} ({exc.strerror})") from None
        shutil.copyfile(args.config, out / "config.json")
        status, optimizer_seconds = COMMANDS[args.command](cfg, out, args.jobs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    write_meta(out, started, time.perf_counter() - t0, command=args.command,
               optimizer_seconds=optimizer_seconds, exit_status=status)
    return status


if __name__ == "__main__":
    sys.exit(main())
