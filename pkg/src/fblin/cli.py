"""Command-line interface: check, train, baseline, evaluate, simulate, grid-export.

Exit codes: 0 success, 1 usage or configuration error, 2 design-assumption
failure, 3 numeric failure.  All outputs are plain text and deterministic
under a fixed seed.
"""

import argparse
import sys
from contextlib import contextmanager, nullcontext
from pathlib import Path

import numpy as np

from . import evaluation, network, series, training
from .config import RunConfig, load_config
from .errors import (
    ArchitectureMismatchError,
    ConfigError,
    DimensionError,
    DomainError,
    FblinError,
)
from .linalg import DesignSpec, check_assumptions
from .residuals import solve_pinning
from .system import benchmark_system, equilibrium_data, open_process_system
from .training import make_grid


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser():
    parser = _Parser(prog="fblin", description=__doc__)
    parser.add_argument("--config", help="run configuration file")
    parser.add_argument("--seed", type=int, help="override train.seed")
    parser.add_argument("--restarts", type=int, help="override train.restarts")
    parser.add_argument("--mode", choices=["analytic", "black-box"],
                        help="override system.mode")
    parser.add_argument("--override-assumptions", action="store_true",
                        help="run even when the design checks fail")
    parser.add_argument("--output", help="override output.dir")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("check", help="run the design feasibility checks")
    sub.add_parser("train", help="train the transformation network")
    sub.add_parser("baseline", help="fit and evaluate the power-series baseline")

    p_eval = sub.add_parser("evaluate", help="evaluate a parameter snapshot")
    p_eval.add_argument("params_file", nargs="?", help="network snapshot path")
    p_eval.add_argument("--exact", action="store_true",
                        help="evaluate the built-in exact transformation instead")

    p_sim = sub.add_parser("simulate", help="closed-loop simulation")
    p_sim.add_argument("params_file", nargs="?", help="network snapshot path")
    p_sim.add_argument("--exact", action="store_true",
                       help="use the built-in exact transformation")
    p_sim.add_argument("--x0", help="initial state, e.g. '-0.4 -0.4'")
    p_sim.add_argument("--horizon", type=int, help="number of steps")

    p_grid = sub.add_parser("grid-export", help="write a collocation grid as CSV")
    p_grid.add_argument("--kind", choices=["equispaced", "chebyshev"],
                        default="chebyshev")
    p_grid.add_argument("--points", type=int, default=None)
    return parser


def _apply_overrides(config, args):
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.restarts is not None:
        updates["restarts"] = args.restarts
    if args.mode is not None:
        updates["mode"] = args.mode.replace("-", "_")
    if args.output is not None:
        updates["output_dir"] = args.output
    if updates:
        from dataclasses import replace

        config = replace(config, **updates)
    return config


@contextmanager
def _open_system(config):
    if config.system_kind == "benchmark":
        with nullcontext(benchmark_system(config.mode, config.fd_step)) as sys_model:
            yield sys_model
    else:
        with open_process_system(config.command, config.dimension, config.fd_step) as sm:
            yield sm


def _design(config):
    return DesignSpec(A=config.A, c=config.c)


def _outdir(config):
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _reference(config):
    return evaluation.analytic_solution if config.system_kind == "benchmark" else None


def _check(config, sys_model, override):
    report = check_assumptions(sys_model, _design(config))
    for line in report.lines():
        print(line)
    if not report.all_ok and not override:
        return report, 2
    return report, 0


def cmd_check(config, args):
    with _open_system(config) as sys_model:
        _, status = _check(config, sys_model, override=False)
    return status


def cmd_train(config, args):
    out = _outdir(config)
    spec = _design(config)
    with _open_system(config) as sys_model:
        _, status = _check(config, sys_model, args.override_assumptions)
        if status:
            return status
        target = solve_pinning(equilibrium_data(sys_model), spec)
        schedule = config.build_schedule()
        reference = _reference(config)
        best, losses = training.train_best_of(
            sys_model, spec, schedule, target,
            n=sys_model.n, N1=config.hidden1, N2=config.hidden2,
            activation=config.activation, restarts=config.restarts,
            seed=config.seed, weights=config.weights, reference=reference,
        )
        best.final_params.save(out / "params.txt")
        training.write_stage_csv(best, out / "stages.csv")
        lines = [
            f"schedule = {config.schedule}",
            f"stages = {len(schedule.stages)}",
            f"restarts = {config.restarts}",
            f"base_seed = {config.seed}",
            f"best_seed = {best.seed}",
            f"final_loss = {format(best.final_loss, '.17g')}",
        ]
        for s, loss in losses:
            lines.append(f"restart_loss[{s}] = {format(loss, '.17g')}")
        final = best.stages[-1]
        if final.error_norms is not None:
            for j in range(sys_model.n):
                for norm in ("l1", "l2", "linf"):
                    lines.append(
                        f"train_{norm}_T{j + 1} = "
                        + format(float(final.error_norms[norm][j]), ".17g")
                    )
        (out / "summary.txt").write_text("\n".join(lines) + "\n")
        print("\n".join(lines))
    return 0


def _evaluate_and_write(transform, config, out, prefix):
    box = config.full_box()
    results = []
    for kind, pts in (("equispaced", config.train_points),
                      ("chebyshev", config.test_points)):
        grid = make_grid(box, pts, kind)
        report = evaluation.evaluate(transform, grid, grid_kind=kind)
        report.save_error_csv(out / f"{prefix}errors_{kind}.csv")
        report.save_norms_csv(out / f"{prefix}norms_{kind}.csv")
        print(f"{kind} grid ({pts} points per axis):")
        print(report.norm_table())
        results.append(report)
    return results


def _load_transform(config, args):
    if args.exact:
        if config.system_kind != "benchmark":
            raise ConfigError("--exact is only available for the benchmark system")
        return evaluation.analytic_solution
    if not args.params_file:
        raise ConfigError("a parameter snapshot path (or --exact) is required")
    params = network.NetworkParams.load(
        args.params_file, expect=(config.dimension, config.hidden1, config.hidden2)
    )
    return lambda x: network.forward(params, x)


def cmd_baseline(config, args):
    out = _outdir(config)
    spec = _design(config)
    with _open_system(config) as sys_model:
        _, status = _check(config, sys_model, args.override_assumptions)
        if status:
            return status
        target = solve_pinning(equilibrium_data(sys_model), spec)
        grid = make_grid(config.full_box(), config.train_points, "equispaced")
        coeffs, result = series.fit_series(
            sys_model, spec, grid, target, config.baseline_order, config.lm_settings()
        )
        coeffs.save_csv(out / "coefficients.csv")
        print(f"series fit: order {config.baseline_order}, "
              f"loss {result.final_loss:.3e}, {result.iterations_used} iterations")
        if _reference(config) is not None:
            _evaluate_and_write(coeffs.as_transform(), config, out, "baseline_")
    return 0


def cmd_evaluate(config, args):
    out = _outdir(config)
    transform = _load_transform(config, args)
    if _reference(config) is None:
        raise ConfigError("evaluation needs the benchmark reference solution")
    _evaluate_and_write(transform, config, out, "")
    return 0


def cmd_simulate(config, args):
    out = _outdir(config)
    spec = _design(config)
    transform = _load_transform(config, args)
    x0 = np.array([float(t) for t in args.x0.split()]) if args.x0 else np.asarray(
        config.sim_x0, dtype=float
    )
    horizon = args.horizon if args.horizon is not None else config.sim_horizon
    with _open_system(config) as sys_model:
        trace = evaluation.simulate_closed_loop(sys_model, spec, transform, x0, horizon)
    trace.save_csv(out / "trace.csv")
    final_norm = float(np.max(np.abs(trace.states[-1])))
    residual = trace.linearity_residual(spec.A)
    print(f"steps_recorded = {trace.states.shape[0]}")
    print(f"completed = {trace.completed}")
    if trace.exit_reason:
        print(f"exit_reason = {trace.exit_reason}")
    print(f"final_state_inf_norm = {format(final_norm, '.17g')}")
    print(f"max_linearity_residual = {format(residual, '.17g')}")
    return 0


def cmd_grid_export(config, args):
    out = _outdir(config)
    pts = args.points or (
        config.test_points if args.kind == "chebyshev" else config.train_points
    )
    grid = make_grid(config.full_box(), pts, args.kind)
    path = out / f"grid_{args.kind}_{pts}.csv"
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i + 1}" for i in range(grid.shape[1])) + "\n")
        for row in grid:
            fh.write(",".join(format(v, ".17g") for v in row) + "\n")
    print(f"wrote {grid.shape[0]} points to {path}")
    return 0


_COMMANDS = {
    "check": cmd_check,
    "train": cmd_train,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "grid-export": cmd_grid_export,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        config = load_config(args.config) if args.config else RunConfig()
        config = _apply_overrides(config, args)
        return _COMMANDS[args.command](config, args)
    except (ConfigError, ArchitectureMismatchError, DimensionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (FblinError, DomainError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
