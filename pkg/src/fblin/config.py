"""Run configuration: flat ``section.key = value`` text files with defaults.

Every default reproduces the benchmark study: the two-state plant, the
(A, c) design, a 5/5 sigmoid network, the 15-stage greedy schedule, and the
20-point training / 50-point Chebyshev test grids.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .lm import LmSettings
from .training import (
    BoxDomain,
    ContinuationSchedule,
    ScheduleStage,
    default_benchmark_schedule,
    whole_domain_schedule,
)

SCHEDULE_NAMES = ("greedy-default", "whole-domain")


@dataclass(frozen=True)
class RunConfig:
    system_kind: str = "benchmark"          # benchmark | external
    mode: str = "analytic"                  # analytic | black_box
    fd_step: float = 1e-4
    command: str = ""                       # external adapter command line
    dimension: int = 2
    A: np.ndarray = field(default_factory=lambda: np.array([[0.5, 0.3], [0.5, 0.4]]))
    c: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0]))
    hidden1: int = 5
    hidden2: int = 5
    activation: str = "sigmoid"
    schedule: str = "greedy-default"
    seed: int = 0
    restarts: int = 5
    weights: tuple = (1.0, 1.0, 1.0)
    func_tol: float = 1e-12
    max_iterations: int = 100_000
    max_function_evals: int = 12_000
    initial_damping: float = 1e-3
    train_points: int = 20
    test_points: int = 50
    x_low: float = -0.495
    baseline_order: int = 6
    sim_x0: tuple = (-0.4, -0.4)
    sim_horizon: int = 50
    output_dir: str = "out"

    def lm_settings(self):
        return LmSettings(
            func_tol=self.func_tol,
            max_iterations=self.max_iterations,
            max_function_evals=self.max_function_evals,
            initial_damping=self.initial_damping,
        )

    def build_schedule(self):
        settings = self.lm_settings()
        if self.schedule == "greedy-default":
            return default_benchmark_schedule(self.train_points, settings)
        if self.schedule == "whole-domain":
            return whole_domain_schedule(self.x_low, self.train_points, settings)
        stages = []
        for token in self.schedule.split():
            try:
                x_low, pts = token.split(":")
                stages.append(
                    ScheduleStage(BoxDomain.square(float(x_low)), int(pts), settings)
                )
            except ValueError as exc:
                raise ConfigError(
                    f"bad schedule token {token!r}; expected x_low:points"
                ) from exc
        if not stages:
            raise ConfigError("schedule is empty")
        return ContinuationSchedule(stages=tuple(stages))

    def full_box(self):
        return self.build_schedule().stages[-1].box


def _parse_matrix(value):
    rows = [r.split() for r in value.split(";") if r.strip()]
    return np.array([[float(v) for v in row] for row in rows])


def _parse_vector(value):
    return np.array([float(v) for v in value.split()])


_PARSERS = {
    "system.kind": ("system_kind", str),
    "system.mode": ("mode", str),
    "system.fd_step": ("fd_step", float),
    "system.command": ("command", str),
    "system.dimension": ("dimension", int),
    "design.A": ("A", _parse_matrix),
    "design.c": ("c", _parse_vector),
    "network.hidden1": ("hidden1", int),
    "network.hidden2": ("hidden2", int),
    "network.activation": ("activation", str),
    "train.schedule": ("schedule", str),
    "train.seed": ("seed", int),
    "train.restarts": ("restarts", int),
    "train.weights": ("weights", lambda v: tuple(float(t) for t in v.split())),
    "optimizer.func_tol": ("func_tol", float),
    "optimizer.max_iterations": ("max_iterations", int),
    "optimizer.max_function_evals": ("max_function_evals", int),
    "optimizer.initial_damping": ("initial_damping", float),
    "evaluate.train_points": ("train_points", int),
    "evaluate.test_points": ("test_points", int),
    "evaluate.x_low": ("x_low", float),
    "baseline.order": ("baseline_order", int),
    "simulate.x0": ("sim_x0", lambda v: tuple(float(t) for t in v.split())),
    "simulate.horizon": ("sim_horizon", int),
    "output.dir": ("output_dir", str),
}


def parse_config(text, base=None):
    """Parse config text into a RunConfig, starting from ``base`` or defaults."""
    config = base or RunConfig()
    updates = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        attr, parser = _PARSERS[key]
        try:
            updates[attr] = parser(value)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    config = replace(config, **updates)
    _validate(config)
    return config


def load_config(path, base=None):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, base=base)


def _validate(config):
    n = config.A.shape[0] if config.A.ndim == 2 else 0
    if config.A.ndim != 2 or config.A.shape != (n, n):
        raise ConfigError(f"design.A must be square, got shape {config.A.shape}")
    if config.c.shape != (n,):
        raise ConfigError(f"design.c must have length {n}")
    if config.system_kind not in ("benchmark", "external"):
        raise ConfigError("system.kind must be benchmark or external")
    if config.mode not in ("analytic", "black_box"):
        raise ConfigError("system.mode must be analytic or black_box")
    if config.system_kind == "external" and not config.command:
        raise ConfigError("system.command is required for an external system")
    if config.restarts < 1:
        raise ConfigError("train.restarts must be >= 1")
    if len(config.weights) != 3 or any(w < 0 for w in config.weights):
        raise ConfigError("train.weights must be three non-negative numbers")
