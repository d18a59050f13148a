import numpy as np
import pytest

from fblin.errors import DimensionError
from fblin.evaluation import analytic_solution
from fblin.lm import LmSettings
from fblin.training import (
    BoxDomain,
    ContinuationSchedule,
    ScheduleStage,
    bootstrap_params,
    default_benchmark_schedule,
    make_grid,
    midpoint_grid,
    orbit_collocation,
    train,
    train_best_of,
    whole_domain_schedule,
    write_stage_csv,
)

FAST = LmSettings(max_function_evals=400, max_iterations=400)


def small_schedule(x_lows=(-0.15, -0.2), points=6, settings=FAST):
    return ContinuationSchedule(
        stages=tuple(ScheduleStage(BoxDomain.square(x), points, settings) for x in x_lows)
    )


def test_default_schedule_stage_sequence():
    sched = default_benchmark_schedule()
    assert len(sched.stages) == 15
    lows = [s.box.lower[0] for s in sched.stages]
    assert lows[0] == pytest.approx(-0.2)
    assert lows[5] == pytest.approx(-0.45)
    assert lows[6] == pytest.approx(-0.46)
    assert lows[9] == pytest.approx(-0.49)
    assert lows[10] == pytest.approx(-0.491)
    assert lows[-1] == pytest.approx(-0.495)
    assert all(s.points_per_axis == 20 for s in sched.stages)
    assert sched.warm_restart


def test_schedule_requires_nested_boxes():
    with pytest.raises(DimensionError):
        small_schedule(x_lows=(-0.3, -0.2))


def test_box_must_contain_origin():
    with pytest.raises(DimensionError):
        BoxDomain(lower=np.array([-1.0, -1.0]), upper=np.array([-0.5, -0.5]))


def test_equispaced_grid_values():
    grid = make_grid(BoxDomain.square(-0.2), 3)
    axis = np.unique(grid[:, 0])
    assert axis == pytest.approx([-0.2, -0.1, 0.0])
    assert grid.shape == (9, 2)


def test_grid_size_20():
    assert make_grid(BoxDomain.square(-0.495), 20).shape == (400, 2)


def test_chebyshev_single_axis_values():
    # k-point variant of the first-kind roots; for the first root of k = 1
    # the formula gives the interval midpoint
    box = BoxDomain(lower=np.array([-0.4]), upper=np.array([0.0]))
    grid = make_grid(box, 2, "chebyshev")
    i = np.arange(1, 3)
    expected = np.sort(-0.2 - 0.2 * np.cos((2 * i - 1) * np.pi / 4))
    assert grid[:, 0] == pytest.approx(expected)


def test_chebyshev_midpoint_is_first_root():
    a, b = -0.495, 0.0
    k = 1
    x = 0.5 * (a + b) - 0.5 * (a - b) * np.cos(np.pi / (2 * k))
    assert x == pytest.approx(0.5 * (a + b))


def test_chebyshev_points_strictly_inside():
    grid = make_grid(BoxDomain.square(-0.495), 50, "chebyshev")
    assert np.all(grid > -0.495) and np.all(grid < 0.0)


def test_degenerate_box_rejected():
    box = BoxDomain(lower=np.zeros(2), upper=np.zeros(2))
    with pytest.raises(DimensionError):
        make_grid(box, 5)


def test_midpoint_grid_interleaves():
    box = BoxDomain.square(-0.2)
    mids = midpoint_grid(box, 3)
    assert mids.shape == (4, 2)
    assert np.unique(mids[:, 0]) == pytest.approx([-0.15, -0.05])


def test_bootstrap_matches_linearization(bench, design, pinning):
    grid = make_grid(BoxDomain.square(-0.2), 10)
    p = bootstrap_params(2, 5, 5, 0, "sigmoid", pinning.jac0, grid)
    from fblin import network

    linear = grid @ pinning.jac0.T
    fit = network.forward_batch(p, grid)
    assert np.max(np.abs(fit - linear)) <= 5e-3


def test_orbit_collocation_properties(bench, design, pinning):
    grid = make_grid(BoxDomain.square(-0.3), 10)
    p = bootstrap_params(2, 5, 5, 0, "sigmoid", pinning.jac0, grid)
    extra = orbit_collocation(bench, design, p, grid)
    assert extra.ndim == 2 and extra.shape[1] == 2
    # all returned points are steppable (valid domain)
    for y in extra:
        bench.step(y, 0.0)


def test_train_is_deterministic(bench, design, pinning):
    sched = small_schedule()
    init = bootstrap_params(2, 3, 3, 7, "sigmoid", pinning.jac0,
                            make_grid(sched.stages[0].box, 6))
    r1 = train(bench, design, sched, init, pinning, seed=7)
    r2 = train(bench, design, sched, init, pinning, seed=7)
    assert np.array_equal(r1.final_params.flatten(), r2.final_params.flatten())
    assert r1.stages[0].result.loss_history == r2.stages[0].result.loss_history


def test_warm_restart_handoff_loss_matches(bench, design, pinning):
    sched = small_schedule()
    init = bootstrap_params(2, 3, 3, 1, "sigmoid", pinning.jac0,
                            make_grid(sched.stages[0].box, 6))
    report = train(bench, design, sched, init, pinning, seed=1)
    # recompute: stage-1 initial loss must equal stage-0 final params' loss
    # on the stage-1 collocation set
    from fblin.residuals import residual_functions
    from fblin import network

    stage0_final = report.final_params.with_flat(report.stages[0].result.final_params)
    grid1 = make_grid(sched.stages[1].box, 6)
    orbit1 = orbit_collocation(bench, design, stage0_final, grid1)
    pts = np.vstack([grid1, orbit1]) if orbit1.size else grid1
    res_fn, _ = residual_functions(bench, design, stage0_final, pts, pinning)
    r = res_fn(report.stages[0].result.final_params)
    assert float(r @ r) == pytest.approx(report.stages[1].initial_loss, rel=1e-12)


def test_stage_report_structure(bench, design, pinning):
    sched = small_schedule()
    init = bootstrap_params(2, 3, 3, 2, "sigmoid", pinning.jac0,
                            make_grid(sched.stages[0].box, 6))
    report = train(bench, design, sched, init, pinning, seed=2,
                   reference=analytic_solution)
    assert len(report.stages) == len(sched.stages)
    for st in report.stages:
        assert st.result.final_loss >= 0.0
        assert set(st.error_norms) == {"l1", "l2", "linf"}
        assert np.all(st.error_norms["linf"] <= st.error_norms["l2"] + 1e-15)


def test_single_stage_schedule_is_whole_domain_arm():
    sched = whole_domain_schedule(-0.3, 5, FAST)
    assert len(sched.stages) == 1
    assert sched.stages[0].box.lower[0] == pytest.approx(-0.3)


def test_fresh_restart_when_warm_restart_disabled(bench, design, pinning):
    sched = ContinuationSchedule(
        stages=tuple(ScheduleStage(BoxDomain.square(x), 5, FAST) for x in (-0.1, -0.15)),
        warm_restart=False,
    )
    init = bootstrap_params(2, 3, 3, 3, "sigmoid", pinning.jac0,
                            make_grid(sched.stages[0].box, 5))
    report = train(bench, design, sched, init, pinning, seed=3)
    # the second stage does not continue from the first stage's end point
    assert report.stages[1].initial_loss != pytest.approx(
        report.stages[0].result.final_loss
    )


def test_train_best_of_is_deterministic_and_selects_min(bench, design, pinning):
    sched = small_schedule(x_lows=(-0.15,), points=5)
    best1, losses1 = train_best_of(bench, design, sched, pinning, n=2, N1=3, N2=3,
                                   restarts=3, seed=11)
    best2, losses2 = train_best_of(bench, design, sched, pinning, n=2, N1=3, N2=3,
                                   restarts=3, seed=11)
    assert losses1 == losses2
    assert np.array_equal(best1.final_params.flatten(), best2.final_params.flatten())
    valid_losses = [l for s, l in losses1]
    assert best1.final_loss == min(valid_losses)


def test_stage_csv_export(tmp_path, bench, design, pinning):
    sched = small_schedule()
    init = bootstrap_params(2, 3, 3, 4, "sigmoid", pinning.jac0,
                            make_grid(sched.stages[0].box, 6))
    report = train(bench, design, sched, init, pinning, seed=4,
                   reference=analytic_solution)
    path = tmp_path / "stages.csv"
    write_stage_csv(report, path)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == 1 + len(sched.stages)
    header = rows[0].split(",")
    assert "final_loss" in header and "linf_T1" in header
