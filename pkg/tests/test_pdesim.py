import math

import numpy as np
import pytest

from kppspeed.errors import FrontBoundaryError, PreconditionError
from kppspeed.grid import CoefField, PeriodicGrid
from kppspeed.pdesim import INVARIANT_SLACK, SimConfig, comparison_check, front_position, run_front, simulate, write_track_csv
from kppspeed.stepfn import StepProfile, cstar_step

C_HALF = 2.0188104275409645185  # mpmath oracle for the half-duty step of height 2


@pytest.fixture(scope="module")
def step_run():
    return run_front(SimConfig(StepProfile(0.5, 2.0, 0.0, 1.0).to_coef(256)))


def test_front_position():
    x = np.linspace(0, 10, 11)
    u = np.clip(1 - x / 10, 0, 1)
    assert front_position(x, u, 0.5) == pytest.approx(5.0)
    assert math.isnan(front_position(x, np.zeros(11), 0.5))


def test_constant_speed():
    res = run_front(SimConfig(CoefField.constant(PeriodicGrid(1.0, 64), 1.0)))
    assert abs(res.speed_estimate - 2.0) / 2.0 <= 0.03


def test_step_speed(step_run, tmp_path):
    assert abs(step_run.speed_estimate - C_HALF) / C_HALF <= 0.03
    write_track_csv(tmp_path / "f.csv", step_run.track)
    assert (tmp_path / "f.csv").read_text().startswith("t,x_half,u_max\n")


def test_speed_at_least_homogeneous_bound(step_run):
    assert step_run.speed_estimate >= 2 * math.sqrt(1.0) - 0.03 * 2


def test_zero_coefficient_does_not_invade():
    res = run_front(SimConfig(CoefField.constant(PeriodicGrid(1.0, 64), 0.0), T=40))
    assert res.speed_estimate == 0.0


def test_invariant_interval(step_run):
    # the sparse solve may overshoot 1 by round-off only
    assert step_run.u_final.min() >= 0 and step_run.u_final.max() <= 1 + INVARIANT_SLACK


def test_comparison_principle():
    cfg = SimConfig(StepProfile(0.5, 2.0, 0.0, 1.0).to_coef(128), T=20)
    worst = comparison_check(cfg, lambda x: 0.5 * (np.abs(x) <= 1), lambda x: 1.0 * (np.abs(x) <= 2))
    assert worst <= 1e-12


def test_dt_and_level_insensitive(step_run):
    b = StepProfile(0.5, 2.0, 0.0, 1.0).to_coef(256)
    fine = run_front(SimConfig(b, dt=0.01)).speed_estimate
    low = run_front(SimConfig(b, level=0.1)).speed_estimate
    assert abs(fine - step_run.speed_estimate) / step_run.speed_estimate <= 0.01
    assert abs(low - step_run.speed_estimate) / step_run.speed_estimate <= 0.01


def test_small_domain_detected():
    with pytest.raises(FrontBoundaryError):
        run_front(SimConfig(CoefField.constant(PeriodicGrid(1.0, 64), 1.0), T=30, domain_half_width=20))


def test_bad_config():
    b = CoefField.constant(PeriodicGrid(1.0, 32), 1.0)
    with pytest.raises(PreconditionError):
        next(simulate(SimConfig(b, level=1.5)))
    with pytest.raises(PreconditionError):
        next(simulate(SimConfig(b, init=lambda x: 2.0 + 0 * x)))
