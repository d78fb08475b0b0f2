import math

import numpy as np
import pytest

from vectorial.integrator import (
    IntegrationError,
    TimeGrid,
    Trajectory,
    integrate_dp45,
    integrate_rk4,
    resample,
    sample,
)
from vectorial.model import DEFAULT_INITIAL_STATE, check_nonnegative, vector_field


def decay(t, y):
    return -y


def logistic(t, y):
    return y * (1.0 - y)


def logistic_exact(t, y0=0.1):
    return 1.0 / (1.0 + (1.0 / y0 - 1.0) * math.exp(-t))


def rk4_error(f, exact, n, tf=1.0, y0=1.0):
    traj = integrate_rk4(f, [y0], TimeGrid(0.0, tf, n))
    return abs(traj.y[-1, 0] - exact)


class TestTimeGrid:
    def test_times(self):
        g = TimeGrid(0.0, 365.0, 3650)
        assert g.h == pytest.approx(0.1)
        assert g.times.size == 3651
        assert g.times[0] == 0.0 and g.times[-1] == 365.0

    def test_from_step(self):
        assert TimeGrid.from_step(0.0, 365.0, 0.1).n_steps == 3650
        assert TimeGrid.from_step(0.0, 1.0, 0.3).n_steps == 4

    @pytest.mark.parametrize("args", [(1.0, 1.0, 10), (0.0, 1.0, 0), (0.0, math.inf, 3), (0.0, 1.0, 2.5)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            TimeGrid(*args)


class TestRK4:
    def test_exponential(self):
        assert rk4_error(decay, math.exp(-1), 100) <= 1e-8

    def test_sample_count(self):
        traj = integrate_rk4(decay, [1.0], TimeGrid(0.0, 2.0, 37))
        assert len(traj) == 38

    def test_halving_ratio(self):
        ratio = rk4_error(decay, math.exp(-1), 10) / rk4_error(decay, math.exp(-1), 20)
        assert 12 <= ratio <= 20

    def test_order_on_nonlinear_problem(self):
        exact = logistic_exact(5.0)
        errors = [rk4_error(logistic, exact, n, tf=5.0, y0=0.1) for n in (20, 40, 80, 160)]
        orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
        assert all(3.8 <= q <= 4.2 for q in orders[1:]), orders

    def test_dfe_fixed_point(self, scenario2):
        dfe = np.array([scenario2.N_h, 0.0, 0.0, scenario2.N_m, 0.0])
        traj = integrate_rk4(vector_field("constant", scenario2), dfe, TimeGrid(0.0, 365.0, 365))
        assert np.all(traj.y == dfe)

    def test_non_finite_reports_time(self):
        with pytest.raises(IntegrationError) as err, np.errstate(over="ignore"):
            integrate_rk4(lambda t, y: y**2, [1.0], TimeGrid(0.0, 2.0, 2000))
        assert err.value.t is not None and err.value.t < 1.01


class TestDP45:
    def test_exponential(self):
        traj = integrate_dp45(decay, [1.0], 0.0, 1.0, rel_tol=1e-8)
        assert abs(traj.y[-1, 0] - math.exp(-1)) <= 1e-7
        assert traj.t[0] == 0.0 and traj.t[-1] == 1.0

    def test_accepted_errors_within_bound(self, preset):
        traj = integrate_dp45(vector_field("constant", preset.params), preset.initial_state, 0, 365)
        ratios = traj.meta["error_ratios"]
        assert ratios.size == traj.meta["n_accepted"] == len(traj) - 1
        assert np.all(ratios <= 1.0)

    def test_nonlinear_accuracy(self):
        traj = integrate_dp45(logistic, [0.1], 0.0, 5.0, rel_tol=1e-10, abs_tol=1e-12)
        assert traj.y[-1, 0] == pytest.approx(logistic_exact(5.0), rel=1e-8)

    def test_tolerance_refinement(self, scenario2):
        f = vector_field("constant", scenario2)
        a = integrate_dp45(f, DEFAULT_INITIAL_STATE, 0, 365, rel_tol=1e-6, abs_tol=1e-6)
        b = integrate_dp45(f, DEFAULT_INITIAL_STATE, 0, 365, rel_tol=1e-9, abs_tol=1e-9)
        assert np.max(np.abs(a.y[-1] - b.y[-1]) / np.maximum(np.abs(b.y[-1]), 1.0)) <= 1e-5

    def test_controller_constants(self):
        from vectorial import integrator

        assert (integrator.SAFETY, integrator.MIN_FACTOR, integrator.MAX_FACTOR) == (0.9, 0.2, 5.0)

    def test_tableau_consistency(self):
        from vectorial.integrator import _A, _B4, _B5, _C

        for row, c in zip(_A[1:], _C[1:]):
            assert sum(row) == pytest.approx(c, abs=1e-15)
        assert _B5.sum() == pytest.approx(1.0, abs=1e-15)
        assert _B4.sum() == pytest.approx(1.0, abs=1e-15)

    def test_step_underflow(self):
        with pytest.raises(IntegrationError):
            integrate_dp45(lambda t, y: y**2, [1.0], 0.0, 2.0)

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            integrate_dp45(decay, [1.0], 0.0, 1.0, rel_tol=0.0)
        with pytest.raises(ValueError):
            integrate_dp45(decay, [1.0], 1.0, 1.0)


@pytest.mark.parametrize("method", ["rk4", "dp45"])
def test_human_population_conserved(preset, method):
    p = preset.params
    f = vector_field("constant", p)
    if method == "rk4":
        traj = integrate_rk4(f, preset.initial_state, TimeGrid(0.0, 365.0, 3650))
    else:
        traj = integrate_dp45(f, preset.initial_state, 0.0, 365.0)
    humans = traj.y[:, :3].sum(axis=1)
    assert np.max(np.abs(humans - p.N_h)) <= 1e-6 * p.N_h


def test_rk4_and_dp45_agree(preset):
    # chain the adaptive solver day by day so both land on the same nodes without interpolation
    p = preset.params
    f = vector_field("constant", p)
    project = lambda y: check_nonnegative(y, p.N_h)  # noqa: E731
    a = integrate_rk4(f, preset.initial_state, TimeGrid(0.0, 365.0, 3650), project=project)
    daily = [np.asarray(preset.initial_state, dtype=float)]
    for day in range(365):
        seg = integrate_dp45(f, daily[-1], float(day), day + 1.0, rel_tol=1e-8, project=project)
        daily.append(seg.y[-1])
    yb = np.array(daily)
    ya = a.y[::10]
    scale = np.max(np.abs(yb), axis=0)
    assert np.max(np.abs(ya - yb) / scale) <= 1e-4


class TestSample:
    @pytest.fixture
    def traj(self):
        t = np.array([0.0, 1.0, 3.0])
        y = np.array([[0.0, 10.0], [2.0, 20.0], [6.0, 0.0]])
        return Trajectory(t, y)

    def test_at_nodes(self, traj):
        for k, t in enumerate(traj.t):
            assert np.array_equal(sample(traj, t), traj.y[k])

    def test_midpoint(self, traj):
        assert np.array_equal(sample(traj, 2.0), [4.0, 10.0])

    def test_constant(self):
        traj = Trajectory([0.0, 0.5, 2.0], np.full((3, 5), 7.25))
        for t in (0.0, 0.3, 1.1, 2.0):
            assert np.all(sample(traj, t) == 7.25)

    @pytest.mark.parametrize("t", [-0.1, 3.5])
    def test_out_of_span(self, traj, t):
        with pytest.raises(ValueError):
            sample(traj, t)

    def test_resample_matches_sample(self, traj):
        times = np.linspace(0, 3, 13)
        r = resample(traj, times)
        for k, t in enumerate(times):
            assert r.y[k] == pytest.approx(sample(traj, t), abs=1e-15)


class TestTrajectory:
    def test_increasing_times(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 0.0], np.zeros((2, 5)))

    def test_one_state_per_time(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0], np.zeros((3, 5)))

    def test_control_shape(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0], np.zeros((2, 5)), u=[0.0])
