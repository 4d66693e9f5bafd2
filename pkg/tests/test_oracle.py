"""
Tests for the discrete-bath time-domain reference
"""
import math

import numpy as np
import pytest
from scipy import integrate

from heatnet.errors import HorizonError, ParameterError, StepSizeError
from heatnet.models import OracleSettings, SolverSettings, two_oscillator_model
from heatnet.oracle import (
    ModeFrame,
    discretize_bath,
    oracle_compare,
    plan_oracle,
    propagate,
    run_oracle,
    spectral_settings,
    star_model,
    symplectic_min_eigenvalue,
    thermal_initial_covariance,
)
from heatnet.static_solver import static_currents

from tests.conftest import C0, NU1, NU2, OMEGA1, OMEGA2


def scaled(t1: float = 1.2, t2: float = 1.0, v1: float = 0.0, omega_d=None):
    """Reference geometry with gamma = 0.1, cutoff = 4 so the closed system stays small"""
    return two_oscillator_model(OMEGA1, OMEGA2, C0, v1=v1, omega_d=omega_d, t1=t1, t2=t2, gamma=0.1, cutoff=4.0)


class TestDiscretization:
    def test_midpoint_grid_and_density(self):
        bath = scaled().baths[0]
        modes = discretize_bath(bath, 200, 12.0)
        assert modes.spacing == pytest.approx(0.06)
        assert modes.frequencies[0] == pytest.approx(0.03)
        assert modes.recurrence_time == pytest.approx(2 * math.pi / 0.06)
        w = modes.frequencies
        expected = 2 * 0.1 * w * 16.0 / (math.pi * (w ** 2 + 16.0))
        np.testing.assert_allclose(modes.reconstructed_density(), expected, rtol=1e-12)

    def test_counterterm_approaches_static_susceptibility(self):
        bath = scaled().baths[0]
        modes = discretize_bath(bath, 2000, 12.0)
        truncated = 4 * 0.1 * 4.0 / math.pi * math.atan(12.0 / 4.0)
        assert modes.counterterm == pytest.approx(truncated, rel=1e-4)

    def test_too_few_modes(self):
        with pytest.raises(ParameterError):
            discretize_bath(scaled().baths[0], 10, 12.0)

    def test_recurrence_shorter_than_horizon(self):
        with pytest.raises(ParameterError):
            discretize_bath(scaled().baths[0], 60, 12.0, horizon=100.0)

    def test_zero_gamma_decouples(self):
        modes = discretize_bath(scaled().baths[0], 60, 12.0, gamma=0.0)
        assert np.all(modes.couplings == 0.0)
        assert modes.counterterm == 0.0


class TestStarModel:
    def test_layout(self):
        star = star_model(scaled(), 60, 12.0)
        assert star.size == 2
        assert star.dim == 122
        sl = star.bath_slice(1)
        assert (sl.start, sl.stop) == (62, 122)
        np.testing.assert_allclose(star.potential, star.potential.T)
        assert star.potential[0, 0] == pytest.approx(4.2 + star.baths[0].counterterm)
        assert np.all(np.linalg.eigvalsh(star.potential) > 0)

    def test_initial_state_is_physical(self):
        star = star_model(scaled(), 60, 12.0)
        for init in ("ground", "thermal"):
            sigma = thermal_initial_covariance(star, system_init=init)
            assert symplectic_min_eigenvalue(sigma) > -1e-12
        sigma = thermal_initial_covariance(star, temperatures=[0.0, 0.0])
        w = star.baths[0].frequencies
        idx = np.arange(star.bath_slice(0).start, star.bath_slice(0).stop)
        np.testing.assert_allclose(sigma[idx, idx], 1.0 / (2.0 * w))

    def test_bad_initial_state(self):
        star = star_model(scaled(), 60, 12.0)
        with pytest.raises(ParameterError):
            thermal_initial_covariance(star, temperatures=[1.0])
        with pytest.raises(ParameterError):
            thermal_initial_covariance(star, system_init="excited")

    def test_mode_frame_round_trip_and_energy(self):
        star = star_model(scaled(), 60, 12.0)
        frame = ModeFrame(star)
        sigma = thermal_initial_covariance(star)
        modes = frame.to_modes(sigma)
        np.testing.assert_allclose(frame.to_coordinates(modes), sigma, atol=1e-10)
        energy = frame.closed_energy(modes)
        rotated = frame.rotate(modes, 3.7)
        assert frame.closed_energy(rotated) == pytest.approx(energy, rel=1e-12)
        np.testing.assert_allclose(frame.rotate(frame.rotate(modes, 1.2), -1.2), modes, atol=1e-10)

    def test_kick_matches_dense_update(self):
        star = star_model(scaled(v1=0.1, omega_d=1.5), 60, 12.0)
        frame = ModeFrame(star)
        sigma = frame.to_modes(thermal_initial_covariance(star))
        delta_v = star.drive_at(0.4)
        h = 0.05
        d = frame.dim
        kick = np.eye(2 * d)
        kick[d:, :d] = -h * frame.system_x.T @ delta_v @ frame.system_x
        np.testing.assert_allclose(frame.kick(sigma, delta_v, h), kick @ sigma @ kick.T, atol=1e-10)


class TestPropagation:
    def test_horizon_error(self):
        model = scaled()
        star = star_model(model, 60, 12.0)
        with pytest.raises(HorizonError):
            propagate(star, thermal_initial_covariance(star), t_end=40.0)

    def test_step_size_error(self):
        model = scaled(v1=0.1, omega_d=1.5)
        star = star_model(model, 60, 12.0)
        with pytest.raises(StepSizeError):
            propagate(star, thermal_initial_covariance(star), t_end=5.0, dt=0.5)

    def test_static_energy_conservation(self):
        star = star_model(scaled(), 100, 12.0)
        trajectory = propagate(star, thermal_initial_covariance(star), t_end=30.0, sample_dt=0.1)
        np.testing.assert_allclose(trajectory.total_energy, trajectory.total_energy[0], rtol=1e-10)
        assert trajectory.min_symplectic_eigenvalue > -1e-8

    @pytest.mark.parametrize("omega_d", [None, 1.5])
    def test_system_energy_balance(self, omega_d):
        """H_S(t) - H_S(0) equals the integrated heat currents plus work"""
        model = scaled(v1=0.1 if omega_d else 0.0, omega_d=omega_d)
        star = star_model(model, 100, 12.0)
        trajectory = propagate(star, thermal_initial_covariance(star), t_end=20.0, sample_dt=0.01)
        power = trajectory.currents_commutator.sum(axis=1) + trajectory.work_rate
        gained = integrate.cumulative_trapezoid(power, trajectory.times, initial=0.0)
        change = trajectory.system_energy - trajectory.system_energy[0]
        scale = np.max(np.abs(change))
        np.testing.assert_allclose(gained, change, atol=1e-2 * scale)

    def test_driven_total_energy_follows_work(self):
        model = scaled(v1=0.1, omega_d=1.5)
        star = star_model(model, 100, 12.0)
        trajectory = propagate(star, thermal_initial_covariance(star), t_end=20.0, sample_dt=0.01)
        pumped = integrate.cumulative_trapezoid(trajectory.work_rate, trajectory.times, initial=0.0)
        change = trajectory.total_energy - trajectory.total_energy[0]
        np.testing.assert_allclose(pumped, change, atol=1e-2 * max(np.max(np.abs(change)), 1e-3))


class TestPlan:
    def test_static_defaults(self):
        plan = plan_oracle(scaled())
        assert plan.omega_max == pytest.approx(12.0)
        assert plan.transient == pytest.approx(50.0)
        assert plan.window == pytest.approx(100.0)
        assert 2 * math.pi * plan.m_modes / plan.omega_max > plan.t_end

    def test_driven_window_in_whole_periods(self):
        model = scaled(v1=0.1, omega_d=NU2 - NU1)
        plan = plan_oracle(model)
        period = 2 * math.pi / (NU2 - NU1)
        assert plan.window / (4 * period) == pytest.approx(round(plan.window / (4 * period)))
        assert period / plan.sample_dt == pytest.approx(round(period / plan.sample_dt))
        assert plan.window >= 20 * period - 1e-9

    def test_explicit_settings(self):
        plan = plan_oracle(scaled(), OracleSettings(m_modes=400, window=40.0, transient=10.0))
        assert plan.m_modes == 400
        assert plan.t_end == pytest.approx(50.0)

    def test_spectral_settings_keep_real_part(self):
        assert spectral_settings(SolverSettings()).keep_real_susceptibility


@pytest.mark.slow
class TestOracleAgreement:
    def test_static_currents(self):
        model = scaled()
        comparison = oracle_compare(model)
        assert not comparison.inconclusive
        assert comparison.deviation_spectral < 0.03
        assert comparison.deviation_definitions < 0.01
        assert comparison.oracle_commutator[0] > 0
        print(f"✓ Static oracle deviation {comparison.deviation_spectral:.3e}")

    def test_energy_drop_matches_commutator(self):
        trajectory = run_oracle(scaled())
        q = trajectory.averages["commutator"]
        np.testing.assert_allclose(trajectory.energy_drop_currents(), q, rtol=0.01, atol=1e-3 * np.max(np.abs(q)))

    def test_equal_temperatures(self):
        reference = static_currents(scaled(), spectral_settings()).heat_currents[0]
        settings = SolverSettings(oracle=OracleSettings(system_init="thermal"))
        trajectory = run_oracle(scaled(1.0, 1.0), settings.oracle)
        q = trajectory.averages["commutator"]
        assert np.max(np.abs(q)) < 0.03 * abs(reference)

    def test_doubling_modes_leaves_currents_unchanged(self):
        model = scaled()
        plan = plan_oracle(model)
        base = run_oracle(model).averages["commutator"]
        fine = run_oracle(model, OracleSettings(m_modes=2 * plan.m_modes)).averages["commutator"]
        scale = np.max(np.abs(base))
        np.testing.assert_allclose(fine, base, atol=0.03 * scale)

    def test_initial_state_forgotten(self):
        model = scaled()
        ground = run_oracle(model, OracleSettings(system_init="ground")).averages["commutator"]
        thermal = run_oracle(model, OracleSettings(system_init="thermal")).averages["commutator"]
        scale = np.max(np.abs(ground))
        np.testing.assert_allclose(thermal, ground, atol=0.03 * scale)

    def test_driven_currents(self):
        model = scaled(v1=0.1, omega_d=NU2 - NU1)
        settings = SolverSettings(order=6)
        comparison = oracle_compare(model, settings=settings)
        assert not comparison.inconclusive
        assert comparison.deviation_spectral < 0.05
        assert comparison.deviation_definitions < 0.01
        scale = max(abs(q) for q in comparison.spectral)
        assert abs(comparison.oracle_work_rate - comparison.spectral_work_rate) < 0.05 * scale
        print(f"✓ Driven oracle deviation {comparison.deviation_spectral:.3e}")
