"""
Tests for the static Green's function, transfer matrix and currents
"""
import math

import numpy as np
import pytest

from heatnet.errors import ParameterError, SingularGreenError, UnstableNetworkError
from heatnet.metrics import rectification
from heatnet.models import BathSpec, Model, NetworkSpec, SolverSettings, two_oscillator_model
from heatnet.static_solver import (
    analytic_green_two_osc,
    check_damped,
    green_static,
    integrate_static,
    normal_modes,
    static_currents,
    static_poles,
    transfer_static,
    transistor_integrals,
    two_osc_frequencies,
)

from tests.conftest import C0, NU1, NU2, OMEGA1, OMEGA2


def random_static_model(rng: np.random.Generator) -> Model:
    n = int(rng.integers(2, 5))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    v0 = q @ np.diag(rng.uniform(0.5, 4.0, size=n)) @ q.T
    v0 = 0.5 * (v0 + v0.T)
    nodes = rng.choice(n, size=2, replace=False)
    baths = [
        BathSpec(
            node=int(node),
            temperature=float(rng.uniform(0.2, 3.0)),
            gamma=float(rng.uniform(0.05, 0.2)),
            cutoff=5.0,
        )
        for node in nodes
    ]
    return Model(network=NetworkSpec(v0=v0.tolist()), baths=baths)


class TestNormalModes:
    def test_diagonal_potential(self):
        model = Model(network=NetworkSpec(v0=[[1.0, 0.0], [0.0, 4.0]]))
        modes = normal_modes(model)
        np.testing.assert_allclose(modes.frequencies, [1.0, 2.0])
        assert modes.theta == 0.0

    def test_reference_frequencies(self, static_model):
        modes = normal_modes(static_model)
        np.testing.assert_allclose(modes.frequencies, [NU1, NU2], rtol=1e-12)
        assert two_osc_frequencies(OMEGA1, OMEGA2, C0) == pytest.approx((NU1, NU2), rel=1e-12)

    def test_eigen_residual_and_orthonormality(self, static_model):
        modes = normal_modes(static_model)
        v0 = np.asarray(static_model.network.v0)
        for nu, u in zip(modes.frequencies, modes.vectors.T):
            assert np.max(np.abs(v0 @ u - nu ** 2 * u)) < 1e-10
        np.testing.assert_allclose(modes.vectors.T @ modes.vectors, np.eye(2), atol=1e-12)

    def test_mixing_angle(self, static_model):
        theta = normal_modes(static_model).theta
        assert math.tan(2 * theta) == pytest.approx(2.0 / 15.0, abs=1e-10)
        assert theta == pytest.approx(0.066291, abs=1e-4)

    def test_negative_eigenvalue_rejected(self):
        model = Model(network=NetworkSpec(v0=[[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(UnstableNetworkError):
            normal_modes(model)

    def test_whitening_with_masses(self):
        model = Model(network=NetworkSpec(masses=[4.0], v0=[[9.0]]))
        assert normal_modes(model).frequencies[0] == pytest.approx(1.5)


class TestGreenStatic:
    def test_single_oscillator_at_zero_frequency(self):
        model = Model(
            network=NetworkSpec(v0=[[4.0]]),
            baths=[BathSpec(node=0, temperature=1.0, gamma=0.01, cutoff=10.0)],
        )
        g = green_static(model, 0.0).g
        assert g[0, 0] == pytest.approx(0.25 + 0j)

    def test_zero_frequency_inverts_potential(self, static_model):
        g = green_static(static_model, 0.0).g
        np.testing.assert_allclose(g, np.linalg.inv(np.asarray(static_model.network.v0)), atol=1e-14)

    def test_matches_closed_form(self, static_model):
        rng = np.random.default_rng(5)
        for w in rng.uniform(-30.0, 30.0, size=200):
            generic = green_static(static_model, w).g
            closed = analytic_green_two_osc(OMEGA1, OMEGA2, C0, 0.01, 10.0, w)
            np.testing.assert_allclose(generic, closed, rtol=0, atol=1e-10 * max(1.0, np.max(np.abs(closed))))

    def test_closed_form_at_resonance(self, static_model):
        """Near-pole evaluation, where a swapped angle would be far off"""
        for w in (NU1, NU2):
            generic = green_static(static_model, w).g
            closed = analytic_green_two_osc(OMEGA1, OMEGA2, C0, 0.01, 10.0, w)
            np.testing.assert_allclose(generic, closed, rtol=1e-10)

    def test_decoupled_network_has_no_off_diagonal(self):
        model = two_oscillator_model(OMEGA1, OMEGA2, 0.0)
        g = green_static(model, 1.7).g
        assert g[0, 1] == 0 and g[1, 0] == 0

    def test_symmetry_and_reality(self, static_model):
        for w in np.linspace(0.05, 25.0, 60):
            g = green_static(static_model, w).g
            np.testing.assert_allclose(g, g.T, atol=1e-12)
            np.testing.assert_allclose(green_static(static_model, -w).g, g.conj(), atol=1e-12)

    def test_undamped_mode_is_singular(self):
        """Node 1 has no bath and no coupling: a real-axis pole at omega = 1"""
        model = Model(
            network=NetworkSpec(v0=[[4.0, 0.0], [0.0, 1.0]]),
            baths=[BathSpec(node=0, temperature=1.0, gamma=0.01, cutoff=10.0)],
        )
        with pytest.raises(SingularGreenError):
            green_static(model, 1.0)
        with pytest.raises(SingularGreenError):
            check_damped(model)

    def test_poles_in_lower_half_plane(self, static_model):
        poles = static_poles(static_model)
        assert np.all(poles.imag < 0)
        np.testing.assert_allclose(np.sort(np.abs(poles.real))[::2], [NU1, NU2], rtol=1e-3)


class TestTransferStatic:
    def test_symmetric_with_zero_row_sums(self, static_model):
        for w in np.linspace(-12.0, 12.0, 97):
            if w == 0:
                continue
            t = transfer_static(static_model, w)
            assert abs(t[0, 1] - t[1, 0]) < 1e-12 * max(1.0, abs(t[0, 1]))
            np.testing.assert_allclose(t.sum(axis=1), 0.0, atol=1e-15)

    def test_decoupled_network_has_no_transfer(self):
        model = two_oscillator_model(OMEGA1, OMEGA2, 0.0)
        for w in (0.3, NU1, 2.0, 7.0):
            assert transfer_static(model, w)[0, 1] == 0.0

    def test_trace_diagonal_differs_from_row_sum(self, static_model):
        row_sum = transfer_static(static_model, NU1)
        trace = transfer_static(static_model, NU1, diagonal="trace")
        assert row_sum[0, 1] == trace[0, 1]
        assert trace[0, 0] > 0 > row_sum[0, 0]

    def test_peaks_at_normal_modes(self, static_model):
        off_peak = transfer_static(static_model, 1.5)[0, 1]
        assert transfer_static(static_model, NU1)[0, 1] > 100 * off_peak
        assert transfer_static(static_model, NU2)[0, 1] > 100 * off_peak

    def test_needs_two_baths(self):
        model = Model(
            network=NetworkSpec(v0=[[1.0]]),
            baths=[BathSpec(node=0, temperature=1.0, gamma=0.01, cutoff=10.0)],
        )
        with pytest.raises(ParameterError):
            transfer_static(model, 1.0)

    def test_unknown_diagonal_completion(self, static_model):
        with pytest.raises(ParameterError):
            transfer_static(static_model, 1.0, diagonal="average")


class TestStaticCurrents:
    def test_reference_currents(self, static_model):
        report = static_currents(static_model)
        q1, q2 = report.heat_currents
        assert q1 > 0
        assert abs(q1 + q2) < 1e-8 * abs(q1) + 1e-14
        assert report.local_work_rates == [0.0, 0.0]
        assert report.quasi_currents == report.heat_currents
        assert report.tail_bound < 1e-6 * abs(q1)
        print(f"✓ Static reference current Q1 = {q1:.8e}")

    def test_equal_temperatures_carry_no_current(self, static_model):
        report = static_currents(static_model.with_temperatures([1.0, 1.0]))
        np.testing.assert_allclose(report.heat_currents, 0.0, atol=1e-14)

    def test_swapped_temperatures_reverse_current(self, static_model, tight_settings):
        values, _ = integrate_static(static_model, [[1.2, 1.0], [1.0, 1.2]], tight_settings)
        assert values[1, 0] == pytest.approx(-values[0, 0], rel=1e-10)
        assert rectification(values[0, 0], values[1, 0]) < 1e-9

    def test_zero_temperature_sink(self, static_model):
        report = static_currents(static_model.with_temperatures([1.0, 0.0]))
        assert report.heat_currents[0] > 0

    def test_no_rectification_for_random_networks(self):
        """Static networks never rectify, whatever the geometry"""
        rng = np.random.default_rng(2024)
        for _ in range(50):
            model = random_static_model(rng)
            fwd = [b.temperature for b in model.baths]
            rev = [b.temperature for b in model.swapped().baths]
            if abs(fwd[0] - fwd[1]) < 1e-3:
                continue
            try:
                values, _ = integrate_static(model, [fwd, rev], SolverSettings(quad_rel_tol=1e-10))
            except SingularGreenError:
                continue
            scale = np.max(np.abs(values))
            assert abs(np.sum(values[0])) < 1e-8 * scale + 1e-14
            assert abs(np.sum(values[1])) < 1e-8 * scale + 1e-14
            if abs(values[0, 0]) > 1e-10:
                assert rectification(values[0, 0], values[1, 0]) < 1e-6

    def test_driven_model_rejected(self, driven_model):
        with pytest.raises(ParameterError):
            static_currents(driven_model)

    def test_slope_matches_transistor_integrals(self):
        """dQ_a/dT_c from finite differences against the analytic integrals"""
        model = Model(
            network=NetworkSpec(v0=[[2.2, -0.2, 0.0], [-0.2, 1.4, -0.2], [0.0, -0.2, 2.2]]),
            baths=[
                BathSpec(node=0, temperature=1.0, gamma=0.05, cutoff=10.0),
                BathSpec(node=2, temperature=1.0, gamma=0.05, cutoff=10.0),
                BathSpec(node=1, temperature=1.5, gamma=0.05, cutoff=10.0),
            ],
        )
        settings = SolverSettings(quad_rel_tol=1e-11, quad_abs_tol=1e-16)
        h = 1e-4
        values, _ = integrate_static(model, [[1.0, 1.0, 1.5 + h], [1.0, 1.0, 1.5 - h]], settings)
        slope = (values[0] - values[1]) / (2 * h)
        integrals = transistor_integrals(model, 2, settings)
        np.testing.assert_allclose(slope[:2], -integrals[:2], rtol=1e-5)
        assert slope[2] == pytest.approx(integrals[2], rel=1e-5)
