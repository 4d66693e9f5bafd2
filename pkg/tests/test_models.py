"""
Tests for network models and reservoir spectra
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from heatnet.errors import DomainError, NetworkValidationError, ParameterError
from heatnet.models import BathSpec, DriveHarmonic, Model, NetworkSpec, two_oscillator_model
from heatnet.spectra import (
    occupation,
    ohmic_density,
    spectral_matrix,
    susceptibility,
    thermal_derivative,
)

BATH = BathSpec(node=0, temperature=1.0, gamma=0.01, cutoff=10.0)


class TestNetworkSpec:
    def test_unit_masses_by_default(self):
        network = NetworkSpec(v0=[[1.0, 0.0], [0.0, 4.0]])
        assert network.masses == [1.0, 1.0]
        assert network.is_static
        assert network.period is None

    def test_conjugate_partner_is_completed(self):
        """Only V_1 given; V_-1 = V_1^dagger is filled in"""
        network = NetworkSpec(
            v0=[[1.0, 0.0], [0.0, 4.0]],
            drive_harmonics=[{"k": 1, "real": [[0.1, 0.0], [0.0, 0.0]], "imag": [[0.05, 0.0], [0.0, 0.0]]}],
            omega_d=2.0,
        )
        harmonics = network.harmonics()
        assert sorted(harmonics) == [-1, 1]
        np.testing.assert_allclose(harmonics[-1], harmonics[1].conj().T)
        assert network.drive_order == 1
        assert network.period == pytest.approx(math.pi)

    def test_potential_is_real_symmetric(self, driven_model):
        rng = np.random.default_rng(7)
        network = driven_model.network
        for t in rng.uniform(0.0, 100.0, size=100):
            v = network.potential_at(t)
            assert np.max(np.abs(v - v.T)) < 1e-12
        assert network.potential_at(0.0)[0, 0] == pytest.approx(4.2 + 0.2)
        assert network.potential_at(network.period / 2)[0, 0] == pytest.approx(4.2 - 0.2)

    def test_asymmetric_v0_rejected(self):
        with pytest.raises(ValidationError, match="symmetric"):
            NetworkSpec(v0=[[1.0, 0.1], [0.0, 1.0]])

    def test_nonpositive_mass_rejected(self):
        with pytest.raises(ValidationError, match="positive"):
            NetworkSpec(masses=[1.0, 0.0], v0=[[1.0, 0.0], [0.0, 1.0]])

    def test_drive_frequency_without_harmonics_rejected(self):
        with pytest.raises(ValidationError, match="static"):
            NetworkSpec(v0=[[1.0]], omega_d=1.0)

    def test_harmonics_without_drive_frequency_rejected(self):
        with pytest.raises(ValidationError, match="static"):
            NetworkSpec(v0=[[1.0]], drive_harmonics=[{"k": 1, "real": [[0.1]]}])

    def test_zero_harmonic_index_rejected(self):
        with pytest.raises(ValidationError, match="nonzero"):
            DriveHarmonic(k=0, real=[[1.0]])

    def test_inconsistent_partner_rejected(self):
        with pytest.raises(ValidationError, match="conjugate transpose"):
            NetworkSpec(
                v0=[[1.0]],
                drive_harmonics=[{"k": 1, "real": [[0.1]]}, {"k": -1, "real": [[0.2]]}],
                omega_d=1.0,
            )


class TestModel:
    def test_two_oscillator_layout(self, driven_model):
        v0 = np.asarray(driven_model.network.v0)
        np.testing.assert_allclose(v0, [[4.2, -0.2], [-0.2, 1.2]])
        np.testing.assert_allclose(driven_model.network.harmonics()[1], [[0.1, 0.0], [0.0, 0.0]])
        assert [b.node for b in driven_model.baths] == [0, 1]
        assert driven_model.coupling() == pytest.approx(0.2)

    def test_one_bath_per_node(self):
        with pytest.raises(ValidationError, match="one bath per node"):
            Model(network=NetworkSpec(v0=[[1.0, 0.0], [0.0, 1.0]]), baths=[BATH, BATH])

    def test_bath_node_in_range(self):
        with pytest.raises(ValidationError, match="outside network"):
            Model(network=NetworkSpec(v0=[[1.0]]), baths=[BATH.model_copy(update={"node": 3})])

    def test_swapped_exchanges_first_two_temperatures(self, static_model):
        swapped = static_model.swapped()
        assert [b.temperature for b in swapped.baths] == [1.0, 1.2]
        assert [b.temperature for b in static_model.baths] == [1.2, 1.0]

    def test_retuned_coupling_keeps_local_frequencies(self, driven_model):
        model = driven_model.retuned(omega_d=2.5, c0=0.5)
        np.testing.assert_allclose(np.asarray(model.network.v0), [[4.5, -0.5], [-0.5, 1.5]])
        assert model.network.omega_d == 2.5
        assert driven_model.network.omega_d == 1.5

    def test_retuned_drive_on_static_model_rejected(self, static_model):
        with pytest.raises(ParameterError):
            static_model.retuned(omega_d=1.0)

    def test_retuned_negative_drive_is_a_validation_error(self, driven_model):
        with pytest.raises(NetworkValidationError, match="positive"):
            driven_model.retuned(omega_d=-1.0)

    def test_wrong_temperature_count(self, static_model):
        with pytest.raises(ParameterError):
            static_model.with_temperatures([1.0])

    def test_static_part_and_scaled_drive(self, driven_model):
        assert driven_model.static_part().is_static
        scaled = driven_model.scaled_drive(0.5)
        np.testing.assert_allclose(scaled.network.harmonics()[1][0, 0], 0.05)
        assert not scaled.is_static

    def test_models_are_frozen(self, static_model):
        with pytest.raises(ValidationError):
            static_model.baths[0].temperature = 3.0


class TestOccupation:
    def test_bose_function(self):
        assert occupation(1.0, 1.0) == pytest.approx(0.5819767068693265, rel=1e-12)

    def test_zero_temperature(self):
        assert occupation(0.0, 2.5) == 0.0
        assert occupation(0.0, -2.5) == -1.0

    def test_negative_frequency(self):
        assert occupation(1.0, -1.0) == pytest.approx(-1.5819767068693265, rel=1e-12)

    def test_reflection_identity(self):
        rng = np.random.default_rng(3)
        w = rng.uniform(0.01, 50.0, size=1000)
        for temp in (0.1, 1.0, 7.5):
            np.testing.assert_allclose(occupation(temp, -w) + occupation(temp, w) + 1.0, 0.0, atol=1e-12)

    def test_no_overflow_for_large_ratio(self):
        assert occupation(1e-3, 10.0) == 0.0
        assert occupation(1e-3, -10.0) == -1.0

    def test_pole_at_zero(self):
        with pytest.raises(DomainError):
            occupation(1.0, 0.0)
        with pytest.raises(DomainError):
            occupation(1.0, np.array([1.0, 0.0]))

    def test_thermal_derivative_matches_difference(self):
        h = 1e-5
        for w in (-3.0, 0.5, 2.0):
            fd = (occupation(1.0 + h, w) - occupation(1.0 - h, w)) / (2 * h)
            assert thermal_derivative(1.0, w) == pytest.approx(fd, rel=1e-6)


class TestSpectra:
    def test_ohmic_density_values(self):
        assert ohmic_density(BATH, 0.0) == 0.0
        assert ohmic_density(BATH, 10.0) == pytest.approx(0.01 / math.pi, rel=1e-14)
        assert ohmic_density(BATH, -3.0) == -ohmic_density(BATH, 3.0)

    def test_susceptibility_values(self):
        assert susceptibility(BATH, 0.0) == pytest.approx(0.2 + 0j)
        assert abs(susceptibility(BATH, 1e6)) == pytest.approx(2 * 0.01 * 100 / 1e6, rel=1e-6)

    def test_fluctuation_dissipation(self):
        rng = np.random.default_rng(11)
        w = rng.uniform(-100.0, 100.0, size=1000)
        np.testing.assert_allclose(susceptibility(BATH, w).imag, math.pi * ohmic_density(BATH, w), atol=1e-12)

    def test_spectral_matrix_identical_baths(self, static_model):
        j = spectral_matrix(static_model, 1.3)
        np.testing.assert_allclose(j, ohmic_density(static_model.baths[0], 1.3) * np.eye(2))

    def test_spectral_matrix_projector_support(self):
        network = NetworkSpec(v0=np.diag([1.0, 2.0, 3.0]).tolist())
        model = Model(network=network, baths=[BATH.model_copy(update={"node": 1})])
        j = spectral_matrix(model, 0.7)
        assert np.count_nonzero(j) == 1
        assert j[1, 1] > 0
        np.testing.assert_array_equal(spectral_matrix(model, -0.7), -j)

    def test_spectral_matrix_without_baths(self):
        model = Model(network=NetworkSpec(v0=[[1.0]]))
        np.testing.assert_array_equal(spectral_matrix(model, 2.0), np.zeros((1, 1)))
