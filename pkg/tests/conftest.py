"""Test configuration and fixtures"""
import json
import math
from pathlib import Path

import pytest

from heatnet.models import SolverSettings, two_oscillator_model

OMEGA1, OMEGA2, C0 = 2.0, 1.0, 0.2
NU1 = math.sqrt(2.7 - math.sqrt(2.29))
NU2 = math.sqrt(2.7 + math.sqrt(2.29))


@pytest.fixture
def static_model():
    """Two-oscillator reference network, T1 = 1.2, T2 = 1"""
    return two_oscillator_model(OMEGA1, OMEGA2, C0)


@pytest.fixture
def driven_model():
    """Reference network driven on node 0 away from every resonance tongue"""
    return two_oscillator_model(OMEGA1, OMEGA2, C0, v1=0.1, omega_d=1.5)


@pytest.fixture
def settings():
    """Default solver settings with a fixed Floquet order"""
    return SolverSettings(order=4, auto_order=False)


@pytest.fixture
def tight_settings():
    """Tight quadrature for identities that must hold to many digits"""
    return SolverSettings(quad_rel_tol=1e-11, quad_abs_tol=1e-16, order=4, auto_order=False)


@pytest.fixture
def write_config(tmp_path):
    """Write a run document into the test directory and return its path"""

    def _write(data, name="run.json"):
        path = Path(tmp_path) / name
        if name.endswith(".json"):
            path.write_text(json.dumps(data))
        else:
            path.write_text(data)
        return str(path)

    return _write


@pytest.fixture
def static_config(tmp_path):
    """Smallest static run document"""
    return {
        "model": {"two_oscillator": {"omega1": OMEGA1, "omega2": OMEGA2, "c0": C0}},
        "baths": [
            {"node": 0, "temperature": 1.2, "gamma": 0.01, "cutoff": 10.0},
            {"node": 1, "temperature": 1.0, "gamma": 0.01, "cutoff": 10.0},
        ],
        "output": {"directory": str(Path(tmp_path) / "out")},
    }
