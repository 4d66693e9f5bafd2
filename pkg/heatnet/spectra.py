"""
Spectral functions of Ohmic reservoirs and Bose-Einstein occupations.

All functions accept scalars or numpy arrays and return the same shape.
"""
from typing import Union

import numpy as np

from heatnet.errors import DomainError
from heatnet.models import BathSpec, Model

ArrayLike = Union[float, np.ndarray]


def _scalar_or_array(value: np.ndarray) -> ArrayLike:
    return float(value) if np.ndim(value) == 0 else value


def occupation(temperature: float, omega: ArrayLike) -> ArrayLike:
    """
    Bose-Einstein occupation n(omega) = 1 / (exp(omega/T) - 1).

    Evaluated as exp(-|x|) / (1 - exp(-|x|)) so large omega/T never
    overflows. Negative frequencies use n(-w) = -(n(w) + 1).

    Raises:
        DomainError: if any omega is exactly zero or T < 0
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0.0):
        raise DomainError("occupation has a pole at omega = 0")
    if temperature < 0:
        raise DomainError(f"negative temperature {temperature}")
    if temperature == 0:
        return _scalar_or_array(np.where(w > 0, 0.0, -1.0))
    x = np.abs(w) / temperature
    n_pos = np.exp(-x) / -np.expm1(-x)
    return _scalar_or_array(np.where(w > 0, n_pos, -(n_pos + 1.0)))


def thermal_derivative(temperature: float, omega: ArrayLike) -> ArrayLike:
    """dn/dT = (omega / T^2) n (n + 1); zero at T = 0"""
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0.0):
        raise DomainError("thermal derivative has a pole at omega = 0")
    if temperature <= 0:
        return _scalar_or_array(np.zeros_like(w))
    x = np.abs(w) / temperature
    # n(n+1) is even in omega
    nn1 = np.exp(-x) / np.expm1(-x) ** 2
    return _scalar_or_array(w / temperature ** 2 * nn1)


def ohmic(gamma: ArrayLike, cutoff: ArrayLike, omega: ArrayLike) -> ArrayLike:
    """J(w) = 2 gamma w cutoff^2 / (pi (w^2 + cutoff^2)), odd in w"""
    w = np.asarray(omega, dtype=float)
    return 2.0 * gamma * w * cutoff ** 2 / (np.pi * (w ** 2 + cutoff ** 2))


def ohmic_density(bath: BathSpec, omega: ArrayLike) -> ArrayLike:
    """Spectral density of one reservoir"""
    return _scalar_or_array(ohmic(bath.gamma, bath.cutoff, omega))


def susceptibility(bath: BathSpec, omega: ArrayLike) -> Union[complex, np.ndarray]:
    """chi(w) = 2 gamma cutoff^2 / (cutoff - i w); Im chi = pi J"""
    w = np.asarray(omega, dtype=float)
    chi = 2.0 * bath.gamma * bath.cutoff ** 2 / (bath.cutoff - 1j * w)
    return complex(chi) if np.ndim(chi) == 0 else chi


def susceptibility_shift(gamma: ArrayLike, cutoff: ArrayLike, omega: ArrayLike) -> np.ndarray:
    """chi(w) - chi(0) = 2 gamma cutoff i w / (cutoff - i w)"""
    w = np.asarray(omega, dtype=float)
    return 2.0 * gamma * cutoff * 1j * w / (cutoff - 1j * w)


def spectral_matrix(model: Model, omega: float) -> np.ndarray:
    """J(w) = sum over baths of projector(node) * J_bath(w); diagonal N x N"""
    n = model.network.size
    out = np.zeros((n, n))
    for bath in model.baths:
        out[bath.node, bath.node] += ohmic(bath.gamma, bath.cutoff, omega)
    return out
