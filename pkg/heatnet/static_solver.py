"""
Static Green's function, heat-transfer matrix and steady-state currents.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from heatnet.errors import ParameterError, SingularGreenError, UnstableNetworkError
from heatnet.models import CurrentsReport, Model, SolverSettings
from heatnet.quadrature import QuadratureResult, integrate_spectrum, integration_limit
from heatnet.quadrature import resonance_breakpoints as _breakpoints
from heatnet.spectra import occupation, ohmic, susceptibility_shift, thermal_derivative

logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12


@dataclass
class GreenSample:
    omega: float
    g: np.ndarray
    condition: float


@dataclass
class NormalModes:
    """Normal modes of the mass-whitened static potential"""
    frequencies: np.ndarray
    vectors: np.ndarray
    theta: Optional[float] = None


@dataclass(eq=False)
class TransferSet:
    """Static transfer matrix sampled on a frequency grid"""
    grid: np.ndarray
    t: np.ndarray


class StaticKernel:
    """Per-model precomputation for repeated G0(omega) evaluations"""

    def __init__(self, model: Model, settings: Optional[SolverSettings] = None):
        self.model = model
        self.settings = settings or SolverSettings()
        arrays = model.arrays()
        self.masses = arrays.masses
        self.v0 = arrays.v0.astype(complex)
        self.nodes = arrays.nodes
        self.gammas = arrays.gammas
        self.cutoffs = arrays.cutoffs
        self.n_baths = arrays.n_baths
        self._eye = np.eye(arrays.size, dtype=complex)

    def self_energy(self, omega: float) -> np.ndarray:
        """Per-bath term subtracted from the diagonal: i pi J (+ renormalized Re chi)"""
        if self.settings.keep_real_susceptibility:
            return susceptibility_shift(self.gammas, self.cutoffs, omega)
        return 1j * np.pi * ohmic(self.gammas, self.cutoffs, omega)

    def diagonal(self, omega: float) -> np.ndarray:
        d = (-(omega ** 2) * self.masses).astype(complex)
        d[self.nodes] -= self.self_energy(omega)
        return d

    def dynamical_matrix(self, omega: float) -> np.ndarray:
        return self.v0 + np.diag(self.diagonal(omega))

    def green(self, omega: float) -> Tuple[np.ndarray, float]:
        """
        Solve (-w^2 M + V0 - chi(w)) G = 1.

        Returns:
            G and its 1-norm condition number

        Raises:
            SingularGreenError: singular or ill-conditioned system
        """
        d = self.dynamical_matrix(omega)
        try:
            g = np.linalg.solve(d, self._eye)
        except np.linalg.LinAlgError as e:
            raise SingularGreenError(f"G0 is singular at omega={omega:.6g}", omega=omega) from e
        cond = float(np.linalg.norm(d, 1) * np.linalg.norm(g, 1))
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            raise SingularGreenError(
                f"G0 is ill-conditioned at omega={omega:.6g} (cond={cond:.3e})",
                omega=omega,
                condition=cond,
            )
        return g, cond

    def transfer(self, omega: float, diagonal: str = "row_sum") -> np.ndarray:
        g, _ = self.green(omega)
        j = ohmic(self.gammas, self.cutoffs, omega)
        sub = g[np.ix_(self.nodes, self.nodes)]
        t = np.pi * omega * np.outer(j, j) * np.abs(sub) ** 2
        if diagonal == "row_sum":
            np.fill_diagonal(t, 0.0)
            np.fill_diagonal(t, -t.sum(axis=1))
        elif diagonal != "trace":
            raise ParameterError(f"unknown diagonal completion '{diagonal}'")
        return t

    def currents_density(self, omega: float, temperature_sets: np.ndarray) -> np.ndarray:
        """Integrand of every bath current for each row of temperatures, flattened"""
        t = self.transfer(omega)
        np.fill_diagonal(t, 0.0)
        out = np.empty((len(temperature_sets), self.n_baths))
        row = t.sum(axis=1)
        for s, temps in enumerate(temperature_sets):
            n = np.array([occupation(temp, omega) for temp in temps])
            out[s] = row * n - t @ n
        return out.ravel()


def normal_modes(model: Model) -> NormalModes:
    """
    Normal modes of M^-1/2 V0 M^-1/2 in ascending order.

    For two nodes the mixing angle satisfies tan(2 theta) = -2 c0 / Delta
    with Delta = omega2^2 - omega1^2 (principal branch).

    Raises:
        UnstableNetworkError: if the whitened potential is not positive definite
    """
    arrays = model.arrays()
    w = 1.0 / np.sqrt(arrays.masses)
    k = arrays.v0 * np.outer(w, w)
    evals, evecs = linalg.eigh(k)
    if evals[0] <= 0:
        raise UnstableNetworkError(
            f"static potential has a nonpositive eigenvalue {evals[0]:.6g}",
            eigenvalue=float(evals[0]),
        )
    theta = None
    if arrays.size == 2:
        c0 = -k[0, 1]
        half_gap = (k[0, 0] - k[1, 1]) / 2.0
        if half_gap != 0:
            theta = 0.5 * float(np.arctan(c0 / half_gap))
        else:
            theta = float(np.sign(c0)) * np.pi / 4.0
    return NormalModes(frequencies=np.sqrt(evals), vectors=evecs, theta=theta)


def analytic_green_two_osc(
    omega1: float,
    omega2: float,
    c0: float,
    gamma: float,
    cutoff: float,
    omega: float,
) -> np.ndarray:
    """
    Closed-form G0 for two unit masses with identical baths (Re chi dropped).

    G0 = u1 u1^T / L1 + u2 u2^T / L2 with u1 = (sin t, cos t),
    u2 = (cos t, -sin t) and L_i = lambda_i - w^2 - i pi J(w), where
    lambda_i is the eigenvalue carried by u_i. For omega1 > omega2 and
    c0 > 0, u1 carries the lower frequency nu1.
    """
    delta = omega2 ** 2 - omega1 ** 2
    if delta != 0:
        theta = 0.5 * np.arctan(-2.0 * c0 / delta)
    else:
        theta = np.sign(c0) * np.pi / 4.0
    s, c = np.sin(theta), np.cos(theta)
    a, b = omega1 ** 2 + c0, omega2 ** 2 + c0
    lam1 = s * s * a + c * c * b - 2.0 * s * c * c0
    lam2 = c * c * a + s * s * b + 2.0 * s * c * c0
    damping = 1j * np.pi * ohmic(gamma, cutoff, omega)
    l1 = lam1 - omega ** 2 - damping
    l2 = lam2 - omega ** 2 - damping
    u1 = np.array([s, c])
    u2 = np.array([c, -s])
    return np.outer(u1, u1) / l1 + np.outer(u2, u2) / l2


def two_osc_frequencies(omega1: float, omega2: float, c0: float) -> Tuple[float, float]:
    """nu_{1,2}^2 = omega1^2 + c0 + Delta/2 -+ sqrt(c0^2 + Delta^2/4)"""
    delta = omega2 ** 2 - omega1 ** 2
    root = np.sqrt(c0 ** 2 + delta ** 2 / 4.0)
    base = omega1 ** 2 + c0 + delta / 2.0
    return float(np.sqrt(base - root)), float(np.sqrt(base + root))


def green_static(model: Model, omega: float, settings: Optional[SolverSettings] = None) -> GreenSample:
    """G0(omega) = (-omega^2 M + V0 - i pi J(omega))^-1 (drive ignored)"""
    g, cond = StaticKernel(model, settings).green(omega)
    return GreenSample(omega=float(omega), g=g, condition=cond)


def transfer_static(
    model: Model,
    omega: float,
    diagonal: str = "row_sum",
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """
    Static heat-transfer matrix T0_ab(omega) = pi omega J_a J_b |G0_ab|^2.

    The diagonal is fixed either by zero row sums (canonical) or by the
    trace formula with a = b.
    """
    if len(model.baths) < 2:
        raise ParameterError("transfer matrix needs at least two baths")
    return StaticKernel(model, settings).transfer(omega, diagonal=diagonal)


def transfer_set(model: Model, grid: Sequence[float], settings: Optional[SolverSettings] = None) -> TransferSet:
    kernel = StaticKernel(model, settings)
    grid = np.asarray(grid, dtype=float)
    return TransferSet(grid=grid, t=np.array([kernel.transfer(w) for w in grid]))


def static_poles(model: Model) -> np.ndarray:
    """
    Poles of G0 in the Markovian limit, sorted by imaginary part.

    Solves det(s^2 M + s Gamma + V0) = 0 with Gamma = 2 gamma on every
    bath node and maps s to omega = i s.
    """
    arrays = model.arrays()
    n = arrays.size
    friction = np.zeros(n)
    friction[arrays.nodes] = 2.0 * arrays.gammas
    minv = 1.0 / arrays.masses
    companion = np.zeros((2 * n, 2 * n))
    companion[:n, n:] = np.eye(n)
    companion[n:, :n] = -minv[:, None] * arrays.v0
    companion[n:, n:] = -np.diag(minv * friction)
    poles = 1j * linalg.eigvals(companion)
    return poles[np.argsort(poles.imag)]


def check_damped(model: Model) -> None:
    """
    Raises:
        SingularGreenError: if some mode of G0 is not damped by any bath
    """
    poles = static_poles(model)
    scale = max(1.0, float(np.max(np.abs(poles))))
    worst = float(np.max(poles.imag))
    if worst >= -1e-12 * scale:
        raise SingularGreenError(
            f"undamped mode: G0 has a pole with Im omega = {worst:.3e}",
            pole_imag=worst,
        )


def resonance_breakpoints(model: Model, order: int = 0, omega_max: Optional[float] = None) -> np.ndarray:
    """Panel boundaries at +-nu_i (+ k omega_d for driven models)"""
    modes = normal_modes(model)
    arrays = model.arrays()
    limit = omega_max if omega_max is not None else model_integration_limit(model, order)
    width = float(np.min(arrays.gammas)) if arrays.n_baths else 1.0
    return _breakpoints(modes.frequencies, limit, width, omega_d=arrays.omega_d, order=order)


def model_integration_limit(model: Model, order: int = 0, settings: Optional[SolverSettings] = None) -> float:
    arrays = model.arrays()
    override = settings.omega_max if settings is not None else None
    return integration_limit(
        normal_modes(model).frequencies, arrays.cutoffs, arrays.omega_d, order, override=override
    )


def _tail_bound(kernel: StaticKernel, omega_max: float, temperature_sets: np.ndarray) -> float:
    """Bound on the static current integrand beyond +-omega_max"""
    t_max = float(np.max(temperature_sets))
    if t_max == 0 or kernel.n_baths < 2:
        return 0.0
    v_norm = float(np.linalg.norm(kernel.v0.real, 2))
    if kernel.settings.keep_real_susceptibility:
        v_norm += float(np.max(2.0 * kernel.gammas * kernel.cutoffs))
    m_min = float(np.min(kernel.masses))
    if omega_max ** 2 * m_min <= v_norm:
        return float("inf")
    pairs = kernel.n_baths * (kernel.n_baths - 1)

    def bound(w: float) -> float:
        j = float(np.max(ohmic(kernel.gammas, kernel.cutoffs, w)))
        g = 1.0 / (w ** 2 * m_min - v_norm)
        return np.pi * w * j * j * g * g * occupation(t_max, w) * pairs

    one_side, _ = integrate.quad(bound, omega_max, np.inf)
    return 2.0 * float(one_side)


def integrate_static(
    model: Model,
    temperature_sets: Sequence[Sequence[float]],
    settings: Optional[SolverSettings] = None,
) -> Tuple[np.ndarray, QuadratureResult]:
    """
    Static currents for several temperature assignments on shared nodes.

    Returns:
        array of shape (len(temperature_sets), n_baths) and the quadrature record
    """
    settings = settings or SolverSettings()
    if len(model.baths) < 2:
        raise ParameterError("static currents need at least two baths")
    check_damped(model)
    temps = np.asarray(temperature_sets, dtype=float)
    kernel = StaticKernel(model, settings)
    omega_max = model_integration_limit(model, 0, settings)
    points = resonance_breakpoints(model, 0, omega_max)
    tail = _tail_bound(kernel, omega_max, temps)
    result = integrate_spectrum(
        lambda w: kernel.currents_density(w, temps), omega_max, points, settings, tail=tail
    )
    return result.value.reshape(len(temps), kernel.n_baths), result


def static_currents(model: Model, settings: Optional[SolverSettings] = None) -> CurrentsReport:
    """
    Steady-state heat currents of a static network.

    Q_a = sum_b int T0_ab(w) (n_a(w) - n_b(w)) dw over the real axis.
    """
    if not model.is_static:
        raise ParameterError("static_currents needs a static model; use Model.static_part()")
    temps = [b.temperature for b in model.baths]
    values, quad = integrate_static(model, [temps], settings)
    heat = values[0]
    residual = float(np.sum(heat))
    logger.info(f"✓ Static currents {np.array2string(heat, precision=6)} (residual {residual:.2e})")
    return CurrentsReport(
        driven=False,
        temperatures=temps,
        heat_currents=heat.tolist(),
        local_work_rates=[0.0] * len(heat),
        work_rate=0.0,
        quasi_currents=heat.tolist(),
        first_law_residual=residual,
        quad_error=quad.error,
        tail_bound=quad.tail,
        omega_max=quad.omega_max,
    )


def transistor_integrals(
    model: Model,
    control: int = 2,
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """
    I_ac = int T0_ac(w) dn_c/dT_c dw for every bath a.

    dQ_a/dT_c = -I_ac for a != c, and the control entry holds
    dQ_c/dT_c = sum over a != c of I_ac.
    """
    settings = settings or SolverSettings()
    if control >= len(model.baths):
        raise ParameterError(f"control bath {control} does not exist")
    check_damped(model)
    kernel = StaticKernel(model, settings)
    t_c = model.baths[control].temperature

    def density(w: float) -> np.ndarray:
        t = kernel.transfer(w)
        np.fill_diagonal(t, 0.0)
        return t[:, control] * thermal_derivative(t_c, w)

    omega_max = model_integration_limit(model, 0, settings)
    result = integrate_spectrum(density, omega_max, resonance_breakpoints(model, 0, omega_max), settings)
    out = result.value.copy()
    out[control] = np.sum(np.delete(result.value, control))
    return out
