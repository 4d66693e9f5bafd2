"""
Floquet amplitudes, dynamical transfer matrices and period-averaged
currents of periodically driven networks.

The amplitudes A_k(omega), |k| <= K, solve the block system

    G0^-1(omega - k omega_d) A_k + sum_{j != 0} V_j A_{k-j} = delta_k0

which is banded with bandwidth (p + 1) N - 1 for harmonics |j| <= p.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, linalg

from heatnet.errors import (
    FloquetInstabilityError,
    ParameterError,
    TruncationError,
    UnsupportedHarmonicsError,
)
from heatnet.models import CurrentsReport, Model, SolverSettings, StabilityReport
from heatnet.quadrature import QuadratureResult, integrate_spectrum
from heatnet.spectra import occupation, ohmic, susceptibility_shift
from heatnet.static_solver import (
    StaticKernel,
    check_damped,
    model_integration_limit,
    normal_modes,
    resonance_breakpoints,
    static_poles,
)

logger = logging.getLogger(__name__)

MULTIPLIER_TOL = 1e-9
CONDITION_LIMIT = 1e10
RESIDUAL_LIMIT = 1e-10


@dataclass(eq=False)
class FloquetAmplitudes:
    """A_k(omega) for k in [-order, order], stacked in ``blocks``"""
    omega: float
    order: int
    blocks: np.ndarray
    residual: float

    def __getitem__(self, k: int) -> np.ndarray:
        if abs(k) > self.order:
            return np.zeros_like(self.blocks[0])
        return self.blocks[k + self.order]

    @property
    def a(self) -> Dict[int, np.ndarray]:
        return {k: self[k] for k in range(-self.order, self.order + 1)}


@dataclass(eq=False)
class DynamicTransferSet:
    """Dynamical transfer matrices sampled on a frequency grid"""
    grid: np.ndarray
    t: np.ndarray
    t_tilde: np.ndarray
    rates: np.ndarray
    condition: np.ndarray
    order: int


def default_order(model: Model) -> int:
    return model.network.drive_order + 3


def _to_banded(dense: np.ndarray, lower: int, upper: int) -> np.ndarray:
    """LAPACK band storage: ab[upper + i - j, j] = a[i, j]"""
    n = dense.shape[0]
    ab = np.zeros((lower + upper + 1, n), dtype=dense.dtype)
    for offset in range(-lower, upper + 1):
        diag = np.diagonal(dense, offset=offset)
        if offset >= 0:
            ab[upper - offset, offset:] = diag
        else:
            ab[upper - offset, : n + offset] = diag
    return ab


class FloquetKernel:
    """Block system of one driven model at fixed truncation order"""

    def __init__(self, model: Model, order: int, settings: Optional[SolverSettings] = None):
        if model.is_static:
            raise ParameterError("Floquet solver needs a driven model")
        self.model = model
        self.settings = settings or SolverSettings()
        arrays = model.arrays()
        p = model.network.drive_order
        if order < p:
            raise TruncationError(f"order {order} is smaller than the largest harmonic {p}", order=order)
        self.order = order
        self.size = arrays.size
        self.omega_d = float(arrays.omega_d)
        self.masses = arrays.masses
        self.nodes = arrays.nodes
        self.gammas = arrays.gammas
        self.cutoffs = arrays.cutoffs
        self.n_baths = arrays.n_baths
        self.ks = np.arange(-order, order + 1)
        self.bandwidth = (p + 1) * self.size - 1

        n, blocks = self.size, len(self.ks)
        const = np.zeros((blocks * n, blocks * n), dtype=complex)
        for row in range(blocks):
            const[row * n:(row + 1) * n, row * n:(row + 1) * n] = arrays.v0
            for j, vj in arrays.harmonics.items():
                col = row - j
                if 0 <= col < blocks:
                    const[row * n:(row + 1) * n, col * n:(col + 1) * n] = vj
        self.const = const
        self.banded = _to_banded(const, self.bandwidth, self.bandwidth)
        self.rhs = np.zeros((blocks * n, n), dtype=complex)
        self.rhs[order * n:(order + 1) * n] = np.eye(n)

    def shifted(self, omega: float) -> np.ndarray:
        return omega - self.ks * self.omega_d

    def block_diagonal(self, omega: float) -> np.ndarray:
        """Frequency-dependent part of the diagonal, -(w - k wd)^2 M - chi(w - k wd)"""
        w = self.shifted(omega)
        diag = (-(w[:, None] ** 2) * self.masses[None, :]).astype(complex)
        if self.settings.keep_real_susceptibility:
            sigma = susceptibility_shift(self.gammas[None, :], self.cutoffs[None, :], w[:, None])
        else:
            sigma = 1j * np.pi * ohmic(self.gammas[None, :], self.cutoffs[None, :], w[:, None])
        diag[:, self.nodes] -= sigma
        return diag.ravel()

    def dense(self, omega: float) -> np.ndarray:
        return self.const + np.diag(self.block_diagonal(omega))

    def amplitudes(self, omega: float) -> np.ndarray:
        """Blocks A_k(omega) with shape (2K + 1, N, N)"""
        ab = self.banded.copy()
        ab[self.bandwidth] += self.block_diagonal(omega)
        try:
            x = linalg.solve_banded((self.bandwidth, self.bandwidth), ab, self.rhs, check_finite=False)
        except (np.linalg.LinAlgError, ValueError) as e:
            raise FloquetInstabilityError(f"Floquet system is singular at omega={omega:.6g}", omega=omega) from e
        if not np.all(np.isfinite(x)):
            raise FloquetInstabilityError(f"Floquet system is singular at omega={omega:.6g}", omega=omega)
        return x.reshape(len(self.ks), self.size, self.size)

    def solve(self, omega: float) -> FloquetAmplitudes:
        blocks = self.amplitudes(omega)
        defect = self.dense(omega) @ blocks.reshape(-1, self.size) - self.rhs
        residual = float(np.max(np.abs(defect)))
        return FloquetAmplitudes(omega=float(omega), order=self.order, blocks=blocks, residual=residual)

    def condition(self, omega: float) -> float:
        return float(np.linalg.cond(self.dense(omega)))

    def rates(self, omega: float, blocks: Optional[np.ndarray] = None) -> np.ndarray:
        """r^k_ab(w) = pi J_a(w - k wd) |A_k(w)_ab|^2 J_b(w), shape (2K + 1, nb, nb)"""
        if blocks is None:
            blocks = self.amplitudes(omega)
        jk = ohmic(self.gammas[None, :], self.cutoffs[None, :], self.shifted(omega)[:, None])
        jw = ohmic(self.gammas, self.cutoffs, omega)
        sub = blocks[:, self.nodes][:, :, self.nodes]
        return np.pi * jk[:, :, None] * np.abs(sub) ** 2 * jw[None, None, :]

    def transfer(self, omega: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Returns:
            T_ab(w) with completed diagonal, T~_a(w) and the process rates
        """
        r = self.rates(omega)
        t = np.einsum("k,kab->ab", self.shifted(omega), r)
        t_tilde = -self.omega_d * np.einsum("k,kga->a", self.ks, r)
        np.fill_diagonal(t, 0.0)
        np.fill_diagonal(t, t_tilde - t.sum(axis=0))
        return t, t_tilde, r

    def currents_density(self, omega: float, temperature_sets: np.ndarray) -> np.ndarray:
        """Heat-current and local-work integrands for each temperature row, flattened"""
        r = self.rates(omega)
        off = np.einsum("k,kab->ab", self.shifted(omega), r)
        np.fill_diagonal(off, 0.0)
        t_tilde = -self.omega_d * np.einsum("k,kga->a", self.ks, r)
        col = off.sum(axis=0)
        out = np.empty((len(temperature_sets), 2 * self.n_baths))
        for s, temps in enumerate(temperature_sets):
            h = np.array([occupation(temp, omega) for temp in temps]) + 0.5
            heat = -t_tilde * h + col * h - off @ h
            out[s, : self.n_baths] = heat
            out[s, self.n_baths:] = t_tilde * h
        return out.ravel()


def solve_amplitudes(
    model: Model,
    omega: float,
    order: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> FloquetAmplitudes:
    """Solve the truncated block system at one frequency; residual recorded"""
    kernel = FloquetKernel(model, order or default_order(model), settings)
    amps = kernel.solve(omega)
    if amps.residual > RESIDUAL_LIMIT:
        logger.warning(f"Floquet residual {amps.residual:.2e} at omega={omega:.6g}")
    return amps


def perturbative_amplitudes(
    model: Model,
    omega: float,
    settings: Optional[SolverSettings] = None,
) -> FloquetAmplitudes:
    """
    Leading-order amplitudes for drives with harmonics +-1 only:
    A_0 = G0 + sum_j G0(w) V_j G0(w + j wd) V_-j G0(w) and
    A_k = -G0(w - k wd) V_k G0(w).
    """
    harmonics = model.network.harmonics()
    if model.is_static or set(harmonics) != {-1, 1}:
        raise UnsupportedHarmonicsError("perturbative amplitudes need harmonics k = +-1 only")
    static = StaticKernel(model, settings)
    wd = float(model.network.omega_d)
    g0, _ = static.green(omega)
    second = np.zeros_like(g0)
    for j in (-1, 1):
        gj, _ = static.green(omega + j * wd)
        second += g0 @ harmonics[j] @ gj @ harmonics[-j] @ g0
    blocks = np.empty((3,) + g0.shape, dtype=complex)
    for k in (-1, 1):
        gk, _ = static.green(omega - k * wd)
        blocks[k + 1] = -gk @ harmonics[k] @ g0
    blocks[1] = g0 + second
    kernel = FloquetKernel(model, 1, settings)
    defect = kernel.dense(omega) @ blocks.reshape(-1, g0.shape[0]) - kernel.rhs
    return FloquetAmplitudes(omega=float(omega), order=1, blocks=blocks, residual=float(np.max(np.abs(defect))))


def dynamic_transfer(
    model: Model,
    grid: Sequence[float],
    order: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> DynamicTransferSet:
    """Transfer matrices, T~ and process rates on a grid, with per-point condition numbers"""
    kernel = FloquetKernel(model, order or default_order(model), settings)
    grid = np.asarray(grid, dtype=float)
    ts, tts, rates, conds = [], [], [], []
    for w in grid:
        t, t_tilde, r = kernel.transfer(w)
        ts.append(t)
        tts.append(t_tilde)
        rates.append(r)
        conds.append(kernel.condition(w))
    return DynamicTransferSet(
        grid=grid,
        t=np.array(ts),
        t_tilde=np.array(tts),
        rates=np.array(rates),
        condition=np.array(conds),
        order=kernel.order,
    )


def driven_integral(
    models: Sequence[Model],
    temperature_sets: Sequence[Sequence[float]],
    order: int,
    settings: Optional[SolverSettings] = None,
) -> Tuple[np.ndarray, QuadratureResult]:
    """
    Integrate heat and local-work densities of several driven models on
    one shared set of quadrature nodes.

    Returns:
        array (len(models), len(temperature_sets), 2 n_baths) and the quadrature record
    """
    settings = settings or SolverSettings()
    temps = np.asarray(temperature_sets, dtype=float)
    kernels = [FloquetKernel(m, order, settings) for m in models]
    omega_max = max(model_integration_limit(m, order, settings) for m in models)
    points = np.unique(np.concatenate([resonance_breakpoints(m, order, omega_max) for m in models]))

    def density(w: float) -> np.ndarray:
        return np.concatenate([k.currents_density(w, temps) for k in kernels])

    result = integrate_spectrum(density, omega_max, points, settings)
    shape = (len(kernels), len(temps), 2 * kernels[0].n_baths)
    return result.value.reshape(shape), result


def converged_integral(
    models: Sequence[Model],
    temperature_sets: Sequence[Sequence[float]],
    settings: Optional[SolverSettings] = None,
    order: Optional[int] = None,
) -> Tuple[np.ndarray, QuadratureResult, int, bool]:
    """
    ``driven_integral`` with automatic escalation K -> K + 2 until the
    relative change drops below the order tolerance or K reaches max_order.

    Returns:
        values, quadrature record, final order, convergence flag
    """
    settings = settings or SolverSettings()
    k = order or settings.order or max(default_order(m) for m in models)
    values, quad = driven_integral(models, temperature_sets, k, settings)
    if not settings.auto_order:
        return values, quad, k, False
    converged = False
    while k < settings.max_order:
        k_next = min(k + 2, settings.max_order)
        new_values, new_quad = driven_integral(models, temperature_sets, k_next, settings)
        scale = max(float(np.max(np.abs(new_values))), 1e-300)
        change = float(np.max(np.abs(new_values - values))) / scale
        values, quad, k = new_values, new_quad, k_next
        logger.debug(f"Floquet order {k}: relative change {change:.2e}")
        if change < settings.order_tolerance:
            converged = True
            break
    if not converged:
        logger.warning(f"✗ Floquet order did not converge up to K={k}")
    return values, quad, k, converged


def _report(temps: List[float], row: np.ndarray, quad: QuadratureResult, order: int, converged: bool) -> CurrentsReport:
    nb = len(temps)
    heat, local = row[:nb], row[nb:]
    work = float(np.sum(local))
    return CurrentsReport(
        driven=True,
        temperatures=temps,
        heat_currents=heat.tolist(),
        local_work_rates=local.tolist(),
        work_rate=work,
        quasi_currents=(heat + local).tolist(),
        first_law_residual=float(np.sum(heat) + work),
        quad_error=quad.error,
        tail_bound=quad.tail,
        omega_max=quad.omega_max,
        order=order,
        order_converged=converged,
    )


def ensure_steady_state(model: Model, settings: SolverSettings) -> None:
    """
    Raises:
        FloquetInstabilityError: if the stability heuristic flags the model
    """
    check_damped(model)
    if settings.check_stability:
        report = stability_check(model, settings)
        if not report.stable:
            raise FloquetInstabilityError(
                f"no periodic steady state: {report.reason}",
                worst_multiplier=report.worst_multiplier,
                max_condition=report.max_condition,
            )


def averaged_currents(
    model: Model,
    order: Optional[int] = None,
    settings: Optional[SolverSettings] = None,
) -> CurrentsReport:
    """
    Period-averaged heat currents and work rates of a driven network.

    Q_a = -int T~_a (n_a + 1/2) + sum_{b != a} int [T_ba (n_a + 1/2) - T_ab (n_b + 1/2)]
    W_a = int T~_a (n_a + 1/2), W = sum_a W_a
    """
    settings = settings or SolverSettings()
    if model.is_static:
        raise ParameterError("averaged_currents needs a driven model")
    if len(model.baths) < 2:
        raise ParameterError("currents need at least two baths")
    ensure_steady_state(model, settings)
    temps = [b.temperature for b in model.baths]
    values, quad, k, converged = converged_integral([model], [temps], settings, order)
    report = _report(temps, values[0, 0], quad, k, converged)
    logger.info(
        f"✓ Driven currents {np.array2string(np.array(report.heat_currents), precision=6)} "
        f"work {report.work_rate:.6g} (K={k}, residual {report.first_law_residual:.2e})"
    )
    return report


def paired_currents(
    model: Model,
    settings: Optional[SolverSettings] = None,
) -> Tuple[CurrentsReport, CurrentsReport]:
    """Forward and temperature-swapped reports of one driven model on shared nodes"""
    settings = settings or SolverSettings()
    ensure_steady_state(model, settings)
    fwd = [b.temperature for b in model.baths]
    rev = [b.temperature for b in model.swapped().baths]
    values, quad, k, converged = converged_integral([model], [fwd, rev], settings)
    return _report(fwd, values[0, 0], quad, k, converged), _report(rev, values[0, 1], quad, k, converged)


def monodromy(model: Model) -> np.ndarray:
    """
    One-period propagator of M x'' + Gamma x' + V(t) x = 0 with
    Gamma = 2 gamma on every bath node (Markovian proxy of the baths).
    """
    arrays = model.arrays()
    n = arrays.size
    friction = np.zeros(n)
    friction[arrays.nodes] = 2.0 * arrays.gammas
    minv = 1.0 / arrays.masses
    wd = float(arrays.omega_d)
    harmonics = list(arrays.harmonics.items())

    def potential(t: float) -> np.ndarray:
        v = arrays.v0.astype(complex)
        for k, vk in harmonics:
            v = v + vk * np.exp(1j * k * wd * t)
        return v.real

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        phi = y.reshape(2 * n, 2 * n)
        x, v = phi[:n], phi[n:]
        acc = -minv[:, None] * (friction[:, None] * v + potential(t) @ x)
        return np.concatenate([v, acc]).ravel()

    sol = integrate.solve_ivp(
        rhs, (0.0, 2.0 * np.pi / wd), np.eye(2 * n).ravel(), method="DOP853", rtol=1e-10, atol=1e-12
    )
    if not sol.success:
        raise FloquetInstabilityError(f"monodromy integration failed: {sol.message}")
    return sol.y[:, -1].reshape(2 * n, 2 * n)


def stability_check(model: Model, settings: Optional[SolverSettings] = None) -> StabilityReport:
    """
    Two-tier steady-state heuristic:
    (a) Floquet multipliers of the Markovian monodromy must lie inside 1 + 1e-9;
    (b) the Floquet block system must stay below condition 1e10 at sampled frequencies.
    Static models are judged by the poles of G0.
    """
    settings = settings or SolverSettings()
    if model.is_static:
        worst = float(np.max(static_poles(model).imag))
        stable = worst < 0
        return StabilityReport(
            stable=stable,
            markov_unstable=not stable,
            worst_multiplier=0.0,
            reason="" if stable else "undamped static mode",
        )

    multipliers = np.linalg.eigvals(monodromy(model))
    worst = float(np.max(np.abs(multipliers)))
    markov_unstable = worst > 1.0 + MULTIPLIER_TOL

    order = settings.order or default_order(model)
    kernel = FloquetKernel(model, order, settings)
    nu = normal_modes(model).frequencies
    omega_max = model_integration_limit(model, order, settings)
    sampled = np.concatenate([nu, np.linspace(omega_max / 16.0, omega_max / 2.0, 8)])
    max_cond = max(kernel.condition(w) for w in sampled)
    spectral_unstable = max_cond > CONDITION_LIMIT

    reasons = []
    if markov_unstable:
        reasons.append(f"Floquet multiplier {worst:.6g} outside unit circle")
    if spectral_unstable:
        reasons.append(f"block condition number {max_cond:.3e}")
    if reasons:
        logger.info(f"✗ Unstable at omega_d={model.network.omega_d:.6g}: {'; '.join(reasons)}")
    return StabilityReport(
        stable=not (markov_unstable or spectral_unstable),
        markov_unstable=markov_unstable,
        spectral_unstable=spectral_unstable,
        worst_multiplier=worst,
        max_condition=max_cond,
        reason="; ".join(reasons),
    )
