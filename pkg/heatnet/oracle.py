"""
Closed-system time-domain reference for the spectral solvers.

Every reservoir is replaced by a finite star of explicit oscillators on a
linear frequency grid. The Gaussian covariance of system plus baths is
propagated without noise: the static part of the dynamics is applied as
exact normal-mode rotations and the periodic drive as symmetric momentum
kicks composed to fourth order (Yoshida triple jump). Heat currents are
measured with both the commutator and the bath-energy definition.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy import integrate, linalg

from heatnet.errors import HorizonError, ParameterError, StepSizeError, UnstableNetworkError
from heatnet.floquet_solver import averaged_currents
from heatnet.models import BathSpec, CurrentsReport, Model, OracleComparison, OracleSettings, SolverSettings
from heatnet.spectra import ohmic
from heatnet.static_solver import normal_modes, static_currents

logger = logging.getLogger(__name__)

MIN_MODES = 50
STEP_RULE = 0.3
STEP_DEFAULT = 0.25
POSITIVITY_TOL = 1e-8
CHUNKS = 4
INCONCLUSIVE_SPREAD = 0.05

YOSHIDA_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
YOSHIDA_W0 = -(2.0 ** (1.0 / 3.0)) / (2.0 - 2.0 ** (1.0 / 3.0))


@dataclass(eq=False)
class BathModes:
    """Explicit oscillators (unit mass) standing in for one reservoir"""
    node: int
    frequencies: np.ndarray
    couplings: np.ndarray
    spacing: float

    @property
    def recurrence_time(self) -> float:
        return 2.0 * np.pi / self.spacing

    @property
    def counterterm(self) -> float:
        """sum_mu c_mu^2 / w_mu^2, added to the node so V0 stays the renormalized potential"""
        return float(np.sum(self.couplings ** 2 / self.frequencies ** 2))

    def reconstructed_density(self) -> np.ndarray:
        """Coarse-grained J(w_mu) = c_mu^2 / (2 w_mu dw)"""
        return self.couplings ** 2 / (2.0 * self.frequencies * self.spacing)


def discretize_bath(
    bath: BathSpec,
    m_modes: int,
    omega_max: float,
    gamma: Optional[float] = None,
    horizon: Optional[float] = None,
) -> BathModes:
    """
    Midpoint grid w_mu = (mu - 1/2) dw, dw = omega_max / m_modes, with
    c_mu^2 = 2 w_mu J(w_mu) dw.

    Args:
        gamma: overrides the bath's dissipation strength (0 decouples it)
        horizon: simulated time that must fit inside the recurrence time

    Raises:
        ParameterError: too few modes, or recurrence shorter than ``horizon``
    """
    if m_modes < MIN_MODES:
        raise ParameterError(f"need at least {MIN_MODES} modes per bath, got {m_modes}")
    if omega_max <= 0:
        raise ParameterError("omega_max must be positive")
    spacing = omega_max / m_modes
    if horizon is not None and 2.0 * np.pi / spacing < horizon:
        raise ParameterError(
            f"recurrence time {2.0 * np.pi / spacing:.4g} shorter than horizon {horizon:.4g}",
            m_modes=m_modes,
        )
    g = bath.gamma if gamma is None else float(gamma)
    if g < 0:
        raise ParameterError("gamma must be nonnegative")
    w = (np.arange(1, m_modes + 1) - 0.5) * spacing
    c = np.sqrt(2.0 * w * ohmic(g, bath.cutoff, w) * spacing)
    return BathModes(node=bath.node, frequencies=w, couplings=c, spacing=spacing)


@dataclass(eq=False)
class StarModel:
    """Network plus explicit bath oscillators as one closed quadratic system"""
    model: Model
    baths: List[BathModes]
    masses: np.ndarray
    potential: np.ndarray
    v0: np.ndarray
    harmonics: Dict[int, np.ndarray]
    omega_d: Optional[float]

    @property
    def size(self) -> int:
        return self.v0.shape[0]

    @property
    def dim(self) -> int:
        return self.potential.shape[0]

    def bath_slice(self, index: int) -> slice:
        start = self.size + sum(len(b.frequencies) for b in self.baths[:index])
        return slice(start, start + len(self.baths[index].frequencies))

    def drive_at(self, t: float) -> np.ndarray:
        """V(t) - V0 on the network block"""
        v = np.zeros((self.size, self.size), dtype=complex)
        for k, vk in self.harmonics.items():
            v = v + vk * np.exp(1j * k * self.omega_d * t)
        return v.real

    def drive_rate_at(self, t: float) -> np.ndarray:
        v = np.zeros((self.size, self.size), dtype=complex)
        for k, vk in self.harmonics.items():
            v = v + 1j * k * self.omega_d * vk * np.exp(1j * k * self.omega_d * t)
        return v.real


def star_model(
    model: Model,
    m_modes: int,
    omega_max: float,
    horizon: Optional[float] = None,
) -> StarModel:
    """Attach a discretized star of ``m_modes`` oscillators to every bath node"""
    arrays = model.arrays()
    baths = [discretize_bath(b, m_modes, omega_max, horizon=horizon) for b in model.baths]
    n = arrays.size
    dim = n + sum(len(b.frequencies) for b in baths)
    potential = np.zeros((dim, dim))
    potential[:n, :n] = arrays.v0
    masses = np.ones(dim)
    masses[:n] = arrays.masses
    offset = n
    for bath in baths:
        sl = slice(offset, offset + len(bath.frequencies))
        potential[sl, sl] = np.diag(bath.frequencies ** 2)
        potential[bath.node, sl] = -bath.couplings
        potential[sl, bath.node] = -bath.couplings
        potential[bath.node, bath.node] += bath.counterterm
        offset = sl.stop
    return StarModel(
        model=model,
        baths=baths,
        masses=masses,
        potential=potential,
        v0=arrays.v0,
        harmonics=arrays.harmonics,
        omega_d=arrays.omega_d,
    )


def _coth(x: np.ndarray) -> np.ndarray:
    return 1.0 / np.tanh(x)


def thermal_initial_covariance(
    star: StarModel,
    temperatures: Optional[Sequence[float]] = None,
    system_init: str = "ground",
) -> np.ndarray:
    """
    Product-state covariance in coordinates (x, p), shape (2D, 2D).

    Bath modes: <x x> = coth(w/2T)/(2w), <p p> = (w/2) coth(w/2T).
    The network starts in the ground state of V0 or, with
    ``system_init="thermal"``, in the thermal state at the mean bath temperature.
    """
    temps = [b.temperature for b in star.model.baths] if temperatures is None else list(temperatures)
    if len(temps) != len(star.baths):
        raise ParameterError(f"expected {len(star.baths)} temperatures")
    if any(t < 0 for t in temps):
        raise ParameterError("temperatures must be nonnegative")
    dim, n = star.dim, star.size
    sigma = np.zeros((2 * dim, 2 * dim))

    for i, (bath, temp) in enumerate(zip(star.baths, temps)):
        sl = star.bath_slice(i)
        w = bath.frequencies
        occ = np.ones_like(w) if temp == 0 else _coth(w / (2.0 * temp))
        idx = np.arange(sl.start, sl.stop)
        sigma[idx, idx] = occ / (2.0 * w)
        sigma[dim + idx, dim + idx] = 0.5 * w * occ

    if system_init not in ("ground", "thermal"):
        raise ParameterError(f"unknown system_init '{system_init}'")
    m = star.masses[:n]
    root = 1.0 / np.sqrt(m)
    nu2, vecs = linalg.eigh(star.v0 * np.outer(root, root))
    if nu2[0] <= 0:
        raise UnstableNetworkError("static potential is not positive definite")
    nu = np.sqrt(nu2)
    t_sys = float(np.mean(temps)) if system_init == "thermal" else 0.0
    occ = np.ones_like(nu) if t_sys == 0 else _coth(nu / (2.0 * t_sys))
    xx = (vecs * (occ / (2.0 * nu))) @ vecs.T
    pp = (vecs * (0.5 * nu * occ)) @ vecs.T
    sigma[:n, :n] = root[:, None] * xx * root[None, :]
    sigma[dim:dim + n, dim:dim + n] = np.sqrt(m)[:, None] * pp * np.sqrt(m)[None, :]
    return sigma


def symplectic_min_eigenvalue(sigma: np.ndarray) -> float:
    """Smallest eigenvalue of sigma + (i/2) J for (x, p) ordering"""
    d = sigma.shape[0] // 2
    omega = np.zeros((2 * d, 2 * d), dtype=complex)
    omega[:d, d:] = 0.5j * np.eye(d)
    omega[d:, :d] = -0.5j * np.eye(d)
    return float(np.min(np.linalg.eigvalsh(sigma + omega)))


class ModeFrame:
    """
    Normal-mode coordinates of the static closed system.

    y = U^T M^1/2 x and pi = U^T M^-1/2 p are canonical, and the static
    Hamiltonian is sum_k (pi_k^2 + nu_k^2 y_k^2) / 2.
    """

    def __init__(self, star: StarModel):
        self.star = star
        root = 1.0 / np.sqrt(star.masses)
        nu2, u = linalg.eigh(star.potential * np.outer(root, root))
        if nu2[0] <= 0:
            raise UnstableNetworkError(
                f"closed star model has a nonpositive mode {nu2[0]:.6g}", eigenvalue=float(nu2[0])
            )
        self.nu = np.sqrt(nu2)
        self.tx = root[:, None] * u
        self.tp = np.sqrt(star.masses)[:, None] * u
        self.dim = star.dim
        n = star.size
        self.system_x = self.tx[:n]

        xi = [bath.couplings @ self.tx[star.bath_slice(i)] for i, bath in enumerate(star.baths)]
        eta = [bath.couplings @ self.tp[star.bath_slice(i)] for i, bath in enumerate(star.baths)]
        self.rows_x = np.vstack([self.tx[:n]] + xi) if xi else self.tx[:n]
        self.rows_p = np.vstack([self.tp[:n]] + eta) if eta else self.tp[:n]

    def to_modes(self, sigma_z: np.ndarray) -> np.ndarray:
        d = self.dim
        ux = (self.tp).T  # U^T M^1/2
        up = (self.tx).T  # U^T M^-1/2
        out = np.empty_like(sigma_z)
        out[:d, :d] = ux @ sigma_z[:d, :d] @ ux.T
        out[:d, d:] = ux @ sigma_z[:d, d:] @ up.T
        out[d:, :d] = out[:d, d:].T
        out[d:, d:] = up @ sigma_z[d:, d:] @ up.T
        return out

    def rotate(self, sigma: np.ndarray, h: float) -> np.ndarray:
        """Exact static flow over time h"""
        if h == 0.0:
            return sigma
        d = self.dim
        c = np.cos(self.nu * h)
        s = np.sin(self.nu * h)
        a = s / self.nu
        b = -self.nu * s
        rows = np.empty_like(sigma)
        rows[:d] = c[:, None] * sigma[:d] + a[:, None] * sigma[d:]
        rows[d:] = b[:, None] * sigma[:d] + c[:, None] * sigma[d:]
        out = np.empty_like(sigma)
        out[:, :d] = rows[:, :d] * c[None, :] + rows[:, d:] * a[None, :]
        out[:, d:] = rows[:, :d] * b[None, :] + rows[:, d:] * c[None, :]
        return out

    def kick(self, sigma: np.ndarray, delta_v: np.ndarray, h: float) -> np.ndarray:
        """pi -> pi - h Z^T dV Z y, with Z the network rows of the position map"""
        d = self.dim
        z = self.system_x
        fh = -h * delta_v
        a, b = sigma[:d, :d], sigma[:d, d:]
        za = z @ a
        zb = z @ b
        az_f = za.T @ fh
        delta_b = z.T @ (fh @ zb)
        out = sigma.copy()
        out[:d, d:] = b + az_f @ z
        out[d:, :d] = out[:d, d:].T
        out[d:, d:] = sigma[d:, d:] + delta_b + delta_b.T + z.T @ (fh @ (za @ z.T) @ fh) @ z
        return out

    def observables(self, sigma: np.ndarray):
        """Covariances of (X, xi) and (P, eta)"""
        d = self.dim
        oxx = self.rows_x @ sigma[:d, :d] @ self.rows_x.T
        oxp = self.rows_x @ sigma[:d, d:] @ self.rows_p.T
        opp = self.rows_p @ sigma[d:, d:] @ self.rows_p.T
        return oxx, oxp, opp

    def closed_energy(self, sigma: np.ndarray) -> float:
        d = self.dim
        return 0.5 * float(np.sum(np.diag(sigma)[d:] + self.nu ** 2 * np.diag(sigma)[:d]))

    def bath_energies(self, sigma: np.ndarray) -> np.ndarray:
        d = self.dim
        out = []
        for i, bath in enumerate(self.star.baths):
            sl = self.star.bath_slice(i)
            tx, tp = self.tx[sl], self.tp[sl]
            xx = np.sum((tx @ sigma[:d, :d]) * tx, axis=1)
            pp = np.sum((tp @ sigma[d:, d:]) * tp, axis=1)
            out.append(0.5 * float(np.sum(pp + bath.frequencies ** 2 * xx)))
        return np.array(out)

    def to_coordinates(self, sigma: np.ndarray) -> np.ndarray:
        d = self.dim
        out = np.empty_like(sigma)
        out[:d, :d] = self.tx @ sigma[:d, :d] @ self.tx.T
        out[:d, d:] = self.tx @ sigma[:d, d:] @ self.tp.T
        out[d:, :d] = out[:d, d:].T
        out[d:, d:] = self.tp @ sigma[d:, d:] @ self.tp.T
        return out


@dataclass(eq=False)
class OracleTrajectory:
    """Sampled network covariance and current series"""
    times: np.ndarray
    sigma_xx: np.ndarray
    sigma_xp: np.ndarray
    sigma_pp: np.ndarray
    currents_commutator: np.ndarray
    currents_bath_energy: np.ndarray
    work_rate: np.ndarray
    system_energy: np.ndarray
    total_energy: np.ndarray
    window_start: float
    bath_energy_start: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bath_energy_end: np.ndarray = field(default_factory=lambda: np.zeros(0))
    min_symplectic_eigenvalue: float = 0.0

    @property
    def window(self) -> np.ndarray:
        return self.times >= self.window_start - 1e-9

    def average(self, series: np.ndarray) -> np.ndarray:
        """Trapezoidal window average"""
        mask = self.window
        t = self.times[mask]
        return integrate.trapezoid(series[mask], t, axis=0) / (t[-1] - t[0])

    def chunk_averages(self, series: np.ndarray, chunks: int = CHUNKS) -> np.ndarray:
        mask = self.window
        t, y = self.times[mask], series[mask]
        edges = np.linspace(0, len(t) - 1, chunks + 1).round().astype(int)
        return np.array([
            integrate.trapezoid(y[lo:hi + 1], t[lo:hi + 1], axis=0) / (t[hi] - t[lo])
            for lo, hi in zip(edges[:-1], edges[1:])
        ])

    @property
    def averages(self) -> Dict[str, np.ndarray]:
        return {
            "commutator": self.average(self.currents_commutator),
            "bath_energy": self.average(self.currents_bath_energy),
            "work_rate": self.average(self.work_rate),
        }

    def energy_drop_currents(self) -> np.ndarray:
        """-(E_R(end) - E_R(window start)) / window length"""
        span = self.times[-1] - self.window_start
        return -(self.bath_energy_end - self.bath_energy_start) / span

    def rows(self) -> List[Dict[str, float]]:
        """Flat records for CSV dumps"""
        out = []
        for s, t in enumerate(self.times):
            row = {"t": float(t)}
            for a in range(self.currents_commutator.shape[1]):
                row[f"q{a}"] = float(self.currents_commutator[s, a])
                row[f"q{a}_bath"] = float(self.currents_bath_energy[s, a])
            row["work_rate"] = float(self.work_rate[s])
            row["system_energy"] = float(self.system_energy[s])
            row["xx00"] = float(self.sigma_xx[s, 0, 0])
            row["pp00"] = float(self.sigma_pp[s, 0, 0])
            out.append(row)
        return out


def max_step_rate(star: StarModel) -> float:
    """max(nu_max, k_max omega_d) of the network; bath modes are rotated exactly"""
    nu_max = float(np.max(normal_modes(star.model).frequencies))
    if star.omega_d is None:
        return nu_max
    return max(nu_max, max(abs(k) for k in star.harmonics) * star.omega_d)


def propagate(
    star: StarModel,
    sigma0: np.ndarray,
    t_end: float,
    dt: Optional[float] = None,
    sample_dt: float = 0.1,
    window_start: float = 0.0,
) -> OracleTrajectory:
    """
    Propagate the closed-system covariance from t = 0 to ``t_end``.

    Static systems are advanced sample to sample by exact rotations.
    Driven systems take fourth-order composed steps of size ``dt``
    (rounded down so an integer number fits into ``sample_dt``).

    Raises:
        HorizonError: t_end beyond the shortest bath recurrence time
        StepSizeError: dt max(nu_max, k_max omega_d) > 0.3, or lost positivity
    """
    recurrence = min((b.recurrence_time for b in star.baths), default=np.inf)
    if t_end > recurrence:
        raise HorizonError(f"t_end {t_end:.4g} exceeds recurrence time {recurrence:.4g}", recurrence=recurrence)
    driven = star.omega_d is not None
    substeps = 1
    if driven:
        rate = max_step_rate(star)
        h = dt if dt is not None else STEP_DEFAULT / rate
        if h * rate > STEP_RULE + 1e-12:
            raise StepSizeError(f"dt={h:.4g} too large: dt * {rate:.4g} > {STEP_RULE}", dt=h)
        substeps = max(1, int(np.ceil(sample_dt / h - 1e-9)))
    h = sample_dt / substeps

    frame = ModeFrame(star)
    sigma = frame.to_modes(sigma0)
    n_samples = int(round(t_end / sample_dt)) + 1
    n, nb = star.size, len(star.baths)
    nodes = [b.node for b in star.baths]
    kappa = np.array([b.counterterm for b in star.baths])
    m_sys = star.masses[:n]

    times = np.arange(n_samples) * sample_dt
    sxx = np.empty((n_samples, n, n))
    sxp = np.empty((n_samples, n, n))
    spp = np.empty((n_samples, n, n))
    q_comm = np.empty((n_samples, nb))
    q_bath = np.empty((n_samples, nb))
    work = np.zeros(n_samples)
    e_sys = np.empty(n_samples)
    e_tot = np.empty(n_samples)
    e_bath_start = np.zeros(nb)
    worst = np.inf

    weights = (YOSHIDA_W1, YOSHIDA_W0, YOSHIDA_W1)
    clock = 0.0
    for s in range(n_samples):
        if s > 0:
            if not driven:
                sigma = frame.rotate(sigma, sample_dt)
            else:
                pending = 0.0
                for _ in range(substeps):
                    for w in weights:
                        tau = w * h
                        pending += tau / 2.0
                        sigma = frame.rotate(sigma, pending)
                        sigma = frame.kick(sigma, star.drive_at(clock + tau / 2.0), tau)
                        pending = tau / 2.0
                        clock += tau
                sigma = frame.rotate(sigma, pending)
            clock = times[s]

        t = times[s]
        oxx, oxp, opp = frame.observables(sigma)
        sxx[s], sxp[s], spp[s] = oxx[:n, :n], oxp[:n, :n], opp[:n, :n]
        for a, node in enumerate(nodes):
            q_comm[s, a] = (oxp[n + a, node] - kappa[a] * oxp[node, node]) / m_sys[node]
            q_bath[s, a] = -oxp[node, n + a]
        potential = star.v0.copy()
        if driven:
            delta_v = star.drive_at(t)
            potential = potential + delta_v
            work[s] = 0.5 * float(np.sum(star.drive_rate_at(t) * sxx[s]))
            e_tot[s] = frame.closed_energy(sigma) + 0.5 * float(np.sum(delta_v * sxx[s]))
        else:
            e_tot[s] = frame.closed_energy(sigma)
        e_sys[s] = 0.5 * float(np.sum(np.diag(spp[s]) / m_sys)) + 0.5 * float(np.sum(potential * sxx[s]))

        block = np.block([[sxx[s], sxp[s]], [sxp[s].T, spp[s]]])
        low = symplectic_min_eigenvalue(block)
        worst = min(worst, low)
        if low < -POSITIVITY_TOL * max(1.0, float(np.max(np.abs(block)))):
            raise StepSizeError(f"covariance lost positivity at t={t:.4g} ({low:.3e})", time=float(t))
        if nb and abs(t - window_start) < 0.5 * sample_dt:
            e_bath_start = frame.bath_energies(sigma)

    e_bath_end = frame.bath_energies(sigma) if nb else np.zeros(0)
    full_low = symplectic_min_eigenvalue(frame.to_coordinates(sigma))
    if full_low < -POSITIVITY_TOL * max(1.0, float(np.max(np.abs(sigma)))):
        raise StepSizeError(f"closed-system covariance lost positivity ({full_low:.3e})")
    logger.debug(f"Propagated {n_samples} samples to t={t_end:.4g} with {substeps} steps per sample")
    return OracleTrajectory(
        times=times,
        sigma_xx=sxx,
        sigma_xp=sxp,
        sigma_pp=spp,
        currents_commutator=q_comm,
        currents_bath_energy=q_bath,
        work_rate=work,
        system_energy=e_sys,
        total_energy=e_tot,
        window_start=window_start,
        bath_energy_start=e_bath_start,
        bath_energy_end=e_bath_end,
        min_symplectic_eigenvalue=min(worst, full_low),
    )


@dataclass
class OraclePlan:
    """Resolved simulation parameters"""
    m_modes: int
    omega_max: float
    transient: float
    window: float
    sample_dt: float
    dt: Optional[float]

    @property
    def t_end(self) -> float:
        return self.transient + self.window


def plan_oracle(model: Model, settings: Optional[OracleSettings] = None) -> OraclePlan:
    """
    Defaults: omega_max = 3 max cutoff, transient 5/gamma, window
    max(20 periods, 10/gamma) in whole periods split into four chunks,
    and enough modes that the recurrence time exceeds the run.
    """
    settings = settings or OracleSettings()
    if not model.baths:
        raise ParameterError("oracle needs at least one bath")
    arrays = model.arrays()
    gamma = float(np.min(arrays.gammas))
    omega_max = settings.omega_max or 3.0 * float(np.max(arrays.cutoffs))
    transient = settings.transient or 5.0 / gamma
    if model.is_static:
        unit = settings.sample_dt
        sample_dt = settings.sample_dt
        window = settings.window or 10.0 / gamma
    else:
        unit = float(model.network.period)
        sample_dt = unit / int(np.ceil(unit / settings.sample_dt - 1e-9))
        window = settings.window or max(20.0 * unit, 10.0 / gamma)
    transient = unit * np.ceil(transient / unit - 1e-9)
    window = CHUNKS * unit * np.ceil(window / (CHUNKS * unit) - 1e-9)
    t_end = transient + window
    m_modes = settings.m_modes or max(MIN_MODES, int(np.ceil(settings.mode_safety * omega_max * t_end / (2.0 * np.pi))))
    return OraclePlan(
        m_modes=m_modes,
        omega_max=omega_max,
        transient=float(transient),
        window=float(window),
        sample_dt=float(sample_dt),
        dt=settings.dt,
    )


def run_oracle(model: Model, settings: Optional[OracleSettings] = None) -> OracleTrajectory:
    """Build the star model, its initial state and propagate over the planned horizon"""
    settings = settings or OracleSettings()
    plan = plan_oracle(model, settings)
    star = star_model(model, plan.m_modes, plan.omega_max, horizon=plan.t_end)
    sigma0 = thermal_initial_covariance(star, system_init=settings.system_init)
    logger.info(
        f"Oracle run: {plan.m_modes} modes per bath up to {plan.omega_max:.4g}, "
        f"t_end={plan.t_end:.4g}, window from {plan.transient:.4g}"
    )
    return propagate(star, sigma0, plan.t_end, dt=plan.dt, sample_dt=plan.sample_dt, window_start=plan.transient)


def spectral_settings(settings: Optional[SolverSettings] = None) -> SolverSettings:
    """Solver settings matching the continuum limit of the star model"""
    settings = settings or SolverSettings()
    return settings.model_copy(update={"keep_real_susceptibility": True})


def oracle_compare(
    model: Model,
    spectral_report: Optional[CurrentsReport] = None,
    settings: Optional[SolverSettings] = None,
    trajectory: Optional[OracleTrajectory] = None,
) -> OracleComparison:
    """
    Window-averaged oracle currents against the spectral solution.

    The spectral report must be computed with the renormalized
    susceptibility (``spectral_settings``); it is computed here when omitted,
    as is the trajectory.
    """
    settings = settings or SolverSettings()
    if spectral_report is None:
        if model.is_static:
            spectral_report = static_currents(model, spectral_settings(settings))
        else:
            spectral_report = averaged_currents(model, settings=spectral_settings(settings))
    plan = plan_oracle(model, settings.oracle)
    if trajectory is None:
        trajectory = run_oracle(model, settings.oracle)
    averages = trajectory.averages
    q = averages["commutator"]
    q_bath = averages["bath_energy"]
    spectral = np.asarray(spectral_report.heat_currents)
    scale = max(float(np.max(np.abs(spectral))), 1e-300)
    q_scale = max(float(np.max(np.abs(q))), 1e-300)
    chunks = trajectory.chunk_averages(trajectory.currents_commutator)
    spread = float(np.max(np.ptp(chunks, axis=0))) / q_scale
    comparison = OracleComparison(
        oracle_commutator=q.tolist(),
        oracle_bath_energy=q_bath.tolist(),
        spectral=spectral.tolist(),
        oracle_work_rate=float(averages["work_rate"]),
        spectral_work_rate=spectral_report.work_rate,
        deviation_spectral=float(np.max(np.abs(q - spectral))) / scale,
        deviation_definitions=float(np.max(np.abs(q - q_bath))) / q_scale,
        chunk_spread=spread,
        inconclusive=spread > INCONCLUSIVE_SPREAD,
        m_modes=plan.m_modes,
        t_end=float(trajectory.times[-1]),
        window_start=trajectory.window_start,
    )
    mark = "✗" if comparison.inconclusive else "✓"
    logger.info(
        f"{mark} Oracle deviation {comparison.deviation_spectral:.3e} vs spectral, "
        f"{comparison.deviation_definitions:.3e} between definitions"
    )
    return comparison
