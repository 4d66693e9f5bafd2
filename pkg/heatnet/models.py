"""
Data models for heatnet

Network and reservoir descriptions are immutable pydantic models; every
solver consumes them read-only. Numeric arrays are derived on demand via
``Model.arrays()``.
"""
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from heatnet.errors import NetworkValidationError, ParameterError

SYMMETRY_TOL = 1e-12


class Units(BaseModel):
    """Unit system: hbar = k_B = 1, frequencies in units of omega0"""
    model_config = ConfigDict(frozen=True)

    hbar: float = Field(default=1.0, description="Reduced Planck constant")
    k_b: float = Field(default=1.0, description="Boltzmann constant")
    omega0: float = Field(default=1.0, gt=0, description="Reference frequency")

    @model_validator(mode="after")
    def natural_units(self) -> "Units":
        if self.hbar != 1.0 or self.k_b != 1.0:
            raise ValueError("only natural units (hbar = k_B = 1) are supported")
        return self


class DriveHarmonic(BaseModel):
    """One Fourier component V_k of the periodic potential"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., description="Harmonic index (nonzero)")
    real: List[List[float]] = Field(..., description="Real part of V_k, row-major")
    imag: Optional[List[List[float]]] = Field(default=None, description="Imaginary part of V_k")

    @field_validator("k")
    @classmethod
    def nonzero_index(cls, v: int) -> int:
        if v == 0:
            raise ValueError("harmonic index must be nonzero; the static part belongs in v0")
        return v

    @model_validator(mode="after")
    def matching_shapes(self) -> "DriveHarmonic":
        re = np.asarray(self.real, dtype=float)
        if re.ndim != 2 or re.shape[0] != re.shape[1]:
            raise ValueError(f"harmonic {self.k} must be a square matrix")
        if self.imag is not None and np.asarray(self.imag, dtype=float).shape != re.shape:
            raise ValueError(f"harmonic {self.k}: real and imaginary parts differ in shape")
        return self

    @property
    def matrix(self) -> np.ndarray:
        re = np.asarray(self.real, dtype=float)
        im = np.zeros_like(re) if self.imag is None else np.asarray(self.imag, dtype=float)
        return re + 1j * im

    @classmethod
    def from_matrix(cls, k: int, matrix: np.ndarray) -> "DriveHarmonic":
        matrix = np.asarray(matrix, dtype=complex)
        imag = matrix.imag.tolist() if np.any(matrix.imag) else None
        return cls(k=k, real=matrix.real.tolist(), imag=imag)


class NetworkSpec(BaseModel):
    """Harmonic network: masses, static potential and periodic drive"""
    model_config = ConfigDict(frozen=True)

    masses: List[float] = Field(default_factory=list, description="Oscillator masses (default 1)")
    v0: List[List[float]] = Field(..., description="Static potential matrix, row-major")
    drive_harmonics: List[DriveHarmonic] = Field(default_factory=list, description="Sparse harmonics V_k")
    omega_d: Optional[float] = Field(default=None, description="Drive angular frequency")

    @model_validator(mode="before")
    @classmethod
    def complete_defaults(cls, data: Any) -> Any:
        """Fill unit masses and the conjugate partner V_-k = V_k^dagger of every harmonic"""
        if not isinstance(data, dict):
            return data
        data = dict(data)
        v0 = data.get("v0")
        if not data.get("masses") and v0 is not None:
            data["masses"] = [1.0] * len(v0)
        harmonics = [
            h.model_dump() if isinstance(h, DriveHarmonic) else dict(h)
            for h in data.get("drive_harmonics") or []
        ]
        present = {int(h["k"]) for h in harmonics}
        for h in list(harmonics):
            k = int(h["k"])
            if -k in present:
                continue
            re = np.asarray(h["real"], dtype=float)
            im = np.zeros_like(re) if h.get("imag") is None else np.asarray(h["imag"], dtype=float)
            harmonics.append({
                "k": -k,
                "real": re.T.tolist(),
                "imag": (-im.T).tolist() if np.any(im) else None,
            })
            present.add(-k)
        harmonics.sort(key=lambda h: int(h["k"]))
        data["drive_harmonics"] = harmonics
        return data

    @model_validator(mode="after")
    def check_network(self) -> "NetworkSpec":
        v0 = np.asarray(self.v0, dtype=float)
        if v0.ndim != 2 or v0.shape[0] != v0.shape[1] or v0.shape[0] == 0:
            raise ValueError("v0 must be a nonempty square matrix")
        if not np.all(np.isfinite(v0)):
            raise ValueError("v0 must be finite")
        n = v0.shape[0]
        scale = max(1.0, float(np.max(np.abs(v0))))
        if np.max(np.abs(v0 - v0.T)) > SYMMETRY_TOL * scale:
            raise ValueError("v0 must be symmetric")
        if len(self.masses) != n:
            raise ValueError(f"expected {n} masses, got {len(self.masses)}")
        if any(m <= 0 for m in self.masses):
            raise ValueError("masses must be strictly positive")

        if self.omega_d is not None and self.omega_d <= 0:
            raise ValueError("omega_d must be positive")
        if bool(self.drive_harmonics) != (self.omega_d is not None):
            raise ValueError("a network is static exactly when it has no harmonics and no omega_d")

        indices = [h.k for h in self.drive_harmonics]
        if len(set(indices)) != len(indices):
            raise ValueError("duplicate harmonic index")
        harmonics = {h.k: h.matrix for h in self.drive_harmonics}
        for k, vk in harmonics.items():
            if vk.shape != (n, n):
                raise ValueError(f"harmonic {k} has shape {vk.shape}, expected {(n, n)}")
            partner = harmonics[-k]
            tol = SYMMETRY_TOL * max(1.0, float(np.max(np.abs(vk))))
            if np.max(np.abs(partner - vk.conj().T)) > tol:
                raise ValueError(f"harmonic {-k} must equal the conjugate transpose of harmonic {k}")
            if np.max(np.abs(vk - vk.T)) > tol:
                raise ValueError(f"harmonic {k} must be symmetric for a real potential")
        return self

    @property
    def size(self) -> int:
        return len(self.v0)

    @property
    def is_static(self) -> bool:
        return not self.drive_harmonics

    @property
    def drive_order(self) -> int:
        """Largest |k| among stored harmonics"""
        return max((abs(h.k) for h in self.drive_harmonics), default=0)

    @property
    def period(self) -> Optional[float]:
        return None if self.omega_d is None else 2.0 * np.pi / self.omega_d

    def harmonics(self) -> Dict[int, np.ndarray]:
        return {h.k: h.matrix for h in self.drive_harmonics}

    def potential_at(self, t: float) -> np.ndarray:
        """V(t) = V0 + sum_k V_k exp(i k omega_d t), real symmetric"""
        v = np.asarray(self.v0, dtype=float).astype(complex)
        for k, vk in self.harmonics().items():
            v = v + vk * np.exp(1j * k * self.omega_d * t)
        return v.real

    def potential_rate_at(self, t: float) -> np.ndarray:
        """Time derivative of V(t)"""
        n = self.size
        v = np.zeros((n, n), dtype=complex)
        for k, vk in self.harmonics().items():
            v = v + 1j * k * self.omega_d * vk * np.exp(1j * k * self.omega_d * t)
        return v.real


class BathSpec(BaseModel):
    """Ohmic reservoir attached to one node"""
    model_config = ConfigDict(frozen=True)

    node: int = Field(..., ge=0, description="Attachment node index")
    temperature: float = Field(..., ge=0, description="Temperature in units of hbar*omega0/k_B")
    gamma: float = Field(..., gt=0, description="Dissipation strength")
    cutoff: float = Field(..., gt=0, description="Lorentz-Drude cutoff")


@dataclass(frozen=True, eq=False)
class ModelArrays:
    """Dense numeric view of a Model"""
    masses: np.ndarray
    v0: np.ndarray
    harmonics: Dict[int, np.ndarray]
    omega_d: Optional[float]
    nodes: np.ndarray
    temperatures: np.ndarray
    gammas: np.ndarray
    cutoffs: np.ndarray

    @property
    def size(self) -> int:
        return self.v0.shape[0]

    @property
    def n_baths(self) -> int:
        return len(self.nodes)


class Model(BaseModel):
    """Network plus its ordered reservoirs"""
    model_config = ConfigDict(frozen=True)

    network: NetworkSpec
    baths: List[BathSpec] = Field(default_factory=list)
    units: Units = Field(default_factory=Units)

    @model_validator(mode="after")
    def check_baths(self) -> "Model":
        nodes = [b.node for b in self.baths]
        if len(set(nodes)) != len(nodes):
            raise ValueError("at most one bath per node")
        for node in nodes:
            if node >= self.network.size:
                raise ValueError(f"bath node {node} outside network of size {self.network.size}")
        return self

    @property
    def is_static(self) -> bool:
        return self.network.is_static

    def arrays(self) -> ModelArrays:
        return ModelArrays(
            masses=np.asarray(self.network.masses, dtype=float),
            v0=np.asarray(self.network.v0, dtype=float),
            harmonics=self.network.harmonics(),
            omega_d=self.network.omega_d,
            nodes=np.array([b.node for b in self.baths], dtype=int),
            temperatures=np.array([b.temperature for b in self.baths], dtype=float),
            gammas=np.array([b.gamma for b in self.baths], dtype=float),
            cutoffs=np.array([b.cutoff for b in self.baths], dtype=float),
        )

    def _rebuild(self, network: Optional[Dict[str, Any]] = None, baths: Optional[List[Dict[str, Any]]] = None) -> "Model":
        data = self.model_dump()
        if network is not None:
            data["network"] = network
        if baths is not None:
            data["baths"] = baths
        try:
            return Model.model_validate(data)
        except ValidationError as e:
            raise NetworkValidationError(f"invalid network: {e.errors()[0]['msg']}") from e

    def with_temperatures(self, temperatures: Sequence[float]) -> "Model":
        if len(temperatures) != len(self.baths):
            raise ParameterError(f"expected {len(self.baths)} temperatures")
        baths = [dict(b.model_dump(), temperature=float(t)) for b, t in zip(self.baths, temperatures)]
        return self._rebuild(baths=baths)

    def swapped(self) -> "Model":
        """Reversed configuration: temperatures of the first two baths exchanged"""
        if len(self.baths) < 2:
            raise ParameterError("reversal needs at least two baths")
        temps = [b.temperature for b in self.baths]
        temps[0], temps[1] = temps[1], temps[0]
        return self.with_temperatures(temps)

    def static_part(self) -> "Model":
        network = self.network.model_dump()
        network.update(drive_harmonics=[], omega_d=None)
        return self._rebuild(network=network)

    def scaled_drive(self, factor: float) -> "Model":
        """Multiply every drive harmonic by ``factor``"""
        network = self.network.model_dump()
        network["drive_harmonics"] = [
            DriveHarmonic.from_matrix(h.k, factor * h.matrix).model_dump()
            for h in self.network.drive_harmonics
        ]
        return self._rebuild(network=network)

    def coupling(self) -> float:
        """Coupling c0 between the nodes of the first two baths (V0[a, b] = -c0)"""
        a, b = self.baths[0].node, self.baths[1].node
        return -float(self.network.v0[a][b])

    def retuned(self, omega_d: Optional[float] = None, c0: Optional[float] = None) -> "Model":
        """Copy with a new drive frequency and/or a new coupling between the first two bath nodes"""
        network = self.network.model_dump()
        if omega_d is not None:
            if self.network.is_static:
                raise ParameterError("cannot set omega_d on a static network")
            network["omega_d"] = float(omega_d)
        if c0 is not None:
            if len(self.baths) < 2:
                raise ParameterError("coupling retune needs two baths")
            a, b = self.baths[0].node, self.baths[1].node
            e = np.zeros(self.network.size)
            e[a], e[b] = 1.0, -1.0
            v0 = np.asarray(self.network.v0, dtype=float) + (float(c0) - self.coupling()) * np.outer(e, e)
            network["v0"] = v0.tolist()
        return self._rebuild(network=network)


def two_oscillator_model(
    omega1: float,
    omega2: float,
    c0: float,
    v1: float = 0.0,
    omega_d: Optional[float] = None,
    t1: float = 1.2,
    t2: float = 1.0,
    gamma: float = 0.01,
    cutoff: float = 10.0,
) -> Model:
    """
    Reference two-node network with a bath on each node.

    V0 = [[w1^2 + c0, -c0], [-c0, w2^2 + c0]] and, when driven,
    V_{+1} = V_{-1} = v1 * (projector on node 0).
    """
    v0 = [[omega1 ** 2 + c0, -c0], [-c0, omega2 ** 2 + c0]]
    harmonics: List[Dict[str, Any]] = []
    if omega_d is not None:
        drive = [[float(v1), 0.0], [0.0, 0.0]]
        harmonics = [{"k": 1, "real": drive}, {"k": -1, "real": drive}]
    network = NetworkSpec(v0=v0, drive_harmonics=harmonics, omega_d=omega_d)
    baths = [
        BathSpec(node=0, temperature=t1, gamma=gamma, cutoff=cutoff),
        BathSpec(node=1, temperature=t2, gamma=gamma, cutoff=cutoff),
    ]
    return Model(network=network, baths=baths)


# Solver settings
class InstabilityPolicy(str, Enum):
    """What sweeps do with points without a steady state"""
    SENTINEL = "sentinel"
    RAISE = "raise"


class OracleSettings(BaseModel):
    """Discrete-bath simulation parameters"""
    model_config = ConfigDict(extra="forbid")

    m_modes: Optional[int] = Field(default=None, ge=50, description="Modes per bath (auto when unset)")
    omega_max: Optional[float] = Field(default=None, gt=0, description="Bath frequency cutoff (default 3 * max cutoff)")
    dt: Optional[float] = Field(default=None, gt=0, description="Integrator step for driven runs")
    sample_dt: float = Field(default=0.1, gt=0, description="Sampling interval")
    transient: Optional[float] = Field(default=None, gt=0, description="Discarded transient (default 5/gamma)")
    window: Optional[float] = Field(default=None, gt=0, description="Averaging window (default max(20 periods, 10/gamma))")
    system_init: Literal["ground", "thermal"] = Field(default="ground", description="Initial system state")
    mode_safety: float = Field(default=1.1, ge=1.0, description="Recurrence-time margin for automatic mode counts")


class SolverSettings(BaseModel):
    """Numerical settings shared by the spectral solvers"""
    model_config = ConfigDict(extra="forbid")

    order: Optional[int] = Field(default=None, ge=1, description="Floquet truncation K (default max harmonic + 3)")
    auto_order: bool = Field(default=True, description="Escalate K until currents converge")
    max_order: int = Field(default=12, ge=1, description="Largest K tried by auto escalation")
    order_tolerance: float = Field(default=1e-6, gt=0, description="Relative change accepted between K and K+2")
    omega_max: Optional[float] = Field(default=None, gt=0, description="Integration half-width override")
    quad_rel_tol: float = Field(default=1e-7, gt=0, description="Relative quadrature tolerance")
    quad_abs_tol: float = Field(default=1e-13, ge=0, description="Absolute quadrature tolerance")
    quad_limit: int = Field(default=20000, ge=10, description="Maximum number of quadrature intervals")
    quad_workers: int = Field(default=1, ge=1, description="Threads evaluating quadrature panels")
    keep_real_susceptibility: bool = Field(default=False, description="Keep the renormalized Re chi in G0")
    check_stability: bool = Field(default=True, description="Run the stability heuristic before driven solves")
    instability_policy: InstabilityPolicy = Field(default=InstabilityPolicy.SENTINEL)
    control_bath: int = Field(default=2, ge=0, description="Bath index of the transistor control terminal")
    fd_step: Optional[float] = Field(default=None, gt=0, description="Initial finite-difference step")
    oracle: OracleSettings = Field(default_factory=OracleSettings)


# Reports
class CurrentsReport(BaseModel):
    """Averaged steady-state currents, one entry per bath"""
    driven: bool
    temperatures: List[float]
    heat_currents: List[float] = Field(..., description="Heat current into the network from each bath")
    local_work_rates: List[float] = Field(..., description="Work rate assigned to each bath")
    work_rate: float = Field(..., description="Total averaged work rate")
    quasi_currents: List[float] = Field(..., description="Heat current plus local work rate")
    first_law_residual: float = Field(..., description="sum of heat currents plus work rate")
    quad_error: float = Field(default=0.0, description="Quadrature error estimate")
    tail_bound: float = Field(default=0.0, description="Estimate of the truncated tails")
    omega_max: float = Field(default=0.0, description="Integration half-width")
    order: Optional[int] = Field(default=None, description="Floquet truncation used")
    order_converged: bool = Field(default=True)

    @property
    def scale(self) -> float:
        return max([abs(q) for q in self.heat_currents] + [abs(self.work_rate)])


class StabilityReport(BaseModel):
    """Two-tier steady-state existence heuristic"""
    stable: bool
    markov_unstable: bool = False
    spectral_unstable: bool = False
    worst_multiplier: float = Field(default=0.0, description="Largest Floquet multiplier modulus")
    max_condition: float = Field(default=0.0, description="Largest block-system condition number sampled")
    reason: str = ""


class RectificationPoint(BaseModel):
    """Forward/reversed currents and rectification at one (omega_d, c0)"""
    omega_d: float
    c0: float
    q_fwd: float
    q_rev: float
    r_full: float
    r_quasi: float
    w_fwd: float = float("nan")
    w_rev: float = float("nan")
    quasi_fwd: float = float("nan")
    quasi_rev: float = float("nan")
    stable: bool = True
    reason: str = ""

    @model_validator(mode="after")
    def coefficient_bounds(self) -> "RectificationPoint":
        for value in (self.r_full, self.r_quasi):
            if np.isfinite(value) and not -1e-12 <= value <= 2.0 + 1e-12:
                raise ValueError(f"rectification coefficient {value} outside [0, 2]")
        return self


class AmplificationPoint(BaseModel):
    """Transistor amplification factors at one control value"""
    control: float = Field(..., description="omega_d (dynamic) or T3 (static)")
    e_dot: float = Field(..., description="Control energy flux")
    a1: float
    a2: float
    derivative_step: float
    q1: float = float("nan")
    q2: float = float("nan")
    residual: float = Field(default=float("nan"), description="|a1 + a2 + 1|")
    analytic_a1: Optional[float] = None
    analytic_a2: Optional[float] = None
    reason: str = ""


class ResonanceLine(BaseModel):
    """Drive frequency where two normal modes can exchange energy"""
    kind: Literal["asymmetric", "work"]
    i: int
    j: int
    combination: Literal["sum", "difference"]
    omega_d: float


class WorkReservoirReport(BaseModel):
    """Static three-bath network with the third bath acting as work source"""
    heat_currents: List[float]
    heat_currents_reversed: List[float]
    local_work_rates: List[float]
    local_work_rates_reversed: List[float]
    quasi_currents: List[float]
    quasi_currents_reversed: List[float]
    r_full: float
    r_quasi: float


class OracleComparison(BaseModel):
    """Discrete-bath simulation against spectral currents"""
    oracle_commutator: List[float]
    oracle_bath_energy: List[float]
    spectral: List[float]
    oracle_work_rate: float
    spectral_work_rate: float
    deviation_spectral: float = Field(..., description="max |oracle - spectral| / max |spectral|")
    deviation_definitions: float = Field(..., description="max |Q - Q'| / max |Q|")
    chunk_spread: float
    inconclusive: bool
    m_modes: int
    t_end: float
    window_start: float
