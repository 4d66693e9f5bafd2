"""
Rectification coefficients, quasi-static currents, rectification maps and
thermal-transistor amplification factors.
"""
import logging
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from heatnet.errors import (
    BoundViolationError,
    HeatnetError,
    NoTransportError,
    ParameterError,
    TransistorUndefinedError,
)
from heatnet.floquet_solver import (
    FloquetKernel,
    converged_integral,
    default_order,
    ensure_steady_state,
    paired_currents,
)
from heatnet.models import (
    AmplificationPoint,
    CurrentsReport,
    InstabilityPolicy,
    Model,
    RectificationPoint,
    ResonanceLine,
    SolverSettings,
    WorkReservoirReport,
)
from heatnet.quadrature import integrate_spectrum
from heatnet.spectra import occupation
from heatnet.static_solver import (
    StaticKernel,
    check_damped,
    integrate_static,
    model_integration_limit,
    normal_modes,
    resonance_breakpoints,
    transistor_integrals,
)
from heatnet.sweep import SweepRunner

logger = logging.getLogger(__name__)

TRANSPORT_FLOOR = 1e-14
RESIDUAL_TARGET = 1e-4
BOUND_TOL = 1e-6
NAN = float("nan")


def rectification(q_fwd: float, q_rev: float) -> float:
    """
    R = |Q + Q^r| / max(|Q|, |Q^r|), in [0, 2].

    Raises:
        NoTransportError: if both currents are below the transport floor
    """
    scale = max(abs(q_fwd), abs(q_rev))
    if scale < TRANSPORT_FLOOR:
        raise NoTransportError("no transport: both currents vanish", q_fwd=q_fwd, q_rev=q_rev)
    return abs(q_fwd + q_rev) / scale


def quasi_currents(report: CurrentsReport) -> List[float]:
    """Heat current plus local work rate of every bath; equals the heat current for static reports"""
    return [q + w for q, w in zip(report.heat_currents, report.local_work_rates)]


def paired_reports(model: Model, settings: Optional[SolverSettings] = None) -> Tuple[CurrentsReport, CurrentsReport]:
    """Forward and reversed reports, integrated on shared nodes"""
    settings = settings or SolverSettings()
    if not model.is_static:
        return paired_currents(model, settings)
    fwd = [b.temperature for b in model.baths]
    rev = [b.temperature for b in model.swapped().baths]
    values, quad = integrate_static(model, [fwd, rev], settings)
    reports = []
    for temps, heat in zip((fwd, rev), values):
        reports.append(CurrentsReport(
            driven=False,
            temperatures=temps,
            heat_currents=heat.tolist(),
            local_work_rates=[0.0] * len(heat),
            work_rate=0.0,
            quasi_currents=heat.tolist(),
            first_law_residual=float(np.sum(heat)),
            quad_error=quad.error,
            tail_bound=quad.tail,
            omega_max=quad.omega_max,
        ))
    return reports[0], reports[1]


def _sentinel(omega_d: float, c0: float, reason: str) -> RectificationPoint:
    return RectificationPoint(
        omega_d=omega_d, c0=c0, q_fwd=NAN, q_rev=NAN, r_full=NAN, r_quasi=NAN, stable=False, reason=reason
    )


def rectification_point(
    template: Model,
    omega_d: Optional[float],
    c0: float,
    settings: Optional[SolverSettings] = None,
) -> RectificationPoint:
    """
    Forward and temperature-swapped currents of ``template`` retuned to
    (omega_d, c0). Solver failures become sentinel points unless the
    instability policy is ``raise``.
    """
    settings = settings or SolverSettings()
    wd = NAN if omega_d is None else float(omega_d)
    try:
        model = template.retuned(omega_d=omega_d, c0=c0)
        fwd, rev = paired_reports(model, settings)
        q_fwd, q_rev = fwd.heat_currents[0], rev.heat_currents[0]
        quasi_fwd, quasi_rev = quasi_currents(fwd)[0], quasi_currents(rev)[0]
        r_full = rectification(q_fwd, q_rev)
        try:
            r_quasi = rectification(quasi_fwd, quasi_rev)
        except NoTransportError:
            r_quasi = NAN
    except HeatnetError as e:
        if settings.instability_policy == InstabilityPolicy.RAISE:
            raise
        logger.debug(f"✗ Point omega_d={wd:.6g} c0={c0:.6g}: {e}")
        return _sentinel(wd, c0, e.reason)
    return RectificationPoint(
        omega_d=wd,
        c0=c0,
        q_fwd=q_fwd,
        q_rev=q_rev,
        r_full=r_full,
        r_quasi=r_quasi,
        w_fwd=fwd.work_rate,
        w_rev=rev.work_rate,
        quasi_fwd=quasi_fwd,
        quasi_rev=quasi_rev,
    )


def map_grid(
    omega_d_range: Tuple[float, float],
    c0_range: Tuple[float, float],
    resolution: Tuple[int, int],
) -> List[Tuple[float, float]]:
    """(omega_d, c0) pairs in row-major order, omega_d outermost"""
    if min(resolution) < 1:
        raise ParameterError("map resolution must be positive")
    if omega_d_range[0] <= 0 or c0_range[0] < 0:
        raise ParameterError("map ranges must be positive")
    wds = np.linspace(omega_d_range[0], omega_d_range[1], resolution[0])
    c0s = np.linspace(c0_range[0], c0_range[1], resolution[1])
    return [(float(w), float(c)) for w in wds for c in c0s]


def rectification_map(
    template: Model,
    omega_d_range: Tuple[float, float],
    c0_range: Tuple[float, float],
    resolution: Tuple[int, int],
    settings: Optional[SolverSettings] = None,
    workers: int = 1,
) -> List[RectificationPoint]:
    """Rectification over an (omega_d, c0) grid; never aborts on a single point"""
    if len(template.baths) != 2:
        raise ParameterError("rectification maps need a two-bath template")
    settings = settings or SolverSettings()
    grid = map_grid(omega_d_range, c0_range, resolution)
    runner = SweepRunner(workers=workers)
    points = runner.run_sync(rectification_point, [(template, w, c, settings) for w, c in grid])
    finite = [p.r_full for p in points if p.stable and np.isfinite(p.r_full)]
    logger.info(
        f"✓ Rectification map {resolution[0]}x{resolution[1]}: "
        f"{len(finite)} stable points, max R = {max(finite, default=NAN):.6g}"
    )
    return points


def _richardson(f: Callable[[float], np.ndarray], step: float) -> np.ndarray:
    """
    Central difference with one Richardson step.

    ``f(h)`` returns the samples at +h, -h, +h/2, -h/2 stacked along axis 0.
    """
    samples = f(step)
    d_h = (samples[0] - samples[1]) / (2.0 * step)
    d_half = (samples[2] - samples[3]) / step
    return (4.0 * d_half - d_h) / 3.0


def _amplification(
    derivative: Callable[[float], np.ndarray],
    step: float,
    control: int,
    min_step: float,
) -> Tuple[np.ndarray, float, float]:
    """
    Halve the step until the amplification factors satisfy the first law.

    ``derivative(h)`` returns d(currents)/d(control) with the control flux
    derivative at index ``control``.

    Returns:
        factors of the non-control terminals, residual and the accepted step
    """
    while True:
        d = derivative(step)
        d_flux = d[control]
        others = np.delete(d, control)
        if not np.isfinite(d_flux) or abs(d_flux) <= 1e-9 * max(float(np.max(np.abs(others))), 1e-300):
            raise TransistorUndefinedError("control flux does not depend on the control parameter", step=step)
        factors = others / d_flux
        residual = abs(float(np.sum(factors)) + 1.0)
        if residual < RESIDUAL_TARGET or step / 2.0 < min_step:
            if residual >= RESIDUAL_TARGET:
                logger.warning(f"✗ Amplification residual {residual:.2e} at step {step:.3e}")
            return factors, residual, step
        step /= 2.0


def amplification_dynamic(
    model: Model,
    omega_d: float,
    step: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> AmplificationPoint:
    """
    Dynamical amplification A_a = (dQ_a/d omega_d) / (dW/d omega_d).

    The four shifted models of each Richardson step are integrated on
    shared quadrature nodes, so sum_a Q_a + W = 0 holds for every sample.
    """
    settings = settings or SolverSettings()
    if model.is_static:
        raise ParameterError("dynamic amplification needs a driven model")
    centre = model.retuned(omega_d=omega_d)
    temps = [b.temperature for b in model.baths]
    nb = len(temps)
    order = settings.order or default_order(model)
    h0 = step or settings.fd_step or 1e-3 * omega_d
    # smaller steps stay inside [omega_d - h0, omega_d + h0]
    for wd in (omega_d - h0, omega_d, omega_d + h0):
        ensure_steady_state(centre.retuned(omega_d=wd), settings)
    cache: Dict[float, np.ndarray] = {}

    def samples(h: float) -> np.ndarray:
        shifted = [centre.retuned(omega_d=omega_d + s) for s in (h, -h, h / 2.0, -h / 2.0)]
        values, _, _, _ = converged_integral(shifted, [temps], settings, order)
        heat = values[:, 0, :nb]
        work = values[:, 0, nb:].sum(axis=1)
        out = np.column_stack([heat, work])
        cache[h] = out
        return out

    def derivative(h: float) -> np.ndarray:
        return _richardson(samples, h)

    factors, residual, used = _amplification(derivative, h0, nb, 1e-6 * h0)
    mid = 0.5 * (cache[used][2] + cache[used][3])
    point = AmplificationPoint(
        control=omega_d,
        e_dot=float(mid[nb]),
        a1=float(factors[0]),
        a2=float(factors[1]) if len(factors) > 1 else NAN,
        derivative_step=used,
        q1=float(mid[0]),
        q2=float(mid[1]) if nb > 1 else NAN,
        residual=residual,
    )
    logger.info(f"✓ Dynamic amplification at omega_d={omega_d:.6g}: A = ({point.a1:.6g}, {point.a2:.6g})")
    return point


def amplification_static(
    model3: Model,
    t3: Optional[float] = None,
    step: Optional[float] = None,
    settings: Optional[SolverSettings] = None,
) -> AmplificationPoint:
    """
    Static transistor factors A_a = (dQ_a/dT3) / (dQ3/dT3) by finite
    differences, alongside the analytic ratio -I_a3 / (I_13 + I_23).

    Raises:
        BoundViolationError: if some |A_a| exceeds 1 + 1e-6
    """
    settings = settings or SolverSettings()
    if not model3.is_static or len(model3.baths) != 3:
        raise ParameterError("static amplification needs a static three-bath model")
    control = settings.control_bath
    if control >= 3:
        raise ParameterError(f"control bath {control} does not exist")
    if t3 is not None:
        temps = [b.temperature for b in model3.baths]
        temps[control] = t3
        model3 = model3.with_temperatures(temps)
    base = [b.temperature for b in model3.baths]
    t_c = base[control]
    if t_c <= 0:
        raise ParameterError("control temperature must be positive")
    h0 = step or settings.fd_step or 1e-3 * t_c
    cache: Dict[float, np.ndarray] = {}

    def samples(h: float) -> np.ndarray:
        sets = []
        for s in (h, -h, h / 2.0, -h / 2.0, 0.0):
            temps = list(base)
            temps[control] = t_c + s
            sets.append(temps)
        values, _ = integrate_static(model3, sets, settings)
        cache[h] = values
        return values[:4]

    def derivative(h: float) -> np.ndarray:
        return _richardson(samples, h)

    factors, residual, used = _amplification(derivative, h0, control, 1e-6 * h0)
    if np.any(np.abs(factors) > 1.0 + BOUND_TOL):
        raise BoundViolationError(f"static amplification {factors.tolist()} exceeds 1", factors=str(factors.tolist()))

    integrals = transistor_integrals(model3, control, settings)
    analytic = -np.delete(integrals, control) / integrals[control]
    centre = cache[used][4]
    others = np.delete(centre, control)
    point = AmplificationPoint(
        control=t_c,
        e_dot=float(centre[control]),
        a1=float(factors[0]),
        a2=float(factors[1]),
        derivative_step=used,
        q1=float(others[0]),
        q2=float(others[1]),
        residual=residual,
        analytic_a1=float(analytic[0]),
        analytic_a2=float(analytic[1]),
    )
    logger.info(f"✓ Static amplification at T={t_c:.6g}: A = ({point.a1:.6g}, {point.a2:.6g})")
    return point


def asymmetry_numerator(model: Model, settings: Optional[SolverSettings] = None) -> float:
    """int (T_21 - T_12)(n_1 + n_2 + 1) dw, the part of Q + Q^r not explained by local work"""
    settings = settings or SolverSettings()
    if model.is_static:
        return 0.0
    check_damped(model)
    order = settings.order or default_order(model)
    kernel = FloquetKernel(model, order, settings)
    t1, t2 = model.baths[0].temperature, model.baths[1].temperature

    def density(w: float) -> np.ndarray:
        t, _, _ = kernel.transfer(w)
        return np.array([(t[1, 0] - t[0, 1]) * (occupation(t1, w) + occupation(t2, w) + 1.0)])

    omega_max = model_integration_limit(model, order, settings)
    result = integrate_spectrum(density, omega_max, resonance_breakpoints(model, order, omega_max), settings)
    return float(result.value[0])


def resonance_lines(model: Model, omega_range: Optional[Tuple[float, float]] = None) -> List[ResonanceLine]:
    """
    Drive frequencies nu_i +- nu_j > 0. Pairs with i != j open asymmetric
    channels; i = j only pumps work.
    """
    nu = normal_modes(model).frequencies
    lines = []
    for i in range(len(nu)):
        for j in range(i, len(nu)):
            kind = "work" if i == j else "asymmetric"
            lines.append(ResonanceLine(kind=kind, i=i, j=j, combination="sum", omega_d=float(nu[i] + nu[j])))
            if i != j:
                lines.append(ResonanceLine(
                    kind=kind, i=i, j=j, combination="difference", omega_d=float(abs(nu[j] - nu[i]))
                ))
    if omega_range is not None:
        lines = [l for l in lines if omega_range[0] <= l.omega_d <= omega_range[1]]
    return sorted(lines, key=lambda l: (l.omega_d, l.i, l.j))


def resonance_ridges(template: Model, c0_values: Sequence[float]) -> List[Dict[str, object]]:
    """Resonance lines recomputed for every coupling of a map"""
    rows = []
    for c0 in c0_values:
        try:
            lines = resonance_lines(template.retuned(c0=float(c0)))
        except HeatnetError as e:
            logger.debug(f"✗ No ridges at c0={c0:.6g}: {e}")
            continue
        for line in lines:
            rows.append(dict(c0=float(c0), **line.model_dump()))
    return rows


def principal_asymmetry(model: Model, omega: float, k: int, settings: Optional[SolverSettings] = None) -> float:
    """
    |G0(w - k wd)_21 G0(w)_11|^2 - |G0(w - k wd)_11 G0(w)_12|^2 for the
    driven node 1 and its partner 2; nonzero values mark channels where
    T_12 and T_21 differ at leading order.
    """
    if model.is_static:
        raise ParameterError("principal asymmetry needs a drive frequency")
    kernel = StaticKernel(model.static_part(), settings)
    a, b = model.baths[0].node, model.baths[1].node
    g_shift, _ = kernel.green(omega - k * float(model.network.omega_d))
    g, _ = kernel.green(omega)
    return float(abs(g_shift[b, a] * g[a, a]) ** 2 - abs(g_shift[a, a] * g[a, b]) ** 2)


def static_work_reservoir(model3: Model, settings: Optional[SolverSettings] = None) -> WorkReservoirReport:
    """
    Treat the control bath of a static three-bath network as a work source:
    W_a = int T0_ca (n_c - n_a) for the other baths. The quasi-currents
    Q_a + W_a reduce to the direct two-terminal exchange, so their
    rectification vanishes.
    """
    settings = settings or SolverSettings()
    if not model3.is_static or len(model3.baths) != 3:
        raise ParameterError("work-reservoir split needs a static three-bath model")
    control = settings.control_bath
    check_damped(model3)
    kernel = StaticKernel(model3, settings)
    fwd = [b.temperature for b in model3.baths]
    rev = [b.temperature for b in model3.swapped().baths]
    sets = np.array([fwd, rev])

    def density(w: float) -> np.ndarray:
        out = []
        heat = kernel.currents_density(w, sets).reshape(2, 3)
        t = kernel.transfer(w)
        for s, temps in enumerate(sets):
            n = np.array([occupation(temp, w) for temp in temps])
            work = t[control] * (n[control] - n)
            work[control] = 0.0
            out.append(np.concatenate([heat[s], work]))
        return np.concatenate(out)

    omega_max = model_integration_limit(model3, 0, settings)
    result = integrate_spectrum(density, omega_max, resonance_breakpoints(model3, 0, omega_max), settings)
    values = result.value.reshape(2, 6)
    heat_f, work_f = values[0, :3], values[0, 3:]
    heat_r, work_r = values[1, :3], values[1, 3:]
    quasi_f, quasi_r = heat_f + work_f, heat_r + work_r
    first = 0 if control != 0 else 1
    try:
        r_quasi = rectification(quasi_f[first], quasi_r[first])
    except NoTransportError:
        r_quasi = NAN
    return WorkReservoirReport(
        heat_currents=heat_f.tolist(),
        heat_currents_reversed=heat_r.tolist(),
        local_work_rates=work_f.tolist(),
        local_work_rates_reversed=work_r.tolist(),
        quasi_currents=quasi_f.tolist(),
        quasi_currents_reversed=quasi_r.tolist(),
        r_full=rectification(heat_f[first], heat_r[first]),
        r_quasi=r_quasi,
    )
