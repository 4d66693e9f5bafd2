"""
Command evaluation shared by the CLI and sweeps.

Every command turns one ``RunConfig`` into table rows plus a JSON report.
``sweep`` evaluates a command over the config's sweep axes, in parallel
when asked, and always returns rows in row-major grid order.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from heatnet.config import RunConfig, validate_run_config
from heatnet.errors import HeatnetError, ParameterError
from heatnet.floquet_solver import averaged_currents, stability_check
from heatnet.metrics import (
    amplification_dynamic,
    amplification_static,
    rectification_point,
    resonance_ridges,
)
from heatnet.oracle import oracle_compare, run_oracle
from heatnet.static_solver import static_currents
from heatnet.store import ResultTable, versions
from heatnet.sweep import SweepRunner

logger = logging.getLogger(__name__)

NAN = float("nan")

STATIC_COLUMNS = ["bath", "node", "temperature", "heat_current", "quad_error", "reason"]
DRIVEN_COLUMNS = [
    "bath", "node", "temperature", "heat_current", "local_work_rate", "quasi_current",
    "work_rate", "first_law_residual", "order", "quad_error", "reason",
]
MAP_COLUMNS = ["omega_d", "c0", "q_fwd", "q_rev", "r_full", "r_quasi", "stable", "reason"]
QUASI_MAP_COLUMNS = ["omega_d", "c0", "quasi_fwd", "quasi_rev", "w_fwd", "w_rev", "r_quasi", "r_full", "stable", "reason"]
DYNAMIC_COLUMNS = ["omega_d", "e_dot", "q1", "q2", "a1", "a2", "residual", "derivative_step", "reason"]
STATIC_TRANSISTOR_COLUMNS = [
    "t3", "e_dot", "q1", "q2", "a1", "a2", "analytic_a1", "analytic_a2", "residual", "derivative_step", "reason",
]
STABILITY_COLUMNS = [
    "omega_d", "c0", "stable", "markov_unstable", "spectral_unstable", "worst_multiplier", "max_condition", "reason",
]
ORACLE_COLUMNS = ["bath", "node", "oracle_commutator", "oracle_bath_energy", "spectral", "reason"]
RIDGE_COLUMNS = ["c0", "kind", "i", "j", "combination", "omega_d"]


@dataclass
class CommandOutput:
    rows: List[Dict[str, Any]]
    report: Dict[str, Any]
    extras: Dict[str, ResultTable] = field(default_factory=dict)


def _identity(cfg: RunConfig) -> Dict[str, float]:
    """Grid coordinates of a config, read without building the model"""
    out = {"omega_d": NAN if cfg.model.omega_d is None else float(cfg.model.omega_d), "c0": NAN, "t3": NAN}
    if cfg.model.two_oscillator is not None:
        out["c0"] = float(cfg.model.two_oscillator.c0)
    elif len(cfg.baths) >= 2 and cfg.model.v0 is not None:
        a, b = cfg.baths[0].node, cfg.baths[1].node
        if max(a, b) < len(cfg.model.v0):
            out["c0"] = -float(cfg.model.v0[a][b])
    control = cfg.solver.control_bath
    if control < len(cfg.baths):
        out["t3"] = float(cfg.baths[control].temperature)
    return out


def _static_currents(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    if not model.is_static:
        logger.info("Drive ignored for static currents")
        model = model.static_part()
    report = static_currents(model, cfg.solver)
    rows = [
        dict(bath=i, node=b.node, temperature=b.temperature, heat_current=q, quad_error=report.quad_error, reason="")
        for i, (b, q) in enumerate(zip(model.baths, report.heat_currents))
    ]
    return CommandOutput(rows=rows, report=report.model_dump())


def _driven_currents(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    if model.is_static:
        raise ParameterError("driven-currents needs omega_d and drive harmonics")
    report = averaged_currents(model, settings=cfg.solver)
    rows = []
    for i, b in enumerate(model.baths):
        rows.append(dict(
            bath=i,
            node=b.node,
            temperature=b.temperature,
            heat_current=report.heat_currents[i],
            local_work_rate=report.local_work_rates[i],
            quasi_current=report.quasi_currents[i],
            work_rate=report.work_rate,
            first_law_residual=report.first_law_residual,
            order=report.order,
            quad_error=report.quad_error,
            reason="",
        ))
    return CommandOutput(rows=rows, report=report.model_dump())


def _rectification(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    point = rectification_point(model, model.network.omega_d, model.coupling(), cfg.solver)
    row = point.model_dump()
    return CommandOutput(rows=[row], report=row)


def _stability(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    report = stability_check(model, cfg.solver)
    ident = _identity(cfg)
    row = dict(omega_d=ident["omega_d"], c0=ident["c0"], **report.model_dump())
    return CommandOutput(rows=[row], report=row)


def _transistor_dynamic(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    if model.is_static:
        raise ParameterError("transistor-dynamic needs a driven model")
    point = amplification_dynamic(model, float(model.network.omega_d), settings=cfg.solver)
    row = dict(point.model_dump(), omega_d=point.control)
    return CommandOutput(rows=[row], report=row)


def _transistor_static(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    if not model.is_static:
        model = model.static_part()
    point = amplification_static(model, settings=cfg.solver)
    row = dict(point.model_dump(), t3=point.control)
    return CommandOutput(rows=[row], report=row)


def _oracle(cfg: RunConfig) -> CommandOutput:
    model = cfg.build_model()
    trajectory = run_oracle(model, cfg.solver.oracle)
    comparison = oracle_compare(model, settings=cfg.solver, trajectory=trajectory)
    rows = [
        dict(
            bath=i,
            node=b.node,
            oracle_commutator=comparison.oracle_commutator[i],
            oracle_bath_energy=comparison.oracle_bath_energy[i],
            spectral=comparison.spectral[i],
            reason="inconclusive" if comparison.inconclusive else "",
        )
        for i, b in enumerate(model.baths)
    ]
    extras = {}
    if cfg.output.trajectory:
        records = trajectory.rows()
        extras["oracle-trajectory"] = ResultTable(columns=list(records[0]), rows=records)
    return CommandOutput(rows=rows, report=comparison.model_dump(), extras=extras)


@dataclass(frozen=True)
class Command:
    columns: List[str]
    run: Callable[[RunConfig], CommandOutput]
    per_bath: bool = False
    gridded: bool = False


COMMANDS: Dict[str, Command] = {
    "static-currents": Command(STATIC_COLUMNS, _static_currents, per_bath=True),
    "driven-currents": Command(DRIVEN_COLUMNS, _driven_currents, per_bath=True),
    "rectification-map": Command(MAP_COLUMNS, _rectification, gridded=True),
    "quasi-rectification-map": Command(QUASI_MAP_COLUMNS, _rectification, gridded=True),
    "transistor-dynamic": Command(DYNAMIC_COLUMNS, _transistor_dynamic, gridded=True),
    "transistor-static": Command(STATIC_TRANSISTOR_COLUMNS, _transistor_static, gridded=True),
    "oracle-check": Command(ORACLE_COLUMNS, _oracle, per_bath=True),
    "stability-map": Command(STABILITY_COLUMNS, _stability, gridded=True),
}


def sentinel_rows(command: str, cfg: RunConfig, reason: str) -> List[Dict[str, Any]]:
    """NaN rows carrying a reason code for a failed grid point"""
    spec = COMMANDS[command]
    ident = _identity(cfg)
    base: Dict[str, Any] = {c: NAN for c in spec.columns}
    base.update({k: v for k, v in ident.items() if k in base})
    base["reason"] = reason
    if "stable" in base:
        base["stable"] = False
    if not spec.per_bath:
        return [base]
    return [dict(base, bath=i, node=b.node, temperature=b.temperature) for i, b in enumerate(cfg.baths)]


def run_point(command: str, data: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Evaluate one grid point; solver failures become sentinel rows"""
    cfg = validate_run_config(data)
    try:
        return COMMANDS[command].run(cfg).rows
    except HeatnetError as e:
        logger.debug(f"✗ {command} point failed: {e}")
        return sentinel_rows(command, cfg, e.reason)


def metadata(cfg: RunConfig, tolerance: Optional[float] = None) -> Dict[str, Any]:
    meta: Dict[str, Any] = {"config_hash": cfg.config_hash(), "tolerance": cfg.solver.quad_rel_tol}
    meta.update(versions())
    if tolerance is not None and np.isfinite(tolerance):
        meta["achieved_error"] = format(tolerance, ".3g")
    return meta


def _achieved(rows: List[Dict[str, Any]]) -> Optional[float]:
    errors = [r["quad_error"] for r in rows if "quad_error" in r and np.isfinite(r["quad_error"])]
    return max(errors) if errors else None


def sweep(cfg: RunConfig, command: str, workers: int = 1) -> Tuple[ResultTable, Dict[str, Any], Dict[str, ResultTable]]:
    """
    Evaluate ``command`` on every point of the config's sweep grid.

    Without axes the command runs once and errors propagate; with axes a
    failing point yields sentinel rows and the sweep completes.

    Returns:
        table, JSON report, extra tables
    """
    if command not in COMMANDS:
        raise ParameterError(f"unknown command '{command}'")
    spec = COMMANDS[command]
    axes = cfg.sweep.axes
    columns = list(spec.columns)

    if not axes:
        output = spec.run(cfg)
        table = ResultTable(columns=columns, rows=output.rows, metadata=metadata(cfg, _achieved(output.rows)))
        return table, output.report, output.extras

    grid = cfg.grid()
    runner = SweepRunner(workers=workers)
    results = runner.run_sync(run_point, [(command, variant.model_dump(mode="json")) for _, variant in grid])
    rows: List[Dict[str, Any]] = []
    for (combo, _), point_rows in zip(grid, results):
        for row in point_rows:
            if not spec.gridded:
                row = dict({axis.path: value for axis, value in zip(axes, combo)}, **row)
            rows.append(row)
    if not spec.gridded:
        columns = [axis.path for axis in axes] + columns
    failed = sum(1 for r in rows if r.get("reason"))
    report: Dict[str, Any] = {
        "command": command,
        "points": len(grid),
        "rows": len(rows),
        "failed_rows": failed,
        "axes": [axis.model_dump() for axis in axes],
    }
    if "r_full" in columns:
        finite = [r["r_full"] for r in rows if np.isfinite(r.get("r_full", NAN))]
        report["max_r_full"] = max(finite) if finite else None
    if "a1" in columns:
        finite = [max(abs(r["a1"]), abs(r["a2"])) for r in rows if np.isfinite(r.get("a1", NAN))]
        report["max_abs_amplification"] = max(finite) if finite else None
    table = ResultTable(columns=columns, rows=rows, metadata=metadata(cfg, _achieved(rows)))
    logger.info(f"✓ Sweep {command}: {len(grid)} points, {failed} sentinel rows")
    return table, report, {}


def ridge_table(cfg: RunConfig) -> ResultTable:
    """nu_i +- nu_j lines for every swept coupling, clipped to the swept drive range"""
    model = cfg.build_model()
    c0_values = [model.coupling()]
    omega_range = None
    for axis in cfg.sweep.axes:
        if axis.path.endswith("c0"):
            c0_values = axis.values()
        elif axis.path == "model.omega_d":
            omega_range = (min(axis.start, axis.stop), max(axis.start, axis.stop))
    rows = resonance_ridges(model, c0_values)
    if omega_range is not None:
        rows = [r for r in rows if omega_range[0] <= r["omega_d"] <= omega_range[1]]
    return ResultTable(columns=RIDGE_COLUMNS, rows=rows, metadata={"config_hash": cfg.config_hash()})
