"""
heatnet CLI

    python -m cli.ctl --config config/reference.json --out results rectification-map
"""
import json
import logging
import sys
import time
from typing import Optional

import click
from pydantic import ValidationError

from heatnet.commands import ridge_table, sweep
from heatnet.config import RunConfig, Settings, load_run_config
from heatnet.errors import ConfigError, HeatnetError, NetworkValidationError, OutputError
from heatnet.store import ResultStore

logger = logging.getLogger(__name__)

PLOTS = {
    "rectification-map": ("omega_d", "c0", "r_full"),
    "quasi-rectification-map": ("omega_d", "c0", "r_quasi"),
    "stability-map": ("omega_d", "c0", "worst_multiplier"),
    "transistor-dynamic": ("omega_d", "a1", None),
    "transistor-static": ("t3", "a1", None),
}


def _fail(error: HeatnetError) -> None:
    click.echo(json.dumps(error.to_dict(), sort_keys=True), err=True)
    sys.exit(error.exit_code)


def _load(ctx: click.Context) -> RunConfig:
    path = ctx.obj["CONFIG_PATH"]
    if not path:
        raise ConfigError("--config is required")
    cfg = load_run_config(path)
    updates = {}
    if ctx.obj["TOLERANCE"] is not None:
        updates["solver"] = cfg.solver.model_copy(update={"quad_rel_tol": ctx.obj["TOLERANCE"]})
    output = {}
    if ctx.obj["OUT"]:
        output["directory"] = ctx.obj["OUT"]
    if ctx.obj["EMIT_GNUPLOT"]:
        output["emit_gnuplot"] = True
    if output:
        updates["output"] = cfg.output.model_copy(update=output)
    return cfg.model_copy(update=updates) if updates else cfg


def _execute(ctx: click.Context, command: str) -> None:
    started = time.perf_counter()
    try:
        cfg = _load(ctx)
        table, report, extras = sweep(cfg, command, workers=ctx.obj["WORKERS"])
        store = ResultStore(cfg.output.directory, precision=cfg.output.precision)
        if "csv" in cfg.output.formats:
            store.write_table(command, table)
            for name, extra in extras.items():
                store.write_table(name, extra)
            if command == "rectification-map":
                store.write_table("ridges", ridge_table(cfg))
        if "json" in cfg.output.formats:
            store.write_json(command, {"command": command, "config_hash": cfg.config_hash(), "report": report})
        if cfg.output.emit_gnuplot and command in PLOTS:
            x, y, z = PLOTS[command]
            store.write_gnuplot(command, table, x, y, z)
    except HeatnetError as e:
        _fail(e)
    except ValidationError as e:
        _fail(NetworkValidationError(str(e.errors()[0]["msg"])))
    except OSError as e:
        _fail(OutputError(str(e)))
    elapsed = time.perf_counter() - started
    click.echo(f"✓ {command}: {len(table)} rows in {elapsed:.1f}s -> {cfg.output.directory}", err=True)


@click.group()
@click.option("--config", "config_path", type=click.Path(), help="Run configuration (JSON or YAML)")
@click.option("--out", type=click.Path(file_okay=False), help="Output directory (overrides output.directory)")
@click.option("--workers", type=int, default=None, help="Parallel grid workers")
@click.option("--tolerance", type=float, default=None, help="Relative quadrature tolerance")
@click.option("--emit-gnuplot", is_flag=True, help="Write a gnuplot script next to each table")
@click.option("--log-level", default=None, help="Logging level (default from HEATNET_LOG_LEVEL)")
@click.pass_context
def cli(
    ctx: click.Context,
    config_path: Optional[str],
    out: Optional[str],
    workers: Optional[int],
    tolerance: Optional[float],
    emit_gnuplot: bool,
    log_level: Optional[str],
):
    """Steady-state heat transport in driven harmonic networks"""
    settings = Settings()
    level = (log_level or settings.log_level).upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        force=True,
    )
    ctx.ensure_object(dict)
    ctx.obj["CONFIG_PATH"] = config_path
    ctx.obj["OUT"] = out
    ctx.obj["WORKERS"] = workers or settings.workers
    ctx.obj["TOLERANCE"] = tolerance
    ctx.obj["EMIT_GNUPLOT"] = emit_gnuplot


@cli.command("static-currents")
@click.pass_context
def static_currents_cmd(ctx):
    """Steady-state currents of the undriven network"""
    _execute(ctx, "static-currents")


@cli.command("driven-currents")
@click.pass_context
def driven_currents_cmd(ctx):
    """Period-averaged currents and work rates"""
    _execute(ctx, "driven-currents")


@cli.command("rectification-map")
@click.pass_context
def rectification_map_cmd(ctx):
    """Rectification coefficient over (omega_d, c0); also writes ridges.csv"""
    _execute(ctx, "rectification-map")


@cli.command("quasi-rectification-map")
@click.pass_context
def quasi_rectification_map_cmd(ctx):
    """Rectification of the quasi-static currents over (omega_d, c0)"""
    _execute(ctx, "quasi-rectification-map")


@cli.command("transistor-dynamic")
@click.pass_context
def transistor_dynamic_cmd(ctx):
    """Dynamical amplification factors versus omega_d"""
    _execute(ctx, "transistor-dynamic")


@cli.command("transistor-static")
@click.pass_context
def transistor_static_cmd(ctx):
    """Static three-bath amplification factors versus T3"""
    _execute(ctx, "transistor-static")


@cli.command("oracle-check")
@click.pass_context
def oracle_check_cmd(ctx):
    """Discrete-bath simulation against the spectral currents"""
    _execute(ctx, "oracle-check")


@cli.command("stability-map")
@click.pass_context
def stability_map_cmd(ctx):
    """Steady-state heuristic over the sweep grid"""
    _execute(ctx, "stability-map")


if __name__ == "__main__":
    cli()
