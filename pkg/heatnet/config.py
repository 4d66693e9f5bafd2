"""
Run configuration for heatnet.

A run is described by one JSON (or YAML) document with the sections
``model``, ``baths``, ``solver``, ``sweep`` and ``output``. Any key can be
overridden from the environment as ``HEATNET_<SECTION>__<KEY>``; environment
values win over the file and are deep-merged into it; integer parts index
lists, so ``HEATNET_BATHS__0__TEMPERATURE`` overrides the first bath only.
"""
import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import (
    BaseSettings,
    EnvSettingsSource,
    InitSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from heatnet.errors import ConfigError, NetworkValidationError
from heatnet.models import BathSpec, DriveHarmonic, Model, NetworkSpec, SolverSettings

logger = logging.getLogger(__name__)

MAX_AXES = 2
SCHEMA_ERRORS = {"extra_forbidden", "missing", "model_type", "list_type", "dict_type", "json_invalid"}


class Settings(BaseSettings):
    """Process-level settings"""
    model_config = SettingsConfigDict(env_prefix="HEATNET_", env_file=".env", extra="ignore", case_sensitive=False)

    log_level: str = "WARNING"
    workers: int = Field(default=1, ge=1)
    float_precision: int = Field(default=12, ge=6, le=17)


class TwoOscillatorSection(BaseModel):
    """Shorthand for the reference two-node network"""
    model_config = ConfigDict(extra="forbid")

    omega1: float = Field(..., gt=0)
    omega2: float = Field(..., gt=0)
    c0: float
    v1: float = 0.0


class ModelSection(BaseModel):
    """Explicit network or the two-oscillator shorthand"""
    model_config = ConfigDict(extra="forbid")

    masses: Optional[List[float]] = None
    v0: Optional[List[List[float]]] = None
    drive_harmonics: List[DriveHarmonic] = Field(default_factory=list)
    omega_d: Optional[float] = None
    two_oscillator: Optional[TwoOscillatorSection] = None

    @model_validator(mode="after")
    def one_network(self) -> "ModelSection":
        if (self.v0 is None) == (self.two_oscillator is None):
            raise ValueError("give exactly one of 'v0' or 'two_oscillator'")
        if self.two_oscillator is not None and (self.masses or self.drive_harmonics):
            raise ValueError("'two_oscillator' fixes masses and drive harmonics")
        return self

    def network(self) -> NetworkSpec:
        if self.two_oscillator is None:
            return NetworkSpec(
                masses=self.masses or [],
                v0=self.v0,
                drive_harmonics=[h.model_dump() for h in self.drive_harmonics],
                omega_d=self.omega_d,
            )
        t = self.two_oscillator
        v0 = [[t.omega1 ** 2 + t.c0, -t.c0], [-t.c0, t.omega2 ** 2 + t.c0]]
        harmonics: List[Dict[str, Any]] = []
        if self.omega_d is not None:
            drive = [[float(t.v1), 0.0], [0.0, 0.0]]
            harmonics = [{"k": 1, "real": drive}, {"k": -1, "real": drive}]
        return NetworkSpec(v0=v0, drive_harmonics=harmonics, omega_d=self.omega_d)


class SweepAxis(BaseModel):
    """One swept config path, e.g. ``model.two_oscillator.c0`` or ``baths.2.temperature``"""
    model_config = ConfigDict(extra="forbid")

    path: str
    start: float
    stop: float
    num: int = Field(..., ge=1)

    def values(self) -> List[float]:
        return [float(v) for v in np.linspace(self.start, self.stop, self.num)]


class SweepSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    axes: List[SweepAxis] = Field(default_factory=list, max_length=MAX_AXES)


class OutputSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = "results"
    formats: List[Literal["csv", "json"]] = Field(default_factory=lambda: ["csv", "json"])
    precision: int = Field(default=12, ge=6, le=17)
    emit_gnuplot: bool = False
    trajectory: bool = False


def merge_overrides(base: Any, overrides: Any, path: str = "") -> Any:
    """Deep-merge environment overrides; integer keys address list items"""
    if isinstance(overrides, dict) and isinstance(base, list):
        merged = list(base)
        for key, value in overrides.items():
            try:
                index = int(key)
                current = merged[index]
            except (ValueError, IndexError) as e:
                raise ConfigError(f"environment override '{path}{key}': bad list index") from e
            merged[index] = merge_overrides(current, value, f"{path}{key}.")
        return merged
    if isinstance(overrides, dict) and isinstance(base, dict):
        merged = dict(base)
        for key, value in overrides.items():
            merged[key] = merge_overrides(merged[key], value, f"{path}{key}.") if key in merged else value
        return merged
    return overrides


class IndexedEnvSource(EnvSettingsSource):
    """``HEATNET_*`` variables merged over the init values, list-aware"""

    def __init__(self, settings_cls: type, init_settings: PydanticBaseSettingsSource):
        super().__init__(settings_cls)
        self.init_kwargs: Dict[str, Any] = (
            dict(init_settings.init_kwargs) if isinstance(init_settings, InitSettingsSource) else {}
        )

    def __call__(self) -> Dict[str, Any]:
        overrides = super().__call__()
        if overrides:
            logger.debug(f"Environment overrides for {sorted(overrides)}")
        return merge_overrides(self.init_kwargs, overrides)


class RunConfig(BaseSettings):
    """Complete description of one run or sweep"""
    model_config = SettingsConfigDict(
        env_prefix="HEATNET_",
        env_nested_delimiter="__",
        extra="forbid",
        case_sensitive=False,
    )

    model: ModelSection
    baths: List[BathSpec]
    solver: SolverSettings = Field(default_factory=SolverSettings)
    sweep: SweepSection = Field(default_factory=SweepSection)
    output: OutputSection = Field(default_factory=OutputSection)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type,
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (IndexedEnvSource(settings_cls, init_settings),)

    def build_model(self) -> Model:
        """
        Raises:
            NetworkValidationError: physical parameters are inconsistent
        """
        try:
            return Model(network=self.model.network(), baths=self.baths)
        except ValidationError as e:
            raise NetworkValidationError(f"invalid network: {e.errors()[0]['msg']}") from e

    def config_hash(self) -> str:
        """Digest of everything that affects the numbers; output settings excluded"""
        payload = json.dumps(self.model_dump(mode="json", exclude={"output"}), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def with_value(self, path: str, value: float) -> "RunConfig":
        data = self.model_dump(mode="json")
        set_path(data, path, value)
        return validate_run_config(data)

    def grid(self) -> List[Tuple[Tuple[float, ...], "RunConfig"]]:
        """Config variants over the sweep axes in row-major order"""
        axes = self.sweep.axes
        if not axes:
            return [((), self)]
        combos: List[Tuple[float, ...]] = [()]
        for axis in axes:
            combos = [c + (v,) for c in combos for v in axis.values()]
        out = []
        for combo in combos:
            data = self.model_dump(mode="json")
            data["sweep"] = {"axes": []}
            for axis, value in zip(axes, combo):
                set_path(data, axis.path, value)
            out.append((combo, validate_run_config(data)))
        return out


def set_path(data: Dict[str, Any], path: str, value: Any) -> None:
    """Assign ``value`` at a dotted path; integer parts index lists"""
    parts = path.split(".")
    node: Any = data
    for depth, part in enumerate(parts):
        last = depth == len(parts) - 1
        if isinstance(node, list):
            try:
                index = int(part)
                node[index]
            except (ValueError, IndexError) as e:
                raise ConfigError(f"sweep path '{path}': bad list index '{part}'") from e
            if last:
                node[index] = value
            else:
                node = node[index]
        elif isinstance(node, dict):
            if part not in node:
                raise ConfigError(f"sweep path '{path}': unknown key '{part}'")
            if last:
                node[part] = value
            else:
                node = node[part]
        else:
            raise ConfigError(f"sweep path '{path}' does not name a numeric field")


def _classify(e: ValidationError) -> Exception:
    kinds = {err["type"] for err in e.errors()}
    first = e.errors()[0]
    location = ".".join(str(p) for p in first["loc"])
    message = f"{location}: {first['msg']}"
    if kinds & SCHEMA_ERRORS:
        return ConfigError(message)
    return NetworkValidationError(message)


def validate_run_config(data: Dict[str, Any]) -> RunConfig:
    """Validate a config mapping without consulting the environment"""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise _classify(e) from e


def load_run_config(path: str) -> RunConfig:
    """
    Read a JSON or YAML run document and merge environment overrides.

    Raises:
        ConfigError: unreadable file, syntax error or unknown keys
        NetworkValidationError: out-of-range physical parameters
    """
    config_file = Path(path)
    try:
        with open(config_file, "r") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config '{path}': {e}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse config '{path}': {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config '{path}' must be a mapping")
    try:
        cfg = RunConfig(**data)
    except ValidationError as e:
        raise _classify(e) from e
    logger.debug(f"Loaded config {config_file} ({cfg.config_hash()[:12]})")
    return cfg
