"""
Deterministic result files: CSV tables with ``#`` metadata, sorted JSON
reports and optional gnuplot scripts.
"""
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import scipy

from heatnet import __version__
from heatnet.errors import OutputError

logger = logging.getLogger(__name__)


def format_value(value: Any, precision: int = 12) -> str:
    """Fixed formatting: floats with ``precision`` significant digits, nan, true/false"""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if v == 0.0:
            v = 0.0
        return format(v, f".{precision}g")
    if value is None:
        return ""
    text = str(value)
    if "," in text or '"' in text:
        text = '"' + text.replace('"', '""') + '"'
    return text


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return None if not math.isfinite(v) else v
    return value


@dataclass
class ResultTable:
    """Column names, rows and a metadata block"""
    columns: List[str]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> List[Any]:
        return [row.get(name) for row in self.rows]

    def to_csv(self, precision: int = 12) -> str:
        lines = [f"# {key}: {self.metadata[key]}" for key in sorted(self.metadata)]
        lines.append(f"# rows: {len(self.rows)}")
        lines.append(",".join(self.columns))
        for row in self.rows:
            lines.append(",".join(format_value(row.get(c, float("nan")), precision) for c in self.columns))
        return "\n".join(lines) + "\n"


def versions() -> Dict[str, str]:
    return {"heatnet": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


class ResultStore:
    """Writes result files below one output directory"""

    def __init__(self, directory: str, precision: int = 12):
        self.directory = Path(directory)
        self.precision = precision
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise OutputError(f"cannot create output directory '{directory}': {e}") from e

    def _write(self, name: str, text: str) -> Path:
        path = self.directory / name
        try:
            with open(path, "w", newline="\n") as f:
                f.write(text)
        except OSError as e:
            raise OutputError(f"cannot write '{path}': {e}") from e
        logger.info(f"✓ Wrote {path}")
        return path

    def write_table(self, name: str, table: ResultTable) -> Path:
        return self._write(f"{name}.csv", table.to_csv(self.precision))

    def write_json(self, name: str, payload: Dict[str, Any]) -> Path:
        text = json.dumps(_json_safe(payload), sort_keys=True, indent=2, allow_nan=False)
        return self._write(f"{name}.json", text + "\n")

    def write_gnuplot(self, name: str, table: ResultTable, x: str, y: Optional[str] = None, z: Optional[str] = None) -> Path:
        """Companion plotting script that only reads ``<name>.csv``"""
        cols = {c: i + 1 for i, c in enumerate(table.columns)}
        lines = [
            f"# plots {name}.csv",
            "set datafile separator ','",
            "set datafile missing 'nan'",
            f"set xlabel '{x}'",
        ]
        if z is not None:
            lines += [
                f"set ylabel '{y}'",
                f"set title '{z}'",
                "set view map",
                "set pm3d map",
                f"splot '{name}.csv' using {cols[x]}:{cols[y]}:{cols[z]} every ::1 with pm3d notitle",
            ]
        else:
            series = [c for c in (y,) if c] or [c for c in table.columns if c != x][:1]
            lines += [f"set ylabel '{series[0]}'"]
            lines.append(
                "plot " + ", ".join(
                    f"'{name}.csv' using {cols[x]}:{cols[s]} every ::1 with linespoints title '{s}'" for s in series
                )
            )
        return self._write(f"{name}.gp", "\n".join(lines) + "\n")
