"""Pool files (JSON) and time traces (CSV).

Floats are written with 17 significant digits so every double survives a
save/load cycle exactly, and a save -> load -> save cycle is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import ArgumentError
from .hunter import DoubleHumpPair, HuntConfig, pair_from_realization
from .lattice import DisorderRealization
from .propagator import TRACE_COLUMNS, TimeTrace

FORMAT_VERSION = 1
PathLike = Union[str, Path]


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise ArgumentError(f"cannot store non-finite value {x} in a pool file")
    return "%.17g" % x


def dump_json(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in items):
            return "[" + ", ".join(dump_json(v) for v in items) + "]"
        inner = ",\n".join(pad + "  " + dump_json(v, indent + 1) for v in items)
        return "[\n" + inner + "\n" + pad + "]" if items else "[]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(f"{pad}  {json.dumps(str(k))}: {dump_json(v, indent + 1)}" for k, v in obj.items())
        return "{\n" + inner + "\n" + pad + "}"
    raise ArgumentError(f"cannot serialize {type(obj).__name__}")


@dataclass
class PoolEntry:
    seed: int
    size: int
    site_O: int
    site_P: int
    window: int
    tuned_epsilon_P: float
    epsilon: list
    gap: float
    hump_mass_O: float
    hump_mass_P: float
    beta_quarter: Optional[float] = None
    beta_c: Optional[float] = None
    R: Optional[float] = None  # null also when R is infinite or divergent

    @classmethod
    def from_pair(cls, pair: DoubleHumpPair) -> "PoolEntry":
        real = pair.realization
        return cls(
            seed=real.seed,
            size=real.size,
            site_O=real.site_O,
            site_P=real.site_P,
            window=pair.window,
            tuned_epsilon_P=float(real.epsilon[real.site_P]),
            epsilon=[float(e) for e in real.epsilon],
            gap=float(pair.gap),
            hump_mass_O=float(pair.hump_mass_O),
            hump_mass_P=float(pair.hump_mass_P),
        )

    def realization(self) -> DisorderRealization:
        return DisorderRealization(self.size, np.array(self.epsilon), self.seed, self.site_O, self.site_P)

    def pair(self) -> DoubleHumpPair:
        cfg = HuntConfig(separation=self.site_P - self.site_O, window=self.window)
        return pair_from_realization(self.realization(), cfg)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class PoolFile:
    entries: list = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def to_text(self) -> str:
        doc = {"format_version": self.format_version, "entries": [e.to_dict() for e in self.entries]}
        return dump_json(doc) + "\n"


def save_pool(pool: PoolFile, path: PathLike) -> None:
    Path(path).write_text(pool.to_text())


def load_pool(path: PathLike) -> PoolFile:
    doc = json.loads(Path(path).read_text())
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ArgumentError(f"unsupported pool format_version {version!r}")
    try:
        entries = [PoolEntry(**e) for e in doc["entries"]]
    except (KeyError, TypeError) as exc:
        raise ArgumentError(f"malformed pool file {path}: {exc}") from exc
    return PoolFile(entries, version)


def write_trace(trace: TimeTrace, path: PathLike) -> None:
    cols = trace.columns()
    data = np.column_stack(list(cols.values()))
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(cols), comments="")


def read_trace(path: PathLike) -> dict:
    """Columns of a CSV trace keyed by header name."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip().split(",")
    if not header or header[0] != "t" or any(h not in TRACE_COLUMNS for h in header):
        raise ArgumentError(f"{path}: not a trace file (header {header})")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return {h: np.empty(0) for h in header}
    return {h: data[:, i] for i, h in enumerate(header)}
