"""Domain types shared by the simulator, the controller and the agent.

Physical units are carried explicitly in field names/docstrings: IMEP in bar,
MPRR in bar/°CA, NOx in ppm, SOI in °CA before TDC and injection durations in
milliseconds.  The CSV export converts durations to seconds.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class NumericError(ArithmeticError):
    """Non-finite value encountered in a numerical routine."""


class DivergenceError(RuntimeError):
    """Agent training diverged."""


DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "imep": (4.5, 9.0),
    "nox": (0.0, 1850.0),
    "mprr": (0.0, 10.0),
    "soi_diesel": (2.0, 20.0),
    "doi_diesel": (0.2, 1.2),
    "doi_hydrogen": (0.0, 8.0),
}

# model input / output channel order
INPUT_CHANNELS = ("imep", "soi_diesel", "doi_diesel", "doi_hydrogen")
OUTPUT_CHANNELS = ("imep", "nox", "mprr")
CONTROL_CHANNELS = ("soi_diesel", "doi_diesel", "doi_hydrogen")
STATE_CHANNELS = ("imep", "nox", "mprr", "imep", "imep")


@dataclass(frozen=True)
class ScalingTable:
    """Per-channel affine ranges mapping [min, max] onto [-1, 1]."""

    ranges: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_RANGES)
    )

    def __post_init__(self):
        for name, (lo, hi) in self.ranges.items():
            if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
                raise ConfigError(f"scaling range for {name!r} needs min < max, got {lo}, {hi}")

    def bounds(self, channel: str) -> tuple[float, float]:
        try:
            return self.ranges[channel]
        except KeyError:
            raise ConfigError(f"unknown channel {channel!r}") from None

    def span(self, channel: str) -> float:
        lo, hi = self.bounds(channel)
        return hi - lo

    def vectors(self, channels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Return (min, max) arrays for a channel tuple."""
        lo = np.array([self.bounds(c)[0] for c in channels], dtype=float)
        hi = np.array([self.bounds(c)[1] for c in channels], dtype=float)
        return lo, hi

    def to_dict(self) -> dict:
        return {k: [float(lo), float(hi)] for k, (lo, hi) in self.ranges.items()}

    @classmethod
    def from_dict(cls, data: Mapping) -> "ScalingTable":
        return cls({k: (float(v[0]), float(v[1])) for k, v in data.items()})


def normalize(value, channel: str, scaling: ScalingTable):
    lo, hi = scaling.bounds(channel)
    return 2.0 * (value - lo) / (hi - lo) - 1.0


def denormalize(value, channel: str, scaling: ScalingTable):
    lo, hi = scaling.bounds(channel)
    return lo + (value + 1.0) * (hi - lo) / 2.0


@dataclass(frozen=True)
class ControlInput:
    soi_diesel: float  # °CA bTDC
    doi_diesel: float  # ms
    doi_hydrogen: float  # ms

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise NumericError(f"non-finite control input {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.soi_diesel, self.doi_diesel, self.doi_hydrogen], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "ControlInput":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class CombustionOutput:
    imep: float  # bar
    mprr: float  # bar/°CA
    nox: float  # ppm

    def as_array(self) -> np.ndarray:
        """Model output order: IMEP, NOx, MPRR."""
        return np.array([self.imep, self.nox, self.mprr], dtype=float)

    @classmethod
    def from_array(cls, arr) -> "CombustionOutput":
        return cls(imep=float(arr[0]), nox=float(arr[1]), mprr=float(arr[2]))


@dataclass(frozen=True)
class AgentState:
    imep_prev: float
    nox_prev: float
    mprr_prev: float
    ref_imep_curr: float
    ref_imep_prev: float

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.imep_prev, self.nox_prev, self.mprr_prev, self.ref_imep_curr, self.ref_imep_prev],
            dtype=float,
        )

    def normalized(self, scaling: ScalingTable) -> np.ndarray:
        return np.array(
            [normalize(v, c, scaling) for v, c in zip(self.as_array(), STATE_CHANNELS)]
        )


@dataclass(frozen=True)
class CycleRecord:
    cycle_index: int
    ref_imep: float
    delta_ref: float
    control: ControlInput
    output: CombustionOutput
    reward: float
    rail_pressure: float


def build_agent_state(log: Sequence[CycleRecord], ref_curr: float) -> AgentState:
    """Observation for the cycle about to run.

    ``log`` holds the most recent completed cycles (only the last one is used
    for the measurements).  With an empty log the cold-start convention
    applies: IMEP history is the current reference, NOx and MPRR are zero.
    """
    if not log:
        return AgentState(ref_curr, 0.0, 0.0, ref_curr, ref_curr)
    last = log[-1]
    return AgentState(
        imep_prev=last.output.imep,
        nox_prev=last.output.nox,
        mprr_prev=last.output.mprr,
        ref_imep_curr=ref_curr,
        ref_imep_prev=last.ref_imep,
    )


# Versioned structured-text container for network parameters.
CONTAINER_VERSION = 1


def save_container(path, kind: str, arrays: Mapping[str, np.ndarray], meta: Mapping | None = None):
    """Write named float64 arrays (row-major) plus metadata as JSON."""
    doc = {
        "format": "h2df-rlmpc-container",
        "version": CONTAINER_VERSION,
        "kind": kind,
        "meta": dict(meta or {}),
        "layers": [
            {
                "name": name,
                "shape": list(np.shape(arr)),
                "values": [float(v) for v in np.asarray(arr, dtype=float).ravel(order="C")],
            }
            for name, arr in arrays.items()
        ],
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1))


def load_container(path, kind: str, expected_shapes: Mapping[str, tuple] | None = None):
    """Read a container; returns (arrays, meta).  Shapes are validated."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != "h2df-rlmpc-container" or doc.get("version") != CONTAINER_VERSION:
        raise ConfigError(f"{path}: unsupported container format/version")
    if doc.get("kind") != kind:
        raise ConfigError(f"{path}: expected kind {kind!r}, found {doc.get('kind')!r}")
    arrays = {}
    for layer in doc["layers"]:
        shape = tuple(layer["shape"])
        values = np.array(layer["values"], dtype=float)
        if values.size != int(np.prod(shape)):
            raise ConfigError(f"{path}: layer {layer['name']} size does not match shape {shape}")
        arrays[layer["name"]] = values.reshape(shape)
    if expected_shapes is not None:
        if set(arrays) != set(expected_shapes):
            raise ConfigError(f"{path}: layer names {sorted(arrays)} != {sorted(expected_shapes)}")
        for name, shape in expected_shapes.items():
            if arrays[name].shape != tuple(shape):
                raise ConfigError(
                    f"{path}: layer {name} has shape {arrays[name].shape}, expected {tuple(shape)}"
                )
    return arrays, doc.get("meta", {})
