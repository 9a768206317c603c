"""Synthetic single-cylinder H2DF engine used as the "real" plant.

Per cycle, with ``rs = sqrt(rail / 1000)``, diesel energy ``Ed = cD*doi_d*rs``,
hydrogen energy ``Eh = cH*doi_h`` and ``E = Ed + Eh``::

    eta(soi)  = 1 - eta_curv * (soi - soi_opt)**2
    imep_raw  = c0 + E * eta(soi)
    imep      = (1 - alpha) * imep_raw + alpha * imep_prev + noise
    mprr      = max(0, b0 + b1 * Eh**2 + b2 * E + b_soi * soi + noise)
    nox       = max(0, n0 + n1 * imep_raw**2 + n2 * Eh / E + noise)

Injector mass flow is assumed to scale with the square root of the rail
pressure ratio (orifice flow).  That sensitivity is an assumption: nothing in
the measured data pins it down.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.signal import max_len_seq

from .core_types import CombustionOutput, ConfigError, ControlInput

log = logging.getLogger(__name__)

NOMINAL_RAIL_BAR = 1000.0


@dataclass(frozen=True)
class PlantCoefficients:
    c0: float = 1.2  # bar, motoring/friction offset
    cD: float = 5.5  # bar per ms diesel at nominal rail pressure
    cH: float = 0.35  # bar per ms hydrogen
    soi_opt: float = 10.0  # °CA bTDC, efficiency peak
    eta_curv: float = 0.002  # 1/°CA²
    b0: float = 0.5
    b1: float = 0.35
    b2: float = 0.55
    b_soi: float = 0.2
    n0: float = 50.0
    n1: float = 14.0
    n2: float = 250.0


@dataclass(frozen=True)
class PlantConfig:
    rail_pressure: float = NOMINAL_RAIL_BAR
    coefficients: PlantCoefficients = field(default_factory=PlantCoefficients)
    alpha: float = 0.15
    # (imep bar, mprr bar/°CA, nox ppm)
    noise_std: tuple[float, float, float] = (0.05, 0.15, 20.0)
    seed: int = 0
    # physical actuator limits, ControlInput order
    u_min: tuple[float, float, float] = (2.0, 0.2, 0.0)
    u_max: tuple[float, float, float] = (20.0, 1.2, 8.0)

    def __post_init__(self):
        if not self.rail_pressure > 0:
            raise ConfigError(f"rail_pressure must be positive, got {self.rail_pressure}")
        if not 0.0 <= self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in [0, 1), got {self.alpha}")
        if any(s < 0 for s in self.noise_std):
            raise ConfigError("noise_std entries must be non-negative")

    def without_noise(self) -> "PlantConfig":
        return replace(self, noise_std=(0.0, 0.0, 0.0))

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PlantConfig":
        data = dict(data)
        coeffs = PlantCoefficients(**data.pop("coefficients", {}))
        for key in ("noise_std", "u_min", "u_max"):
            if key in data:
                data[key] = tuple(float(v) for v in data[key])
        return cls(coefficients=coeffs, **data)


@dataclass
class PlantState:
    imep_prev: float
    rng: np.random.Generator


def rail_scale(rail_pressure: float) -> float:
    """Fuel-mass multiplier relative to the nominal 1000 bar rail."""
    if not rail_pressure > 0:
        raise ValueError(f"rail pressure must be positive, got {rail_pressure}")
    return math.sqrt(rail_pressure / NOMINAL_RAIL_BAR)


def _energies(u: np.ndarray, cfg: PlantConfig):
    k = cfg.coefficients
    ed = k.cD * u[1] * rail_scale(cfg.rail_pressure)
    eh = k.cH * u[2]
    return ed, eh


def efficiency(soi: float, cfg: PlantConfig) -> float:
    k = cfg.coefficients
    return 1.0 - k.eta_curv * (soi - k.soi_opt) ** 2


def imep_raw(u: ControlInput, cfg: PlantConfig) -> float:
    """Noise-free, lag-free IMEP of one cycle."""
    arr = u.as_array()
    ed, eh = _energies(arr, cfg)
    return cfg.coefficients.c0 + (ed + eh) * efficiency(arr[0], cfg)


def clamp_control(u: ControlInput, cfg: PlantConfig) -> ControlInput:
    arr = u.as_array()
    clipped = np.clip(arr, cfg.u_min, cfg.u_max)
    if not np.array_equal(clipped, arr):
        log.warning("control %s outside actuator limits, clamped to %s", arr, clipped)
        return ControlInput.from_array(clipped)
    return u


def initial_state(cfg: PlantConfig, u0: ControlInput, seed: int | None = None) -> PlantState:
    """Plant at the noise-free steady state of a constant input ``u0``."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    return PlantState(imep_prev=imep_raw(clamp_control(u0, cfg), cfg), rng=rng)


def step(state: PlantState, u: ControlInput, cfg: PlantConfig) -> tuple[PlantState, CombustionOutput]:
    k = cfg.coefficients
    u = clamp_control(u, cfg)
    arr = u.as_array()
    ed, eh = _energies(arr, cfg)
    total = ed + eh
    raw = k.c0 + total * efficiency(arr[0], cfg)
    noise = state.rng.standard_normal(3) * np.asarray(cfg.noise_std)

    imep = (1.0 - cfg.alpha) * raw + cfg.alpha * state.imep_prev + noise[0]
    mprr = k.b0 + k.b1 * eh**2 + k.b2 * total + k.b_soi * arr[0] + noise[1]
    h2_share = eh / total if total > 0 else 0.0
    nox = k.n0 + k.n1 * raw**2 + k.n2 * h2_share + noise[2]

    out = CombustionOutput(imep=float(imep), mprr=float(max(mprr, 0.0)), nox=float(max(nox, 0.0)))
    return PlantState(imep_prev=out.imep, rng=state.rng), out


def prbs(n_cycles: int, hold: int, rng: np.random.Generator, nbits: int = 10) -> np.ndarray:
    """0/1 maximal-length sequence, each bit held ``hold`` cycles."""
    init = rng.integers(0, 2, size=nbits)
    if not init.any():
        init[0] = 1
    n_bits_needed = -(-n_cycles // hold)
    bits = max_len_seq(nbits, state=init, length=n_bits_needed)[0]
    return np.repeat(bits, hold)[:n_cycles]


def generate_prbs_dataset(
    n_cycles: int,
    cfg: PlantConfig,
    levels,
    hold: int = 1,
    seed: int = 0,
    *,
    nbits: int = 10,
    redraw_every: int | None = None,
    rail_pressure: float = NOMINAL_RAIL_BAR,
) -> list[tuple[ControlInput, CombustionOutput]]:
    """Excite every control channel with its own PRBS and record the plant.

    ``levels`` is a per-channel ``(low, high)`` sequence in ControlInput order.
    With ``redraw_every`` set, each channel's two levels are redrawn uniformly
    inside ``[low, high]`` every that many cycles (amplitude-modulated PRBS),
    which covers the interior of the actuator box.
    """
    if n_cycles < 1 or hold < 1:
        raise ConfigError("n_cycles and hold must be >= 1")
    levels = np.asarray(levels, dtype=float)
    if levels.shape != (3, 2):
        raise ConfigError(f"levels must be 3 (low, high) pairs, got shape {levels.shape}")
    if np.any(levels[:, 0] == levels[:, 1]):
        raise ConfigError("degenerate PRBS levels (low == high)")

    rng = np.random.default_rng(seed)
    bits = np.stack([prbs(n_cycles, hold, rng, nbits) for _ in range(3)], axis=1)
    lo = np.broadcast_to(levels[:, 0], (n_cycles, 3)).copy()
    hi = np.broadcast_to(levels[:, 1], (n_cycles, 3)).copy()
    if redraw_every:
        span = levels[:, 1] - levels[:, 0]
        for start in range(0, n_cycles, redraw_every):
            a = levels[:, 0] + rng.uniform(0.0, 0.8, 3) * span
            b = a + rng.uniform(0.2, 1.0, 3) * (levels[:, 1] - a)
            lo[start : start + redraw_every] = a
            hi[start : start + redraw_every] = b
    controls = np.where(bits == 1, hi, lo)

    plant_cfg = replace(cfg, rail_pressure=rail_pressure)
    state = initial_state(plant_cfg, ControlInput.from_array(controls[0]), seed=seed + 1)
    rows = []
    for arr in controls:
        u = ControlInput.from_array(arr)
        state, y = step(state, u, plant_cfg)
        rows.append((u, y))
    return rows
