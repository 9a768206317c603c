"""Hybrid TD3 + neural-network MPC load control for a hydrogen-diesel dual-fuel engine."""
from .core_types import (
    AgentState,
    CombustionOutput,
    ConfigError,
    ControlInput,
    CycleRecord,
    DivergenceError,
    NumericError,
    ScalingTable,
)

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "CombustionOutput",
    "ConfigError",
    "ControlInput",
    "CycleRecord",
    "DivergenceError",
    "NumericError",
    "ScalingTable",
]
