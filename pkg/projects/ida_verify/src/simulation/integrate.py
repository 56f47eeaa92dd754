"""Fixed-step explicit integration with a divergence guard."""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional

import numpy as np
from tqdm import tqdm

from projects.ida_verify.src.core.errors import ContractError, DivergenceError
from projects.ida_verify.src.core.types import ExtendedState

Method = Literal["rk4", "euler"]
Field = Callable[[float, np.ndarray], np.ndarray]


@dataclass
class Trajectory:
    """Time-indexed record of (q, p, x_v) states plus per-step monitors."""

    times: np.ndarray
    states: np.ndarray
    metadata: Dict[str, Any] = field(default_factory=dict)
    energies: List[Any] = field(default_factory=list)
    margins: Optional[np.ndarray] = None
    channels: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        length = self.times.shape[0]
        if self.states.shape[0] != length:
            raise ContractError("times and states differ in length")
        if length > 1 and np.any(np.diff(self.times) <= 0):
            raise ContractError("times must be strictly increasing")
        if self.energies and len(self.energies) != length:
            raise ContractError("energies and times differ in length")
        if self.margins is not None and len(self.margins) != length:
            raise ContractError("margins and times differ in length")
        for name, values in self.channels.items():
            if len(values) != length:
                raise ContractError(f"channel '{name}' and times differ in length")
        if not np.all(np.isfinite(self.states)):
            raise ContractError("trajectory holds non-finite states")

    def __len__(self) -> int:
        return self.times.shape[0]

    @property
    def diverged(self) -> bool:
        return bool(self.metadata.get("diverged", False))

    def extended_states(self, n: int) -> List[ExtendedState]:
        return [ExtendedState.from_array(row, n) for row in self.states]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _euler(f: Field, t: float, x: np.ndarray, h: float) -> np.ndarray:
    return x + h * f(t, x)


def _rk4(f: Field, t: float, x: np.ndarray, h: float) -> np.ndarray:
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


STEPPERS = {"rk4": _rk4, "euler": _euler}


def step_times(t0: float, t1: float, dt: float) -> np.ndarray:
    """Grid t0 + k dt ending exactly at t1; the last step may be shorter."""
    steps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    times = t0 + dt * np.arange(steps + 1, dtype=float)
    times[-1] = t1
    return times


def integrate(
    field: Field,
    x0,
    t0: float,
    t1: float,
    dt: float,
    method: Method = "rk4",
    divergence_limit: float = 1e6,
    metadata: Optional[Dict[str, Any]] = None,
    show_progress: bool = False,
) -> Trajectory:
    """Classical fixed-step integration of x' = field(t, x) over [t0, t1]."""
    if not dt > 0:
        raise ContractError(f"dt must be positive, got {dt}")
    if not t1 > t0:
        raise ContractError(f"t1 must exceed t0, got [{t0}, {t1}]")
    if method not in STEPPERS:
        raise ContractError(f"Unknown integration method '{method}'")
    stepper = STEPPERS[method]
    x = np.asarray(x0, dtype=float).copy()
    times = step_times(t0, t1, dt)
    states = np.empty((times.shape[0], x.shape[0]))
    states[0] = x
    info = {"method": method, "dt": dt, "t0": t0, "t1": t1, "diverged": False}
    info.update(metadata or {})

    for k in tqdm(range(times.shape[0] - 1), desc="Integrating", disable=not show_progress):
        x = stepper(field, times[k], x, times[k + 1] - times[k])
        if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > divergence_limit:
            info.update(diverged=True, abort_time=float(times[k]))
            partial = Trajectory(times[: k + 1], states[: k + 1], info)
            raise DivergenceError(float(times[k]), partial)
        states[k + 1] = x
    return Trajectory(times, states, info)
