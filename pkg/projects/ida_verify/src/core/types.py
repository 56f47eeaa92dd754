from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from projects.ida_verify.src.core.errors import ContractError, EvaluationError

MatrixField = Callable[[np.ndarray], np.ndarray]
ScalarField = Callable[[np.ndarray], float]
VectorField = Callable[[np.ndarray], np.ndarray]
SkewField = Callable[[np.ndarray, np.ndarray], np.ndarray]
TimeSignal = Callable[[float], np.ndarray]

SYMMETRY_TOL = 1e-12


def as_vector(value, n: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float array, optionally checking its length."""
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise ContractError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise ContractError(f"{name} must have length {n}, got {arr.shape[0]}")
    return arr


def evaluate_matrix(
    fn: Callable, args: Tuple, shape: Tuple[int, int], name: str
) -> np.ndarray:
    """Evaluate a matrix-valued map and check shape and finiteness."""
    value = np.asarray(fn(*args), dtype=float)
    if value.shape != shape:
        raise ContractError(f"{name} returned shape {value.shape}, expected {shape}")
    if not np.all(np.isfinite(value)):
        raise EvaluationError(f"{name} returned a non-finite entry", np.concatenate(args))
    return value


def evaluate_scalar(fn: Callable, q: np.ndarray, name: str) -> float:
    value = float(fn(q))
    if not np.isfinite(value):
        raise EvaluationError(f"{name} returned a non-finite value", q)
    return value


@dataclass(frozen=True, eq=False)
class DomainBox:
    """Axis-aligned sampling region for pointwise invariants."""

    q_low: np.ndarray
    q_high: np.ndarray
    p_half_width: float = 1.0

    def __post_init__(self):
        low = as_vector(self.q_low, name="q_low")
        high = as_vector(self.q_high, low.shape[0], name="q_high")
        if np.any(high < low) or self.p_half_width < 0:
            raise ContractError("Domain box is empty")
        object.__setattr__(self, "q_low", low)
        object.__setattr__(self, "q_high", high)

    @classmethod
    def around(
        cls, center, half_width: float = np.pi, p_half_width: float = 1.0
    ) -> "DomainBox":
        center = as_vector(center, name="center")
        return cls(center - half_width, center + half_width, p_half_width)

    @property
    def dimension(self) -> int:
        return self.q_low.shape[0]

    def sample_q(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.q_low, self.q_high)

    def sample_p(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-self.p_half_width, self.p_half_width, self.dimension)


@dataclass(frozen=True, eq=False)
class MechanicalModel:
    """Open-loop port-Hamiltonian mechanical plant (q, p) with input map G(q).

    The default sampling box is centred on ``q_star`` when the equilibrium is known.
    """

    n: int
    m: int
    mass: MatrixField
    potential: ScalarField
    input_map: MatrixField
    potential_gradient: Optional[VectorField] = None
    mass_gradient: Optional[Callable[[np.ndarray], List[np.ndarray]]] = None
    domain_box: Optional[DomainBox] = None
    constant_mass: bool = False
    constant_input_map: bool = False
    name: str = "custom"
    q_star: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ContractError(f"Dimensions must be positive, got n={self.n}, m={self.m}")
        if self.m > self.n:
            raise ContractError(f"Input dimension m={self.m} exceeds n={self.n}")
        if self.q_star is not None:
            object.__setattr__(self, "q_star", as_vector(self.q_star, self.n, "q_star"))
        if self.domain_box is None:
            center = np.zeros(self.n) if self.q_star is None else self.q_star
            object.__setattr__(self, "domain_box", DomainBox.around(center))
        elif self.domain_box.dimension != self.n:
            raise ContractError("Domain box dimension does not match n")

    @property
    def underactuated(self) -> bool:
        return self.m < self.n

    def M(self, q: np.ndarray) -> np.ndarray:
        return evaluate_matrix(self.mass, (q,), (self.n, self.n), "mass matrix")

    def V(self, q: np.ndarray) -> float:
        return evaluate_scalar(self.potential, q, "potential")

    def G(self, q: np.ndarray) -> np.ndarray:
        return evaluate_matrix(self.input_map, (q,), (self.n, self.m), "input map")


@dataclass(frozen=True, eq=False)
class TargetDesign:
    """IDA-PBC target: desired inertia, desired potential, J2 and the equilibrium."""

    desired_mass: MatrixField
    desired_potential: ScalarField
    j2: SkewField
    q_star: np.ndarray
    desired_potential_gradient: Optional[VectorField] = None
    constant_mass: bool = False
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "q_star", as_vector(self.q_star, name="q_star"))

    @property
    def n(self) -> int:
        return self.q_star.shape[0]

    def Md(self, q: np.ndarray) -> np.ndarray:
        return evaluate_matrix(self.desired_mass, (q,), (self.n, self.n), "desired mass")

    def Vd(self, q: np.ndarray) -> float:
        return evaluate_scalar(self.desired_potential, q, "desired potential")

    def J2(self, q: np.ndarray, p: np.ndarray) -> np.ndarray:
        return evaluate_matrix(self.j2, (q, p), (self.n, self.n), "J2")


def _symmetric_matrix(value, name: str) -> np.ndarray:
    mat = np.atleast_2d(np.asarray(value, dtype=float))
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ContractError(f"{name} must be square, got shape {mat.shape}")
    if np.max(np.abs(mat - mat.T)) >= SYMMETRY_TOL:
        raise ContractError(f"{name} is not symmetric")
    return mat


@dataclass(frozen=True, eq=False)
class ControllerGains:
    """Gain matrices Kp (damping of the basic design), Kv (damping) and Ki (integral)."""

    Kp: np.ndarray
    Kv: np.ndarray
    Ki: np.ndarray
    allow_semidefinite: bool = False

    def __post_init__(self):
        shapes = set()
        for label in ("Kp", "Kv", "Ki"):
            mat = _symmetric_matrix(getattr(self, label), label)
            smallest = float(np.linalg.eigvalsh(mat)[0])
            floor_ok = smallest >= 0.0 if self.allow_semidefinite else smallest > 0.0
            if not floor_ok:
                raise ContractError(
                    f"{label} must be positive definite (smallest eigenvalue {smallest:.3e})"
                )
            object.__setattr__(self, label, mat)
            shapes.add(mat.shape)
        if len(shapes) != 1:
            raise ContractError(f"Gain matrices disagree in shape: {sorted(shapes)}")

    @classmethod
    def from_scalars(
        cls, m: int, kp: float, kv: float, ki: float, allow_semidefinite: bool = False
    ) -> "ControllerGains":
        eye = np.eye(m)
        return cls(kp * eye, kv * eye, ki * eye, allow_semidefinite=allow_semidefinite)

    @property
    def m(self) -> int:
        return self.Kp.shape[0]


@dataclass(frozen=True, eq=False)
class ExtendedState:
    """Plant state (q, p) extended with the controller state x_v."""

    q: np.ndarray
    p: np.ndarray
    x_v: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        q = as_vector(self.q, name="q")
        p = as_vector(self.p, q.shape[0], name="p")
        x_v = np.zeros_like(q) if self.x_v is None else as_vector(self.x_v, q.shape[0], "x_v")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "x_v", x_v)

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @property
    def x_q(self) -> np.ndarray:
        return self.q - self.x_v

    def x_p(self, kappa: np.ndarray) -> np.ndarray:
        return self.p + _check_kappa(kappa, self.n) @ self.x_v

    @classmethod
    def from_extended(cls, x_q, x_p, x_v, kappa: np.ndarray) -> "ExtendedState":
        """Inverse of the (x_q, x_p) change of coordinates."""
        x_v = as_vector(x_v, name="x_v")
        return cls(
            q=as_vector(x_q, x_v.shape[0], "x_q") + x_v,
            p=as_vector(x_p, x_v.shape[0], "x_p") - _check_kappa(kappa, x_v.shape[0]) @ x_v,
            x_v=x_v,
        )

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p, self.x_v])

    @classmethod
    def from_array(cls, values: np.ndarray, n: int) -> "ExtendedState":
        values = as_vector(values, 3 * n, "state")
        return cls(values[:n], values[n : 2 * n], values[2 * n :])


def _check_kappa(kappa, n: int) -> np.ndarray:
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (n, n):
        raise ContractError(f"kappa must have shape {(n, n)}, got {kappa.shape}")
    return kappa


def extended_coords(s: ExtendedState, kappa: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Return (x_q, x_p) = (q - x_v, p + kappa x_v)."""
    return s.x_q, s.x_p(kappa)


@dataclass(frozen=True, eq=False)
class DisturbanceProfile:
    """Additive disturbances d1 (q-row) and d2 (p-row); d2 = G d2hat when matched."""

    d1: TimeSignal
    d2: TimeSignal
    matched_d2hat: Optional[TimeSignal] = None

    @classmethod
    def zero(cls, n: int) -> "DisturbanceProfile":
        return cls(d1=lambda t: np.zeros(n), d2=lambda t: np.zeros(n))

    @property
    def matched(self) -> bool:
        return self.matched_d2hat is not None

    def p_row(self, t: float, G: np.ndarray) -> np.ndarray:
        """Disturbance entering the momentum equation at time t."""
        if self.matched_d2hat is not None:
            return G @ as_vector(self.matched_d2hat(t), G.shape[1], "d2hat")
        return as_vector(self.d2(t), G.shape[0], "d2")

    def sup_norm(self, t0: float, t1: float, samples: int = 1001) -> float:
        """Sup-norm of (d1, d2 or d2hat) over a uniform grid of the horizon."""
        worst = 0.0
        for t in np.linspace(t0, t1, samples):
            parts = [self.d1(t), self.d2(t)]
            if self.matched_d2hat is not None:
                parts.append(self.matched_d2hat(t))
            values = np.concatenate([np.atleast_1d(np.asarray(v, dtype=float)) for v in parts])
            if not np.all(np.isfinite(values)):
                raise EvaluationError(f"Disturbance is non-finite at t={t}", [t])
            worst = max(worst, float(np.max(np.abs(values), initial=0.0)))
        return worst


def sample_extended_state(
    box: DomainBox,
    rng: np.random.Generator,
    x_v_range: Optional[Tuple[float, float]] = None,
) -> ExtendedState:
    """Draw (q, p) from the box and x_v with norm uniform in x_v_range (zero when None)."""
    q = box.sample_q(rng)
    p = box.sample_p(rng)
    if x_v_range is None:
        return ExtendedState(q, p)
    direction = rng.standard_normal(box.dimension)
    direction /= np.linalg.norm(direction)
    return ExtendedState(q, p, rng.uniform(*x_v_range) * direction)
