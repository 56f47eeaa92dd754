"""Finite differences and annihilator computations shared by the analysis modules."""

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
from scipy.linalg import null_space

from projects.ida_verify.src.core.errors import ContractError, EvaluationError, RankError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class FiniteDifferenceScheme:
    """Central difference scheme of order 2 or 4."""

    step: float = 1e-6
    order: int = 2

    def __post_init__(self):
        if not self.step > 0:
            raise ContractError(f"Finite-difference step must be positive, got {self.step}")
        if self.order not in (2, 4):
            raise ContractError(f"Finite-difference order must be 2 or 4, got {self.order}")

    @classmethod
    def from_config(cls, differences) -> "FiniteDifferenceScheme":
        return cls(step=differences.step, order=differences.order)


DEFAULT_SCHEME = FiniteDifferenceScheme()


def _checked(fn: Callable, x: np.ndarray) -> np.ndarray:
    value = np.asarray(fn(x), dtype=float)
    if not np.all(np.isfinite(value)):
        raise EvaluationError("Non-finite evaluation during finite differencing", x)
    return value


def _partial(fn: Callable, x: np.ndarray, i: int, scheme: FiniteDifferenceScheme) -> np.ndarray:
    h = scheme.step
    e = np.zeros_like(x)
    e[i] = h
    if scheme.order == 2:
        return (_checked(fn, x + e) - _checked(fn, x - e)) / (2.0 * h)
    return (
        -_checked(fn, x + 2 * e)
        + 8.0 * _checked(fn, x + e)
        - 8.0 * _checked(fn, x - e)
        + _checked(fn, x - 2 * e)
    ) / (12.0 * h)


def grad(
    f: Callable[[np.ndarray], float],
    x,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """Central-difference gradient of a scalar map."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return np.array([float(_partial(f, x, i, scheme)) for i in range(x.shape[0])])


def jacobian_of_matrix_field(
    Mf: Callable[[np.ndarray], np.ndarray],
    q,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> List[np.ndarray]:
    """Entrywise partial derivatives [d M / d q_i for i in range(n)]."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    return [np.atleast_2d(_partial(Mf, q, i, scheme)) for i in range(q.shape[0])]


def directional_derivative_of_matrix_field(
    Mf: Callable[[np.ndarray], np.ndarray],
    q,
    direction,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
) -> np.ndarray:
    """d/dt M(q(t)) for q' = direction."""
    partials = jacobian_of_matrix_field(Mf, q, scheme)
    return sum(d * part for d, part in zip(np.asarray(direction, dtype=float), partials))


def hessian(f: Callable[[np.ndarray], float], x, step: float = 1e-4) -> np.ndarray:
    """Symmetric second-difference Hessian of a scalar map."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n = x.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = step
            ej[j] = step
            value = (
                float(_checked(f, x + ei + ej))
                - float(_checked(f, x + ei - ej))
                - float(_checked(f, x - ei + ej))
                + float(_checked(f, x - ei - ej))
            ) / (4.0 * step * step)
            out[i, j] = out[j, i] = value
    return out


def solve_linear(A: np.ndarray, b: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Solve A x = b, converting singularity into RankError."""
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        raise RankError(f"{name} is singular", np.linalg.svd(A, compute_uv=False))


def quadratic_form_gradient(
    matrix_field: Callable[[np.ndarray], np.ndarray],
    q,
    v,
    scheme: FiniteDifferenceScheme = DEFAULT_SCHEME,
    constant: bool = False,
    matrix_gradient: Optional[Callable[[np.ndarray], List[np.ndarray]]] = None,
) -> np.ndarray:
    """Gradient in q of 1/2 v^T A(q)^{-1} v with v held fixed."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    v = np.asarray(v, dtype=float)
    if constant:
        return np.zeros_like(q)
    if matrix_gradient is not None:
        w = solve_linear(matrix_field(q), v)
        return np.array([-0.5 * w @ dA @ w for dA in matrix_gradient(q)])
    return grad(lambda x: 0.5 * v @ solve_linear(matrix_field(x), v), q, scheme)


def _require_full_column_rank(G: np.ndarray) -> np.ndarray:
    G = np.atleast_2d(np.asarray(G, dtype=float))
    n, m = G.shape
    if m > n:
        raise ContractError(f"Expected a tall matrix, got shape {G.shape}")
    singular_values = np.linalg.svd(G, compute_uv=False)
    if singular_values.size == 0 or singular_values[-1] <= RANK_TOL:
        raise RankError(f"Input map of shape {G.shape} is rank deficient", singular_values)
    return G


def left_annihilator(G) -> np.ndarray:
    """Orthonormal full-row-rank G_perp with G_perp @ G = 0.

    Each row is sign-fixed so that its first nonzero entry is positive.
    """
    G = _require_full_column_rank(G)
    annihilator = null_space(G.T).T
    for row in annihilator:
        nonzero = np.flatnonzero(np.abs(row) > 1e-12)
        if nonzero.size and row[nonzero[0]] < 0:
            row *= -1.0
    return annihilator


def pseudo_inverse_tall(G) -> np.ndarray:
    """Left inverse (G^T G)^{-1} G^T of a full-column-rank matrix."""
    G = _require_full_column_rank(G)
    return np.linalg.solve(G.T @ G, G.T)
