from typing import Any, Optional, Sequence

import numpy as np


class IdaVerifyError(Exception):
    """Base class for every error raised by the toolkit."""


class ContractError(IdaVerifyError, ValueError):
    """Precondition violated by the caller (dimensions, step sizes, options)."""


class EvaluationError(IdaVerifyError):
    """A user-supplied map returned a non-finite value."""

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        self.point = None if point is None else np.asarray(point, dtype=float).tolist()
        if self.point is not None:
            message = f"{message} at point {self.point}"
        super().__init__(message)


class RankError(IdaVerifyError):
    """A matrix expected to have full rank does not."""

    def __init__(self, message: str, singular_values: Sequence[float] = ()):
        self.singular_values = [float(s) for s in singular_values]
        super().__init__(f"{message} (singular values: {self.singular_values})")


class InfeasibleMatchingError(IdaVerifyError):
    """The annihilated matching residual exceeds the feasibility tolerance."""

    def __init__(self, residual: np.ndarray, tolerance: float):
        self.residual = np.asarray(residual, dtype=float)
        self.tolerance = tolerance
        super().__init__(
            f"Matching equation infeasible: |residual|={np.linalg.norm(self.residual):.3e} "
            f"exceeds tolerance {tolerance:.1e} (residual={self.residual.tolist()})"
        )


class NoKernelError(IdaVerifyError):
    """G^T Md^{-1} has a trivial kernel (fully actuated system)."""


class DomainError(IdaVerifyError):
    """A field is undefined somewhere on the declared sampling domain."""


class DivergenceError(IdaVerifyError):
    """Integration produced a non-finite or runaway state."""

    def __init__(self, last_time: float, trajectory: Any = None):
        self.last_time = last_time
        self.trajectory = trajectory
        super().__init__(f"Integration diverged after t={last_time:.6g}")


class ConfigError(IdaVerifyError):
    """Run configuration or referenced files are invalid."""
