"""Feature libraries: fixed sets of basis functions over state-input pairs.

A library maps a state ``x`` in R^n and an input ``u`` in R^p to a feature
vector in R^m.  The system dynamics are linear in the features, so every
estimation, deviation, and abstraction routine in the package consumes the
same library object.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import FeatureEvaluationError

__all__ = ["FeatureLibrary", "affine_library", "van_der_pol_library"]


@dataclass(frozen=True)
class FeatureLibrary:
    """A deterministic basis-function map ``(x, u) -> R^m``.

    Parameters
    ----------
    names : tuple of str
        One identifier per basis function.
    batch_eval : callable
        Vectorized evaluator mapping ``(X, U)`` with shapes ``(N, n)`` and
        ``(N, p)`` to an ``(N, m)`` array.  Must be deterministic.
    state_dim, input_dim : int
        Expected dimensions of the state and input vectors.
    """

    names: tuple
    batch_eval: Callable = field(repr=False)
    state_dim: int
    input_dim: int

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(str(s) for s in self.names))
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")

    @property
    def m(self):
        """Number of basis functions."""
        return len(self.names)

    def eval(self, x, u):
        """Evaluate the library at a single state-input pair."""
        x = np.asarray(x, dtype=float).reshape(-1)
        u = np.asarray(u, dtype=float).reshape(-1)
        return self.eval_batch(x[None, :], u[None, :])[0]

    def eval_batch(self, X, U):
        """Evaluate the library row-wise on ``(N, n)`` states and ``(N, p)`` inputs."""
        X = np.asarray(X, dtype=float)
        U = np.asarray(U, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.state_dim:
            raise ValueError(f"states must have shape (N, {self.state_dim})")
        if U.ndim != 2 or U.shape[1] != self.input_dim:
            raise ValueError(f"inputs must have shape (N, {self.input_dim})")
        if X.shape[0] != U.shape[0]:
            raise ValueError("states and inputs must have the same number of rows")
        out = np.asarray(self.batch_eval(X, U), dtype=float)
        if out.shape != (X.shape[0], self.m):
            raise FeatureEvaluationError(
                f"library returned shape {out.shape}, expected {(X.shape[0], self.m)}"
            )
        if not np.all(np.isfinite(out)):
            raise FeatureEvaluationError("library returned non-finite features")
        return out


def affine_library(state_dim, input_dim):
    """Features ``[x_1, ..., x_n, u_1, ..., u_p]`` for systems linear in state and input."""
    names = [f"x{i + 1}" for i in range(state_dim)] + [f"u{j + 1}" for j in range(input_dim)]

    def batch(X, U):
        return np.hstack([X, U])

    return FeatureLibrary(tuple(names), batch, state_dim, input_dim)


def van_der_pol_library():
    """Features ``[x1, x2, x1^2 * x2, u]`` of the discretized Van der Pol oscillator."""

    def batch(X, U):
        return np.column_stack([X[:, 0], X[:, 1], X[:, 0] ** 2 * X[:, 1], U[:, 0]])

    return FeatureLibrary(("x1", "x2", "x1^2*x2", "u"), batch, 2, 1)
