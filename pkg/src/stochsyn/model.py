"""Parametric stochastic systems, trajectory sampling, and dataset I/O.

The system model is ``x+ = theta^T f(x, u) + w`` with ``w ~ N(0, sigma)``
and an output ``y = H x``.  Datasets are flat collections of one-step
transitions ``(x, u, x+)`` stored as a CSV with header
``x1,...,xn,u1,...,up,xp1,...,xpn``.
"""

from dataclasses import dataclass, field

import numpy as np

from ._validation import as_matrix, as_vector, check_box, check_psd
from .errors import DatasetParseError
from .features import FeatureLibrary

__all__ = [
    "ParametricSystem",
    "Dataset",
    "step",
    "generate_dataset",
    "save_dataset",
    "load_dataset",
]


@dataclass(frozen=True)
class ParametricSystem:
    """A system ``x+ = theta^T f(x, u) + w`` with Gaussian noise.

    ``theta`` has shape ``(m, n)`` (one column per state dimension), and
    ``sigma`` is the symmetric positive semidefinite noise covariance.  A
    singular ``sigma`` (including zero) is accepted so that the noiseless
    limit can be simulated; estimation and abstraction require a definite
    covariance and validate that themselves.
    """

    lib: FeatureLibrary
    theta: np.ndarray
    sigma: np.ndarray
    output_map: np.ndarray = None

    def __post_init__(self):
        theta = as_matrix(self.theta, name="theta")
        if theta.shape[0] != self.lib.m:
            raise ValueError(
                f"theta must have {self.lib.m} rows (one per feature), got {theta.shape[0]}"
            )
        n = theta.shape[1]
        if n != self.lib.state_dim:
            raise ValueError(
                f"theta must have {self.lib.state_dim} columns (one per state dim)"
            )
        sigma = check_psd(self.sigma, name="sigma")
        if sigma.shape != (n, n):
            raise ValueError(f"sigma must have shape ({n}, {n})")
        output_map = self.output_map
        if output_map is None:
            output_map = np.eye(n)
        output_map = as_matrix(output_map, name="output_map")
        if output_map.shape[1] != n:
            raise ValueError(f"output_map must have {n} columns")
        # Cholesky-like factor of a PSD matrix via eigendecomposition, so the
        # zero-covariance limit yields exactly zero noise.
        eigvals, eigvecs = np.linalg.eigh(sigma)
        noise_factor = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "output_map", output_map)
        object.__setattr__(self, "_noise_factor", noise_factor)

    @property
    def n(self):
        """State dimension."""
        return self.theta.shape[1]

    @property
    def p(self):
        """Input dimension."""
        return self.lib.input_dim

    @property
    def output_dim(self):
        return self.output_map.shape[0]

    def output(self, x):
        return self.output_map @ as_vector(x, size=self.n, name="x")

    def mean_next(self, x, u):
        """Noise-free successor ``theta^T f(x, u)``."""
        return self.theta.T @ self.lib.eval(x, u)


@dataclass(frozen=True)
class Dataset:
    """One-step transition samples ``(x, u, x+)`` stored column-aligned."""

    x: np.ndarray
    u: np.ndarray
    x_plus: np.ndarray

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        x_plus = np.atleast_2d(np.asarray(self.x_plus, dtype=float))
        if not (x.shape[0] == u.shape[0] == x_plus.shape[0]):
            raise ValueError("x, u, x_plus must have the same number of rows")
        if x.shape[1] != x_plus.shape[1]:
            raise ValueError("x and x_plus must have the same dimension")
        for name, arr in (("x", x), ("u", u), ("x_plus", x_plus)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "x_plus", x_plus)

    @property
    def n_samples(self):
        return self.x.shape[0]

    @property
    def rows(self):
        """Iterate samples as ``(x, u, x_plus)`` vector triples."""
        return list(zip(self.x, self.u, self.x_plus))

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.x.shape == other.x.shape
            and self.u.shape == other.u.shape
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.x_plus, other.x_plus)
        )


def step(sys: ParametricSystem, x, u, rng) -> np.ndarray:
    """Draw one successor state ``theta^T f(x, u) + w`` with ``w ~ N(0, sigma)``."""
    x = as_vector(x, size=sys.n, name="x")
    u = as_vector(u, size=sys.p, name="u")
    w = sys._noise_factor @ rng.standard_normal(sys.n)
    return sys.mean_next(x, u) + w


def generate_dataset(sys: ParametricSystem, state_box, input_box, n_samples, rng) -> Dataset:
    """Sample ``n_samples`` transitions with ``(x, u)`` uniform over the given boxes."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    x_lo, x_hi = check_box(*state_box, name="state_box")
    u_lo, u_hi = check_box(*input_box, name="input_box")
    if np.any(x_lo >= x_hi) or np.any(u_lo >= u_hi):
        raise ValueError("sampling boxes must be non-degenerate (lo < hi)")
    if x_lo.size != sys.n or u_lo.size != sys.p:
        raise ValueError("box dimensions must match the system dimensions")
    X = rng.uniform(x_lo, x_hi, size=(n_samples, sys.n))
    U = rng.uniform(u_lo, u_hi, size=(n_samples, sys.p))
    W = rng.standard_normal((n_samples, sys.n)) @ sys._noise_factor.T
    X_plus = sys.lib.eval_batch(X, U) @ sys.theta + W
    return Dataset(X, U, X_plus)


def _header(n, p):
    return (
        [f"x{i + 1}" for i in range(n)]
        + [f"u{j + 1}" for j in range(p)]
        + [f"xp{i + 1}" for i in range(n)]
    )


def save_dataset(ds: Dataset, path) -> None:
    """Write a dataset as CSV with full round-trip precision."""
    n, p = ds.x.shape[1], ds.u.shape[1]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(",".join(_header(n, p)) + "\n")
        for xi, ui, xpi in zip(ds.x, ds.u, ds.x_plus):
            vals = [repr(float(v)) for v in (*xi, *ui, *xpi)]
            fh.write(",".join(vals) + "\n")


def load_dataset(path) -> Dataset:
    """Read a dataset CSV written by :func:`save_dataset`."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip()
        if not header:
            raise DatasetParseError("empty file, expected a header row", line=1)
        cols = header.split(",")
        n = sum(1 for c in cols if c.startswith("x") and not c.startswith("xp"))
        p = sum(1 for c in cols if c.startswith("u"))
        n_plus = sum(1 for c in cols if c.startswith("xp"))
        if n == 0 or n != n_plus or cols != _header(n, p):
            raise DatasetParseError(f"unrecognized header {header!r}", line=1)
        width = 2 * n + p
        xs, us, xps = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != width:
                raise DatasetParseError(
                    f"expected {width} fields, got {len(parts)}", line=lineno
                )
            try:
                vals = [float(v) for v in parts]
            except ValueError as exc:
                raise DatasetParseError(str(exc), line=lineno) from None
            xs.append(vals[:n])
            us.append(vals[n : n + p])
            xps.append(vals[n + p :])
    x = np.asarray(xs, dtype=float).reshape(len(xs), n)
    u = np.asarray(us, dtype=float).reshape(len(us), p)
    xp = np.asarray(xps, dtype=float).reshape(len(xps), n)
    return Dataset(x, u, xp)
