"""Input validation helpers used across the estimator and pipeline layers."""

import numpy as np

SYMMETRY_TOL = 1e-12


def as_vector(x, size=None, name="x"):
    """Return ``x`` as a 1-D float array, checking finiteness and length."""
    arr = np.asarray(x, dtype=float).reshape(-1)
    if size is not None and arr.size != size:
        raise ValueError(f"{name} must have length {size}, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def as_matrix(a, shape=None, name="matrix"):
    """Return ``a`` as a 2-D float array, optionally checking its shape."""
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if shape is not None and arr.shape != tuple(shape):
        raise ValueError(f"{name} must have shape {tuple(shape)}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_symmetric(a, name="matrix", tol=SYMMETRY_TOL):
    arr = as_matrix(a, name=name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got {arr.shape}")
    if arr.size and np.max(np.abs(arr - arr.T)) > tol:
        raise ValueError(f"{name} must be symmetric within {tol}")
    return 0.5 * (arr + arr.T)


def check_psd(a, name="matrix", tol=1e-12):
    """Validate symmetric positive semidefiniteness; returns the symmetrized matrix."""
    arr = check_symmetric(a, name=name)
    eigvals = np.linalg.eigvalsh(arr)
    if eigvals.size and eigvals[0] < -tol:
        raise ValueError(f"{name} must be positive semidefinite (min eig {eigvals[0]:.3e})")
    return arr


def check_spd(a, name="matrix", tol=0.0):
    """Validate symmetric positive definiteness; returns the symmetrized matrix."""
    arr = check_symmetric(a, name=name)
    eigvals = np.linalg.eigvalsh(arr)
    if eigvals.size == 0 or eigvals[0] <= tol:
        low = eigvals[0] if eigvals.size else float("nan")
        raise ValueError(f"{name} must be positive definite (min eig {low:.3e})")
    return arr


def check_box(lo, hi, name="box"):
    """Validate a per-dimension [lo, hi] box; returns (lo, hi) arrays."""
    lo = as_vector(lo, name=f"{name} lower bound")
    hi = as_vector(hi, size=lo.size, name=f"{name} upper bound")
    if np.any(lo > hi):
        raise ValueError(f"{name} must satisfy lo <= hi in every dimension")
    return lo, hi


def check_probability(p, name="p"):
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {p}")
    return p
