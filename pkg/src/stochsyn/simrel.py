"""Deviation bounds and couplings between the model class and the nominal model.

The parametric mismatch at a state-input pair is the mean offset
``gamma = (theta - theta_hat)^T f(x, u)`` between the true and nominal
Gaussian transition kernels.  The mass that a sub-probability coupling of
the two kernels can retain is ``2 Phi(-sqrt(gamma^T Sigma^-1 gamma) / 2)``;
maximizing the offset over the credible ellipsoid yields the per-state
deviation ``delta``.  Discrete couplings (on shared grids) implement the
minimum construction and its completion to a full coupling, used by the
verification tooling.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.special import ndtr

from ._validation import as_matrix, as_vector, check_spd
from .errors import InvariantViolationError, LinearAlgebraError
from .estimation import Posterior
from .features import FeatureLibrary

__all__ = [
    "SimRelation",
    "DiscreteMeasure",
    "DiscreteCoupling",
    "gamma",
    "coupling_mass",
    "delta_bound",
    "delta_exact",
    "build_sub_coupling",
    "complete_coupling",
    "compose_relations",
    "state_mapping",
    "mismatch_radius",
]

_MASS_TOL = 1e-12


@dataclass(frozen=True)
class SimRelation:
    """An (eps, delta) deviation pair; delta may be a per-(cell, input) table."""

    eps: float
    delta: object  # scalar or ndarray
    kind: str = "parametric"

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError("eps must be >= 0")
        delta = self.delta
        if np.ndim(delta) == 0:
            delta = float(delta)
        else:
            delta = np.asarray(delta, dtype=float)
        if np.any(np.asarray(delta) < -_MASS_TOL) or np.any(np.asarray(delta) > 1 + _MASS_TOL):
            raise ValueError("delta entries must lie in [0, 1]")
        object.__setattr__(self, "delta", delta)

    def delta_table(self, shape):
        """Broadcast delta to the requested (cells, inputs) shape."""
        return np.broadcast_to(np.asarray(self.delta, dtype=float), shape).copy()


@dataclass(frozen=True)
class DiscreteMeasure:
    """A nonnegative measure supported on finitely many points."""

    support: np.ndarray
    mass: np.ndarray

    def __post_init__(self):
        support = np.atleast_2d(np.asarray(self.support, dtype=float))
        if support.shape[0] == 1 and np.ndim(self.support) == 1:
            support = support.T
        mass = as_vector(self.mass, size=support.shape[0], name="mass")
        if np.any(mass < 0):
            raise ValueError("mass must be nonnegative")
        if mass.sum() > 1 + _MASS_TOL:
            raise ValueError("total mass must not exceed 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "mass", mass)

    @property
    def total(self):
        return float(self.mass.sum())


@dataclass(frozen=True)
class DiscreteCoupling:
    """A joint weight matrix indexed (support of p_hat) x (support of p)."""

    joint: np.ndarray
    relation_mask: np.ndarray

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=float)
        mask = np.asarray(self.relation_mask, dtype=bool)
        if joint.shape != mask.shape:
            raise ValueError("joint and relation_mask must have equal shapes")
        if np.any(joint < 0):
            raise ValueError("coupling weights must be nonnegative")
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "relation_mask", mask)

    @property
    def total(self):
        return float(self.joint.sum())


def gamma(theta, theta_hat, x, u, lib: FeatureLibrary) -> np.ndarray:
    """Mean offset ``(theta - theta_hat)^T f(x, u)`` between the two kernels."""
    theta = as_matrix(theta, name="theta")
    theta_hat = as_matrix(theta_hat, shape=theta.shape, name="theta_hat")
    return (theta - theta_hat).T @ lib.eval(x, u)


def coupling_mass(gamma_vec, sigma) -> float:
    """Total mass of ``min(N(. | 0, Sigma), N(. | -gamma, Sigma))``.

    Equals ``2 Phi(-sqrt(gamma^T Sigma^-1 gamma) / 2)``, the Gaussian measure
    of the half space where the shifted density dominates, doubled by
    symmetry.
    """
    gamma_vec = as_vector(gamma_vec, name="gamma")
    sigma = check_spd(np.atleast_2d(np.asarray(sigma, dtype=float)), name="sigma")
    sol = scipy.linalg.solve(sigma, gamma_vec, assume_a="pos")
    q = float(gamma_vec @ sol)
    return float(2.0 * ndtr(-0.5 * np.sqrt(max(q, 0.0))))


def mismatch_radius(post: Posterior, sigma) -> float:
    """The factor ``r = ||Sigma^-1|| * ||Sigma_N|| * n * chi2inv(1 - alpha, n)``.

    Spectral norms, computed by symmetric eigendecomposition.  ``sqrt(r)``
    scales the feature norm in the conservative deviation bound.
    """
    sigma = check_spd(np.atleast_2d(np.asarray(sigma, dtype=float)), name="sigma")
    sigma_inv_norm = 1.0 / float(np.linalg.eigvalsh(sigma)[0])
    sigma_n_norm = float(np.linalg.eigvalsh(post.sigma_n)[-1])
    return sigma_inv_norm * sigma_n_norm * post.credible_radius


def _delta_from_sqrt_zeta(sqrt_zeta):
    return float(np.clip(1.0 - 2.0 * ndtr(-0.5 * sqrt_zeta), 0.0, 1.0))


def delta_bound(post: Posterior, sigma, x_hat, u_hat, lib: FeatureLibrary) -> float:
    """Conservative per-state-input deviation ``1 - 2 Phi(-(sqrt(r)/2) ||f||)``."""
    r = mismatch_radius(post, sigma)
    f = lib.eval(x_hat, u_hat)
    return _delta_from_sqrt_zeta(np.sqrt(r) * np.linalg.norm(f))


def delta_bound_from_features(post: Posterior, sigma, features) -> np.ndarray:
    """Vectorized :func:`delta_bound` over precomputed feature rows."""
    r = mismatch_radius(post, sigma)
    norms = np.linalg.norm(np.atleast_2d(np.asarray(features, dtype=float)), axis=1)
    return np.clip(1.0 - 2.0 * ndtr(-0.5 * np.sqrt(r) * norms), 0.0, 1.0)


def delta_exact(post: Posterior, sigma, x_hat, u_hat, lib: FeatureLibrary) -> float:
    """Deviation with the ellipsoid-constrained offset maximized exactly.

    The worst squared Mahalanobis offset over the credible ellipsoid is
    ``zeta = c * lambda_max(Sigma_N^{1/2} A Sigma_N^{1/2})`` where
    ``A = (I_n (x) f) Sigma^-1 (I_n (x) f^T)`` and ``c`` is the credible
    radius; the quadratic-over-ellipsoid maximum is attained at the top
    eigenvector, so no iterative optimization is needed.
    """
    sigma = check_spd(np.atleast_2d(np.asarray(sigma, dtype=float)), name="sigma")
    f = lib.eval(x_hat, u_hat)
    n = post.n
    lift = np.kron(np.eye(n), f[:, None])  # (m*n, n), maps stacked offsets to gamma
    sigma_inv = scipy.linalg.solve(sigma, np.eye(n), assume_a="pos")
    quad = lift @ sigma_inv @ lift.T
    try:
        sqrt_sn = _matrix_sqrt(post.sigma_n)
        lam = np.linalg.eigvalsh(sqrt_sn @ quad @ sqrt_sn)[-1]
    except np.linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"eigendecomposition failed: {exc}") from exc
    zeta = post.credible_radius * max(float(lam), 0.0)
    return _delta_from_sqrt_zeta(np.sqrt(zeta))


def delta_exact_from_features(post: Posterior, sigma, features) -> np.ndarray:
    """Vectorized :func:`delta_exact` over precomputed feature rows."""
    sigma = check_spd(np.atleast_2d(np.asarray(sigma, dtype=float)), name="sigma")
    n = post.n
    sigma_inv = scipy.linalg.solve(sigma, np.eye(n), assume_a="pos")
    sqrt_sn = _matrix_sqrt(post.sigma_n)
    features = np.atleast_2d(np.asarray(features, dtype=float))
    out = np.empty(features.shape[0])
    for i, f in enumerate(features):
        lift = np.kron(np.eye(n), f[:, None])
        lam = np.linalg.eigvalsh(sqrt_sn @ (lift @ sigma_inv @ lift.T) @ sqrt_sn)[-1]
        zeta = post.credible_radius * max(float(lam), 0.0)
        out[i] = _delta_from_sqrt_zeta(np.sqrt(zeta))
    return out


def _matrix_sqrt(a):
    vals, vecs = np.linalg.eigh(a)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


def _match_supports(p_hat: DiscreteMeasure, p: DiscreteMeasure, relation):
    """Resolve the relation into an injective matching i -> j over the supports."""
    kh, kp = p_hat.support.shape[0], p.support.shape[0]
    if p_hat.support.shape[1] != p.support.shape[1]:
        raise ValueError("measures must share the support dimension")
    if isinstance(relation, str) and relation == "identity":
        if kh != kp or not np.allclose(p_hat.support, p.support, atol=1e-12, rtol=0.0):
            raise ValueError("identity relation requires equal supports")
        mask = np.eye(kh, dtype=bool)
    elif isinstance(relation, np.ndarray):
        mask = np.asarray(relation, dtype=bool)
        if mask.shape != (kh, kp):
            raise ValueError(f"relation mask must have shape {(kh, kp)}")
    elif callable(relation):
        mask = np.zeros((kh, kp), dtype=bool)
        for i in range(kh):
            for j in range(kp):
                mask[i, j] = bool(relation(p_hat.support[i], p.support[j]))
    else:
        raise TypeError("relation must be 'identity', a boolean mask, or a predicate")
    if np.any(mask.sum(axis=1) > 1) or np.any(mask.sum(axis=0) > 1):
        raise ValueError(
            "the minimum construction needs an injective matching; the relation "
            "relates some support point to several partners"
        )
    return mask


def build_sub_coupling(p_hat: DiscreteMeasure, p: DiscreteMeasure, relation="identity"):
    """Minimum-of-measures sub-coupling along a matching relation.

    Each related pair ``(i, j)`` receives weight ``min(p_hat_i, p_j)``; all
    other entries are zero.  The result provably satisfies the
    sub-probability coupling conditions (mass confined to the relation,
    marginals dominated), which are re-checked numerically before returning.

    Returns the coupling and its achieved total mass.
    """
    mask = _match_supports(p_hat, p, relation)
    joint = np.zeros(mask.shape)
    rows, cols = np.nonzero(mask)
    joint[rows, cols] = np.minimum(p_hat.mass[rows], p.mass[cols])
    coupling = DiscreteCoupling(joint, mask)
    _check_sub_coupling(coupling, p_hat, p)
    return coupling, coupling.total


def _check_sub_coupling(v: DiscreteCoupling, p_hat: DiscreteMeasure, p: DiscreteMeasure):
    off_mask = float(np.abs(v.joint[~v.relation_mask]).sum()) if v.joint.size else 0.0
    if off_mask > _MASS_TOL:
        raise InvariantViolationError(f"coupling mass off the relation: {off_mask:.3e}")
    row_excess = float(np.max(v.joint.sum(axis=1) - p_hat.mass, initial=0.0))
    col_excess = float(np.max(v.joint.sum(axis=0) - p.mass, initial=0.0))
    if row_excess > _MASS_TOL or col_excess > _MASS_TOL:
        raise InvariantViolationError(
            f"coupling marginals exceed the coupled measures "
            f"(row excess {row_excess:.3e}, col excess {col_excess:.3e})"
        )


def complete_coupling(v: DiscreteCoupling, p_hat: DiscreteMeasure, p: DiscreteMeasure):
    """Complete a sub-coupling to a full coupling of two probability measures.

    Adds the outer product of the residual marginals, normalized by the
    uncoupled mass: ``W = v + (p_hat - v 1)(p - v^T 1)^T / (1 - v(R))``.
    The result has exact marginals ``p_hat`` and ``p`` (within 1e-12).
    """
    _check_sub_coupling(v, p_hat, p)
    row_resid = p_hat.mass - v.joint.sum(axis=1)
    col_resid = p.mass - v.joint.sum(axis=0)
    if np.any(row_resid < -_MASS_TOL) or np.any(col_resid < -_MASS_TOL):
        raise InvariantViolationError("negative residual marginals")
    row_resid = np.clip(row_resid, 0.0, None)
    col_resid = np.clip(col_resid, 0.0, None)
    uncoupled = 1.0 - v.total
    if uncoupled <= _MASS_TOL:
        return v.joint.copy()
    w = v.joint + np.outer(row_resid, col_resid) / uncoupled
    row_err = float(np.max(np.abs(w.sum(axis=1) - p_hat.mass), initial=0.0))
    col_err = float(np.max(np.abs(w.sum(axis=0) - p.mass), initial=0.0))
    if max(row_err, col_err) > 1e-10:
        raise InvariantViolationError(
            f"completed coupling marginals off by {max(row_err, col_err):.3e}; "
            "are p_hat and p probability measures?"
        )
    return np.clip(w, 0.0, None)


def compose_relations(r1: SimRelation, r2: SimRelation) -> SimRelation:
    """Chain two deviation pairs: eps adds, delta adds with clamping at 1."""
    d1, d2 = np.asarray(r1.delta, dtype=float), np.asarray(r2.delta, dtype=float)
    if d1.ndim and d2.ndim and d1.shape != d2.shape:
        raise ValueError(f"delta tables have incompatible shapes {d1.shape} vs {d2.shape}")
    delta = np.clip(d1 + d2, 0.0, 1.0)
    if delta.ndim == 0:
        delta = float(delta)
    return SimRelation(eps=r1.eps + r2.eps, delta=delta, kind="composed")


def state_mapping(x_hat, u_hat, x, u, x_plus, theta_hat, lib: FeatureLibrary) -> np.ndarray:
    """Abstract successor ``x+ + theta_hat^T (f(x_hat, u_hat) - f(x, u))``.

    Deterministic and parameter-free; with identical states and inputs it
    reduces to the concrete successor.
    """
    theta_hat = as_matrix(theta_hat, name="theta_hat")
    x_plus = as_vector(x_plus, name="x_plus")
    diff = lib.eval(x_hat, u_hat) - lib.eval(x, u)
    return x_plus + theta_hat.T @ diff
