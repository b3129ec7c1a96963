"""Bayesian linear regression over the vectorized parameter matrix.

The unknown parameters ``theta`` (shape ``m x n``) enter the dynamics as
``x+ = theta^T f(x, u) + w``.  The weight vector stacks the per-output
columns, ``theta_bar = [theta_1; ...; theta_n]``, matching the Kronecker
factor order ``Sigma^-1 (x) Phi^T Phi`` of the posterior precision.  The
credible set is the ellipsoid

    (theta_bar - mu_N)^T Sigma_N^-1 (theta_bar - mu_N) <= n * chi2inv(1 - alpha, n).
"""

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats
from sklearn.base import BaseEstimator

from ._validation import as_matrix, as_vector, check_probability, check_spd
from .errors import LinearAlgebraError
from .features import FeatureLibrary
from .model import Dataset

__all__ = [
    "Prior",
    "Posterior",
    "default_prior",
    "design_matrix",
    "posterior",
    "chi2_quantile",
    "in_credible_set",
    "posterior_to_json",
    "posterior_from_json",
    "BayesianRegression",
]


@dataclass(frozen=True)
class Prior:
    """Gaussian prior ``N(mu0, sigma0)`` on the stacked weight vector."""

    mu0: np.ndarray
    sigma0: np.ndarray

    def __post_init__(self):
        mu0 = as_vector(self.mu0, name="mu0")
        sigma0 = check_spd(self.sigma0, name="sigma0")
        if sigma0.shape[0] != mu0.size:
            raise ValueError("sigma0 must match the length of mu0")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "sigma0", sigma0)


def default_prior(m, n, variance=10.0) -> Prior:
    """Zero-mean isotropic prior ``N(0, variance * I)`` on all ``m * n`` weights."""
    return Prior(np.zeros(m * n), variance * np.eye(m * n))


@dataclass(frozen=True)
class Posterior:
    """Posterior ``N(mu_n, sigma_n)`` with the derived estimate and credible radius.

    ``theta_hat`` is ``mu_n`` unstacked back into an ``m x n`` matrix and
    ``credible_radius`` equals ``n * chi2inv(1 - alpha, n)``.  The precision
    matrix is kept alongside so credible-set membership is a plain quadratic
    form without further solves.
    """

    mu_n: np.ndarray
    sigma_n: np.ndarray
    theta_hat: np.ndarray
    alpha: float
    credible_radius: float
    precision: np.ndarray

    @property
    def m(self):
        return self.theta_hat.shape[0]

    @property
    def n(self):
        return self.theta_hat.shape[1]


def stack_theta(theta) -> np.ndarray:
    """Vectorize an ``m x n`` parameter matrix column-by-column."""
    return np.asarray(theta, dtype=float).T.reshape(-1)


def unstack_theta(theta_bar, m, n) -> np.ndarray:
    """Inverse of :func:`stack_theta`."""
    return np.asarray(theta_bar, dtype=float).reshape(n, m).T


def design_matrix(lib: FeatureLibrary, ds: Dataset) -> np.ndarray:
    """The ``N x m`` matrix whose row ``i`` is ``f(x_i, u_i)``."""
    return lib.eval_batch(ds.x, ds.u)


def chi2_quantile(p, nu) -> float:
    """Quantile of the chi-squared distribution with ``nu`` degrees of freedom."""
    p = check_probability(p, name="p")
    nu = int(nu)
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    return float(stats.chi2.ppf(p, nu))


def posterior(prior: Prior, ds: Dataset, sigma_noise, lib: FeatureLibrary, alpha) -> Posterior:
    """Conjugate posterior update from one-step transition data.

    The update is

        precision = sigma0^-1 + sigma^-1 (x) Phi^T Phi
        mu_n      = precision^-1 (sigma0^-1 mu0 + vec(Phi^T X+ sigma^-1))

    with ``X+`` stacked per output dimension.  An empty dataset returns the
    prior verbatim (degenerate but well defined).
    """
    alpha = check_probability(alpha, name="alpha")
    sigma_noise = check_spd(np.atleast_2d(np.asarray(sigma_noise, dtype=float)), name="sigma")
    n = sigma_noise.shape[0]
    m = lib.m
    mn = m * n
    if prior.mu0.size != mn:
        raise ValueError(f"prior dimension {prior.mu0.size} does not match m*n={mn}")

    if ds.n_samples == 0:
        mu_n = prior.mu0.copy()
        sigma_n = prior.sigma0.copy()
        precision = _spd_inverse(prior.sigma0, name="sigma0")
    else:
        if ds.x.shape[1] != n:
            raise ValueError("dataset state dimension does not match sigma")
        phi = design_matrix(lib, ds)
        gram = phi.T @ phi
        sigma0_inv = _spd_inverse(prior.sigma0, name="sigma0")
        sigma_inv = _spd_inverse(sigma_noise, name="sigma")
        precision = sigma0_inv + np.kron(sigma_inv, gram)
        rhs = sigma0_inv @ prior.mu0 + stack_theta(phi.T @ ds.x_plus @ sigma_inv)
        try:
            chol = scipy.linalg.cho_factor(precision, lower=True)
        except scipy.linalg.LinAlgError as exc:
            raise LinearAlgebraError(f"posterior precision not factorizable: {exc}") from exc
        mu_n = scipy.linalg.cho_solve(chol, rhs)
        sigma_n = scipy.linalg.cho_solve(chol, np.eye(mn))
        sigma_n = 0.5 * (sigma_n + sigma_n.T)

    radius = n * chi2_quantile(1.0 - alpha, n)
    return Posterior(
        mu_n=mu_n,
        sigma_n=sigma_n,
        theta_hat=unstack_theta(mu_n, m, n),
        alpha=alpha,
        credible_radius=radius,
        precision=precision,
    )


def _spd_inverse(a, name):
    try:
        chol = scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise LinearAlgebraError(f"{name} is singular or not SPD: {exc}") from exc
    inv = scipy.linalg.cho_solve(chol, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def in_credible_set(post: Posterior, theta) -> bool:
    """Whether an ``m x n`` parameter matrix lies in the credible ellipsoid."""
    theta = as_matrix(theta, shape=(post.m, post.n), name="theta")
    d = stack_theta(theta) - post.mu_n
    return float(d @ (post.precision @ d)) <= post.credible_radius


def posterior_to_json(post: Posterior, path=None):
    """Serialize a posterior; returns the JSON string, optionally writing it."""
    payload = {
        "mu_n": post.mu_n.tolist(),
        "sigma_n": post.sigma_n.reshape(-1).tolist(),
        "theta_hat": post.theta_hat.reshape(-1).tolist(),
        "m": post.m,
        "n": post.n,
        "alpha": post.alpha,
        "credible_radius": post.credible_radius,
    }
    text = json.dumps(payload, indent=1)
    if path is not None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    return text


def posterior_from_json(source) -> Posterior:
    """Rebuild a posterior from :func:`posterior_to_json` output (path or string)."""
    if isinstance(source, (str, bytes)) and "{" in str(source):
        payload = json.loads(source)
    else:
        with open(source, "r", encoding="ascii") as fh:
            payload = json.load(fh)
    m, n = int(payload["m"]), int(payload["n"])
    mu_n = np.asarray(payload["mu_n"], dtype=float)
    sigma_n = np.asarray(payload["sigma_n"], dtype=float).reshape(m * n, m * n)
    precision = _spd_inverse(sigma_n, name="sigma_n")
    return Posterior(
        mu_n=mu_n,
        sigma_n=sigma_n,
        theta_hat=unstack_theta(mu_n, m, n),
        alpha=float(payload["alpha"]),
        credible_radius=float(payload["credible_radius"]),
        precision=precision,
    )


class BayesianRegression(BaseEstimator):
    """Scikit-learn style estimator wrapping the conjugate parameter update.

    ``fit`` consumes ``X`` of shape ``(N, n + p)`` holding state-input rows
    and ``y`` of shape ``(N, n)`` holding successor states; the split point
    is taken from the feature library.  After fitting, ``theta_hat_``,
    ``sigma_n_``, ``credible_radius_``, and ``posterior_`` are available and
    ``predict`` returns the nominal one-step mean.
    """

    def __init__(self, feature_library=None, noise_cov=None, alpha=0.1, prior=None,
                 prior_variance=10.0):
        self.feature_library = feature_library
        self.noise_cov = noise_cov
        self.alpha = alpha
        self.prior = prior
        self.prior_variance = prior_variance

    def _split(self, X):
        lib = self.feature_library
        X = as_matrix(X, name="X")
        if X.shape[1] != lib.state_dim + lib.input_dim:
            raise ValueError(
                f"X must have {lib.state_dim + lib.input_dim} columns "
                f"(state then input), got {X.shape[1]}"
            )
        return X[:, : lib.state_dim], X[:, lib.state_dim :]

    def fit(self, X, y):
        lib = self.feature_library
        if lib is None or self.noise_cov is None:
            raise ValueError("feature_library and noise_cov are required")
        states, inputs = self._split(X)
        y = as_matrix(y, shape=(states.shape[0], lib.state_dim), name="y")
        ds = Dataset(states, inputs, y)
        prior = self.prior
        if prior is None:
            prior = default_prior(lib.m, lib.state_dim, self.prior_variance)
        post = posterior(prior, ds, self.noise_cov, lib, self.alpha)
        self.posterior_ = post
        self.theta_hat_ = post.theta_hat
        self.mu_n_ = post.mu_n
        self.sigma_n_ = post.sigma_n
        self.credible_radius_ = post.credible_radius
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        states, inputs = self._split(X)
        return self.feature_library.eval_batch(states, inputs) @ self.theta_hat_

    def in_credible_set(self, theta):
        return in_credible_set(self.posterior_, theta)
