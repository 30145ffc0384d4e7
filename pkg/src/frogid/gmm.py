"""Diagonal-covariance Gaussian mixture models trained by EM.

Each frog species is represented by one mixture over cepstral feature frames.
Training is maximum-likelihood EM seeded by k-means++ (means), the
per-dimension data variance (every component's initial covariance diagonal),
and uniform mixing weights. All density arithmetic runs in the log domain
with log-sum-exp; with 20 dimensions and up to 64 components the linear
domain underflows immediately.
"""

import logging

import numpy as np
from scipy.special import logsumexp
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import TooFewFrames
from .validation import check_feature_matrix, check_frame

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


def kmeans_plus_plus(X, k, rng):
    """k-means++ seeding: first center uniform, then proportional to the
    squared distance to the nearest chosen center."""
    n = len(X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    d2 = np.square(X - centers[0]).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:  # all points coincide with a chosen center
            idx = rng.integers(n)
        centers[i] = X[idx]
        d2 = np.minimum(d2, np.square(X - centers[i]).sum(axis=1))
    return centers


def _lloyd(X, centers, max_iter=50):
    """Standard k-means refinement; empty clusters grab the farthest point."""
    assign = None
    for _ in range(max_iter):
        d2 = (
            np.square(X).sum(axis=1)[:, None]
            - 2.0 * X @ centers.T
            + np.square(centers).sum(axis=1)[None, :]
        )
        new_assign = d2.argmin(axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(len(centers)):
            mask = assign == j
            if mask.any():
                centers[j] = X[mask].mean(axis=0)
            else:
                centers[j] = X[d2.min(axis=1).argmax()]
    return centers


def kmeans_pp_init(X, n_components, seed=0, kmeans_iterations=50):
    """Initial mixture parameters: k-means++ means after Lloyd refinement,
    per-dimension data variance for every component, uniform weights."""
    X = check_feature_matrix(X)
    if len(X) < n_components:
        raise TooFewFrames(f"{len(X)} frames < {n_components} components")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    centers = kmeans_plus_plus(X, n_components, rng)
    means = _lloyd(X, centers, max_iter=kmeans_iterations)
    data_var = X.var(axis=0)
    variances = np.tile(data_var, (n_components, 1))
    weights = np.full(n_components, 1.0 / n_components)
    return weights, means, variances


def _joint_log_likelihood(X, weights, means, variances):
    """(T, M) matrix of log(w_i) + log N(x_t; mu_i, diag(v_i)).

    Expands the Mahalanobis term into three matrix products so no T x M x D
    intermediate is materialized.
    """
    inv_v = 1.0 / variances
    log_norm = -0.5 * (X.shape[1] * LOG_2PI + np.log(variances).sum(axis=1))
    quad = (
        np.square(X) @ inv_v.T
        - 2.0 * (X @ (means * inv_v).T)
        + (np.square(means) * inv_v).sum(axis=1)[None, :]
    )
    return np.log(weights)[None, :] + log_norm[None, :] - 0.5 * quad


class DiagonalGmm(BaseEstimator):
    """Gaussian mixture with diagonal covariances, fitted by EM.

    Parameters
    ----------
    n_components : mixture order M.
    max_iterations : EM iteration cap.
    tolerance : convergence threshold on the change in per-frame mean
        log-likelihood between iterations.
    variance_floor : per-dimension floor, as a fraction of the data variance
        in that dimension, applied after every M-step.
    kmeans_iterations : refinement cap for the k-means++ initialization.
    random_state : seed for the initialization.

    Attributes (after fit)
    ----------------------
    weights_, means_, variances_ : the mixture parameters.
    log_likelihood_trajectory_ : per-frame mean log-likelihood at each
        E-step; non-decreasing up to floating-point slack.
    n_iter_, converged_ : EM bookkeeping.
    """

    def __init__(self, n_components=64, max_iterations=200, tolerance=1e-6,
                 variance_floor=1e-4, kmeans_iterations=50, random_state=0):
        self.n_components = n_components
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.variance_floor = variance_floor
        self.kmeans_iterations = kmeans_iterations
        self.random_state = random_state

    # -- training ---------------------------------------------------------

    def fit(self, X, y=None):
        X = check_feature_matrix(X)
        n, dim = X.shape
        if n < self.n_components:
            raise TooFewFrames(f"{n} frames < {self.n_components} components")

        weights, means, variances = kmeans_pp_init(
            X, self.n_components, seed=self.random_state,
            kmeans_iterations=self.kmeans_iterations,
        )
        data_var = X.var(axis=0)
        floor = np.maximum(self.variance_floor * data_var, 1e-12)
        variances = np.maximum(variances, floor)

        X_sq = np.square(X)
        trajectory = []
        converged = False
        n_iter = 0
        for _ in range(self.max_iterations):
            joint = _joint_log_likelihood(X, weights, means, variances)
            frame_ll = logsumexp(joint, axis=1)
            avg_ll = float(frame_ll.mean())
            trajectory.append(avg_ll)
            if len(trajectory) > 1 and abs(avg_ll - trajectory[-2]) < self.tolerance:
                converged = True
                break

            resp = np.exp(joint - frame_ll[:, None])
            mass = resp.sum(axis=0)
            safe_mass = np.maximum(mass, 1e-10)
            weights = mass / mass.sum()
            means = (resp.T @ X) / safe_mass[:, None]
            second_moment = (resp.T @ X_sq) / safe_mass[:, None]
            variances = np.maximum(second_moment - np.square(means), floor)
            dead = np.flatnonzero(mass < 1e-10)
            if dead.size:
                # a component lost all responsibility mass: restart it on the
                # worst-explained frame instead of aborting
                worst = int(frame_ll.argmin())
                for j in dead:
                    logger.warning("reinitializing dead component %d on frame %d", j, worst)
                    means[j] = X[worst]
                    variances[j] = np.maximum(data_var, floor)
                    weights[j] = 1.0 / n
                weights = weights / weights.sum()
            n_iter += 1

        self.weights_ = weights
        self.means_ = means
        self.variances_ = variances
        self.dim_ = dim
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.log_likelihood_trajectory_ = np.array(trajectory)
        self.log_likelihood_ = trajectory[-1]
        return self

    # -- scoring ----------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("this DiagonalGmm is not fitted yet")

    def score_samples(self, X):
        """Log mixture density of each frame (row of X)."""
        self._check_fitted()
        X = check_feature_matrix(X, dim=self.dim_)
        out = np.empty(len(X))
        block = 8192  # keeps the (block, M) joint matrix small
        for lo in range(0, len(X), block):
            chunk = X[lo:lo + block]
            joint = _joint_log_likelihood(chunk, self.weights_, self.means_, self.variances_)
            out[lo:lo + block] = logsumexp(joint, axis=1)
        return out

    def log_density(self, frame):
        """Log mixture density of a single D-vector."""
        self._check_fitted()
        frame = check_frame(frame, self.dim_)
        return float(self.score_samples(frame[None, :])[0])

    def score(self, X, y=None):
        """Per-frame mean log-likelihood of a feature matrix (the
        duration-normalized segment score used for classification)."""
        return float(self.score_samples(X).mean())

    # -- persistence ------------------------------------------------------

    def to_arrays(self):
        self._check_fitted()
        return {
            "weights": self.weights_.tolist(),
            "means": self.means_.tolist(),
            "variances": self.variances_.tolist(),
        }

    @classmethod
    def from_arrays(cls, weights, means, variances, **params):
        weights = np.asarray(weights, dtype=np.float64)
        means = np.asarray(means, dtype=np.float64)
        variances = np.asarray(variances, dtype=np.float64)
        model = cls(n_components=len(weights), **params)
        model.weights_ = weights
        model.means_ = means
        model.variances_ = variances
        model.dim_ = means.shape[1]
        model.n_iter_ = 0
        model.converged_ = True
        model.log_likelihood_trajectory_ = np.array([])
        model.log_likelihood_ = float("nan")
        return model


def avg_log_likelihood(model, features):
    """Mean per-frame log density of a feature matrix under a model."""
    return model.score(features)
