"""Click classification: Gaussian discriminant posterior smoothed by a
two-state Markov filter (state 0 = no click, state 1 = click)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LDAModel:
    """Two-class shared-covariance Gaussian classifier in logit form."""
    mean_off: np.ndarray
    mean_on: np.ndarray
    covariance: np.ndarray
    priors: tuple[float, float]  # (off, on)
    ridge_eps: float  # regularization actually applied (0 if none needed)
    # cached discriminant: logit(x) = w @ x + b
    w: np.ndarray
    b: float


def fit_lda(X: np.ndarray, labels: np.ndarray,
            ridge: float = 0.0) -> LDAModel:
    """Fit class means, pooled covariance, and priors from binary labels.

    A singular pooled covariance is ridge-regularized; the epsilon that made
    it invertible is recorded on the model.
    """
    X = np.asarray(X, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise ValueError("X rows must match labels")
    n_on = int(labels.sum())
    n_off = int((~labels).sum())
    if n_on < 2 or n_off < 2:
        raise ValueError("need at least 2 samples of each class")
    x_on, x_off = X[labels], X[~labels]
    mean_on = x_on.mean(axis=0)
    mean_off = x_off.mean(axis=0)
    centered = np.vstack([x_on - mean_on, x_off - mean_off])
    cov = centered.T @ centered / (len(X) - 2)
    priors = (n_off / len(X), n_on / len(X))

    eps = ridge
    scale = max(float(np.trace(cov)) / cov.shape[0], 1e-12)
    while True:
        try:
            reg = cov + eps * np.eye(cov.shape[0])
            cov_inv = np.linalg.inv(reg)
            # reject numerically hopeless inverses
            if not np.all(np.isfinite(cov_inv)):
                raise np.linalg.LinAlgError
            break
        except np.linalg.LinAlgError:
            eps = max(eps * 10.0, scale * 1e-10)
            if eps > scale * 1e3:
                raise ValueError("covariance could not be regularized")
    if eps > 0.0:
        logger.warning("LDA covariance regularized with eps=%g", eps)

    w = cov_inv @ (mean_on - mean_off)
    b = (-0.5 * (mean_on @ cov_inv @ mean_on - mean_off @ cov_inv @ mean_off)
         + np.log(priors[1] / priors[0]))
    return LDAModel(mean_off, mean_on, cov + eps * np.eye(cov.shape[0]),
                    priors, eps, w, float(b))


def lda_posterior(x: np.ndarray, model: LDAModel) -> float:
    """P(click | features) under the shared-covariance Gaussian model."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.w.shape[0]:
        raise ValueError("feature dimension does not match LDA model")
    logit = float(x @ model.w + model.b)
    # logistic, stable for large |logit|
    if logit >= 0:
        return 1.0 / (1.0 + np.exp(-logit))
    e = np.exp(logit)
    return float(e / (1.0 + e))


@dataclass(frozen=True)
class HMMModel:
    """Two-state transition model; row s holds P(next | current=s)."""
    transition: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.transition, dtype=float)
        if t.shape != (2, 2) or np.any(t < 0):
            raise ValueError("transition must be a non-negative 2x2 matrix")
        if np.any(np.abs(t.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("transition rows must sum to 1 within 1e-12")
        object.__setattr__(self, "transition", t)

    def stationary(self) -> np.ndarray:
        """Stationary distribution of the chain (uniform for a periodic or
        degenerate chain where it is not unique)."""
        t = self.transition
        # solve pi = pi T with sum(pi) = 1
        a = np.vstack([(t.T - np.eye(2)), np.ones(2)])
        b = np.array([0.0, 0.0, 1.0])
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        pi = np.clip(pi, 0.0, None)
        s = pi.sum()
        return pi / s if s > 0 else np.array([0.5, 0.5])


def fit_transition(labels, smoothing: float = 1.0) -> HMMModel:
    """Estimate the 2x2 transition matrix from a binary label sequence with
    additive smoothing so no transition has probability exactly 0 or 1."""
    seq = np.asarray(labels).astype(int)
    if seq.ndim != 1 or len(seq) < 2:
        raise ValueError("need a 1-D label sequence of length >= 2")
    counts = np.full((2, 2), smoothing, dtype=float)
    for a, b in zip(seq[:-1], seq[1:]):
        counts[a, b] += 1.0
    return HMMModel(counts / counts.sum(axis=1, keepdims=True))


def hmm_filter_step(belief: np.ndarray, lda_prob: float,
                    model: HMMModel) -> tuple[np.ndarray, bool]:
    """One forward-filter step.

    Predict through the transition matrix, weight by the emission likelihood
    (the discriminant posterior acts as a Bernoulli likelihood for the ON
    state), renormalize, and threshold the ON belief at 0.5.
    """
    belief = np.asarray(belief, dtype=float)
    if belief.shape != (2,):
        raise ValueError("belief must be a length-2 vector")
    predicted = model.transition.T @ belief
    posterior = predicted * np.array([1.0 - lda_prob, lda_prob])
    total = posterior.sum()
    if total <= 0.0:
        logger.warning("degenerate click belief; resetting to stationary")
        posterior = model.stationary()
    else:
        posterior = posterior / total
    return posterior, bool(posterior[1] > 0.5)
