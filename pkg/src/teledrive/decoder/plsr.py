"""Partial least squares regression via iterative deflation (NIPALS).

Each latent pair is found by alternating projections that maximize the
covariance between the predictor and response scores; the fitted latent
pairs collapse into an ordinary regression matrix for prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PLSRModel:
    n_components: int
    x_mean: np.ndarray
    y_mean: np.ndarray
    x_weights: np.ndarray   # (p, k) projection weights
    x_loadings: np.ndarray  # (p, k)
    y_loadings: np.ndarray  # (m, k)
    coef: np.ndarray        # (p, m) regression matrix on centered data

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Predict responses for one feature vector or a sample matrix."""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.coef.shape[0]:
            raise ValueError(
                f"feature dimension {x.shape[-1]} does not match model "
                f"dimension {self.coef.shape[0]}")
        return (x - self.x_mean) @ self.coef + self.y_mean


def plsr_fit(X: np.ndarray, Y: np.ndarray, n_components: int,
             tol: float = 1e-12, max_iter: int = 500) -> PLSRModel:
    """Fit a PLSR model with the given number of latent pairs."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, p = X.shape
    if Y.shape[0] != n:
        raise ValueError("X and Y row counts differ")
    if n_components < 1:
        raise ValueError("need at least one component")
    if n <= n_components:
        raise ValueError("need more samples than components")
    if n_components > p:
        raise ValueError("more components than features")
    if not np.any(X):
        raise ValueError("degenerate X: all zeros")

    x_mean = X.mean(axis=0)
    y_mean = Y.mean(axis=0)
    E = X - x_mean
    F = Y - y_mean
    m = Y.shape[1]

    W = np.empty((p, n_components))
    P = np.empty((p, n_components))
    C = np.empty((m, n_components))

    for k in range(n_components):
        # Seed scores with the response column of largest remaining variance.
        u = F[:, int(np.argmax(F.var(axis=0)))].copy()
        if not np.any(u):
            # Response already fully explained: any direction works; take the
            # dominant remaining predictor direction so deflation stays sane.
            u = E[:, int(np.argmax(E.var(axis=0)))].copy()
            if not np.any(u):
                raise ValueError(f"rank exhausted after {k} components")
        t_old = None
        for _ in range(max_iter):
            w = E.T @ u / (u @ u)
            norm = np.linalg.norm(w)
            if norm == 0.0:
                raise ValueError(f"rank exhausted after {k} components")
            w /= norm
            t = E @ w
            tt = t @ t
            if tt == 0.0:
                raise ValueError(f"rank exhausted after {k} components")
            c = F.T @ t / tt
            cc = c @ c
            if cc == 0.0:
                break  # nothing left to explain; keep the direction
            u = F @ c / cc
            if t_old is not None and np.linalg.norm(t - t_old) <= tol * np.linalg.norm(t):
                break
            t_old = t
        else:
            raise ValueError(f"component {k + 1} did not converge "
                             f"in {max_iter} iterations")
        p_load = E.T @ t / tt
        E = E - np.outer(t, p_load)
        F = F - np.outer(t, c)
        W[:, k], P[:, k], C[:, k] = w, p_load, c

    coef = W @ np.linalg.solve(P.T @ W, C.T)
    return PLSRModel(n_components, x_mean, y_mean, W, P, C, coef)
