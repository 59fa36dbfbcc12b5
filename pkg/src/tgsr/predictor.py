"""Label prediction: project regression scores onto the probability simplex."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class PredictedLabel:
    distribution: np.ndarray
    class_index: int
    category_name: str


def score(C_hat, x, K: int | None = None) -> np.ndarray:
    """Regression output ``sum_i C_i^T x_i`` for one feature vector.

    With ``K`` given the sum runs group by group, otherwise as one product.
    """
    C_hat = np.asarray(C_hat, dtype=float)
    x = np.asarray(x, dtype=float)
    if C_hat.ndim != 2 or x.shape != (C_hat.shape[0],):
        raise ValueError(f"feature vector of shape {x.shape} does not match regression matrix {C_hat.shape}")
    if K is None:
        return C_hat.T @ x
    if C_hat.shape[0] % K:
        raise ValueError(f"{C_hat.shape[0]} rows do not split into {K} groups")
    d = C_hat.shape[0] // K
    v = np.zeros(C_hat.shape[1])
    for i in range(K):
        v += C_hat[i * d:(i + 1) * d].T @ x[i * d:(i + 1) * d]
    return v


def project_simplex(v) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{l : l >= 0, sum(l) = 1}``.

    Sort-and-threshold: with ``u`` sorted descending, the support size is the
    largest ``r`` with ``u_r + (1 - sum_{j<=r} u_j) / r > 0``.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D vector")
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project a non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    r = np.flatnonzero(u * ks + 1.0 - css > 0)[-1]
    theta = (css[r] - 1.0) / (r + 1)
    return np.maximum(v - theta, 0.0)


def classify(C_hat, x, categories: Sequence[str] | None = None) -> PredictedLabel:
    dist = project_simplex(score(C_hat, x))
    # np.argmax returns the first maximum: lowest index wins ties.
    idx = int(np.argmax(dist))
    name = str(categories[idx]) if categories is not None else str(idx)
    return PredictedLabel(dist, idx, name)


def classify_batch(C_hat, X) -> tuple[np.ndarray, np.ndarray]:
    """Classify every column of ``X``; returns (class indices, ``N x C`` distributions)."""
    C_hat = np.asarray(C_hat, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != C_hat.shape[0]:
        raise ValueError(f"feature matrix of shape {X.shape} does not match regression matrix {C_hat.shape}")
    scores = C_hat.T @ X
    dists = np.array([project_simplex(v) for v in scores.T]).reshape(X.shape[1], C_hat.shape[1])
    return np.argmax(dists, axis=1), dists
