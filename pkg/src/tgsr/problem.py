"""Mean-discrepancy augmented regression problem and objective diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tgsr.grouped_data import DomainPair


@dataclass(frozen=True)
class AugmentedProblem:
    """Regression problem with the domain term folded in as one extra sample.

    ``X_tilde = [X_s, sqrt(xi) * mean_gap]`` and ``L_tilde = [L_s, 0]``, so
    ``||L_tilde - C^T X_tilde||_F^2`` equals the source residual plus
    ``xi`` times the mean discrepancy of the regression outputs.
    """

    L_tilde: np.ndarray
    X_tilde: np.ndarray
    mean_gap: np.ndarray
    K: int
    d: int
    C: int
    Ns: int
    Nt: int
    xi: float

    @property
    def Kd(self) -> int:
        return self.K * self.d


@dataclass(frozen=True)
class ObjectiveBreakdown:
    regression: float
    mmd: float
    group_norm_sum: float
    total_augmented: float


def _mean_gap(pair: DomainPair) -> np.ndarray:
    return pair.source.data.mean(axis=1) - pair.target.data.mean(axis=1)


def build_augmented_problem(pair: DomainPair, xi: float) -> AugmentedProblem:
    xi = float(xi)
    if not xi >= 0:
        raise ValueError(f"xi must be >= 0, got {xi}")
    gap = _mean_gap(pair)
    X_tilde = np.hstack([pair.source.data, np.sqrt(xi) * gap[:, None]])
    L_tilde = np.hstack([pair.source_labels.data, np.zeros((pair.C, 1))])
    for a in (X_tilde, L_tilde, gap):
        a.setflags(write=False)
    return AugmentedProblem(L_tilde, X_tilde, gap, pair.K, pair.d, pair.C, pair.source.N, pair.target.N, xi)


def _check_C(Cmat, Kd, C):
    Cmat = np.asarray(Cmat, dtype=float)
    if Cmat.shape != (Kd, C):
        raise ValueError(f"regression matrix has shape {Cmat.shape}, expected {(Kd, C)}")
    return Cmat


def group_norms(Cmat: np.ndarray, K: int) -> np.ndarray:
    """Frobenius norm of each of the ``K`` row blocks of ``Cmat``."""
    Cmat = np.asarray(Cmat)
    return np.linalg.norm(Cmat.reshape(K, -1), axis=1)


def mmd_value(Cmat, pair: DomainPair) -> float:
    """Squared distance between mean source and mean target regression outputs."""
    Cmat = _check_C(Cmat, pair.K * pair.d, pair.C)
    src = Cmat.T @ pair.source.data.mean(axis=1)
    tgt = Cmat.T @ pair.target.data.mean(axis=1)
    return float(np.sum((src - tgt) ** 2))


def objective_breakdown(Cmat, pair: DomainPair, xi: float) -> ObjectiveBreakdown:
    Cmat = _check_C(Cmat, pair.K * pair.d, pair.C)
    resid = pair.source_labels.data - Cmat.T @ pair.source.data
    regression = float(np.sum(resid ** 2))
    mmd = mmd_value(Cmat, pair)
    return ObjectiveBreakdown(regression, mmd, float(group_norms(Cmat, pair.K).sum()), regression + xi * mmd)


def problem_breakdown(Cmat: np.ndarray, problem: AugmentedProblem) -> ObjectiveBreakdown:
    """Same quantities as :func:`objective_breakdown`, from the augmented problem alone."""
    out = Cmat.T @ problem.X_tilde[:, :problem.Ns]
    regression = float(np.sum((problem.L_tilde[:, :problem.Ns] - out) ** 2))
    mmd = float(np.sum((Cmat.T @ problem.mean_gap) ** 2))
    return ObjectiveBreakdown(
        regression, mmd, float(group_norms(Cmat, problem.K).sum()), regression + problem.xi * mmd
    )
