"""Inexact augmented Lagrangian solver for kappa-group-sparse regression.

The problem ``min ||L - D^T X||_F^2 + lambda * sum_i ||C_i||_F  s.t. C = D`` is
split into a ridge-like D-step with closed form, a group soft-thresholding
C-step whose threshold is re-chosen every iteration so that exactly the
``kappa`` strongest groups survive, and a multiplier/penalty update.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import linalg

from tgsr.problem import AugmentedProblem, ObjectiveBreakdown, group_norms, problem_breakdown

logger = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverOptions:
    kappa: int
    mu0: float = 0.1
    rho: float = 1.2
    mu_max: float = 1e6
    epsilon: float = 1e-6
    max_iter: int = 500

    def __post_init__(self):
        if isinstance(self.kappa, bool) or int(self.kappa) != self.kappa or self.kappa < 1:
            raise ValueError(f"kappa must be an integer >= 1, got {self.kappa}")
        if not 0 < self.mu0 <= self.mu_max:
            raise ValueError(f"need 0 < mu0 <= mu_max, got mu0={self.mu0}, mu_max={self.mu_max}")
        if not self.rho > 1:
            raise ValueError(f"rho must be > 1, got {self.rho}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be an integer >= 1, got {self.max_iter}")

    def check_groups(self, K: int) -> None:
        if self.kappa > K:
            raise ValueError(f"kappa={self.kappa} exceeds the group count K={K}")

    def to_dict(self) -> dict:
        return {
            "kappa": int(self.kappa),
            "mu0": self.mu0,
            "rho": self.rho,
            "mu_max": self.mu_max,
            "epsilon": self.epsilon,
            "max_iter": int(self.max_iter),
        }


@dataclass
class SolverState:
    C: np.ndarray
    D: np.ndarray
    P: np.ndarray
    mu: float
    K: int
    iter: int = 0
    lambda_eff: float = 0.0

    @classmethod
    def initial(cls, problem: AugmentedProblem, mu0: float) -> "SolverState":
        shape = (problem.Kd, problem.C)
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape), float(mu0), problem.K)


@dataclass
class SolveResult:
    C_hat: np.ndarray
    iterations: int
    feasibility_history: list[float]
    objective_history: list[ObjectiveBreakdown]
    converged: bool
    selected_groups: list[int]
    lambda_history: list[float] = field(default_factory=list)


class _DSystem:
    """Solves ``(mu I + 2 X X^T) D = R`` for changing ``mu``.

    ``reduced`` goes through the ``n x n`` Gram matrix ``X^T X`` (matrix
    inversion lemma); ``direct`` factors the ``Kd x Kd`` system itself.
    """

    def __init__(self, problem: AugmentedProblem, method: str = "auto"):
        X = problem.X_tilde
        Kd, n = X.shape
        if method == "auto":
            method = "reduced" if Kd > n else "direct"
        if method not in ("reduced", "direct"):
            raise ValueError(f"unknown D-update method {method!r}")
        self.method = method
        self.XL2 = 2.0 * (X @ problem.L_tilde.T)
        if method == "reduced":
            evals, Q = linalg.eigh(X.T @ X)
            self.evals = np.clip(evals, 0.0, None)
            self.W = X @ Q
        else:
            self.XXt2 = 2.0 * (X @ X.T)

    def solve(self, R: np.ndarray, mu: float) -> np.ndarray:
        if self.method == "reduced":
            inner = (self.W.T @ R) / (self.evals + 0.5 * mu)[:, None]
            return (R - self.W @ inner) / mu
        A = self.XXt2 + mu * np.eye(self.XXt2.shape[0])
        try:
            return linalg.cho_solve(linalg.cho_factor(A, check_finite=False), R, check_finite=False)
        except linalg.LinAlgError as exc:  # A is positive definite for mu > 0
            raise SolverError(f"D-update linear solve failed: {exc}") from exc


def update_D(state: SolverState, problem: AugmentedProblem, method: str = "auto", system: _DSystem | None = None):
    """Closed-form minimizer over D of the augmented Lagrangian."""
    if not state.mu > 0:
        raise ValueError("mu must be > 0")
    if system is None:
        system = _DSystem(problem, method)
    R = system.XL2 + state.P + state.mu * state.C
    return system.solve(R, state.mu)


def update_C(state: SolverState, kappa: int) -> tuple[np.ndarray, float]:
    """Group soft-thresholding of ``D - P/mu`` keeping at most ``kappa`` groups.

    The threshold ``lambda/mu`` is the (kappa+1)-th largest group norm, so the
    returned ``lambda`` is ``mu * d_(kappa+1)`` (zero when ``kappa == K``).
    """
    K, mu = state.K, state.mu
    if not mu > 0:
        raise ValueError("mu must be > 0")
    if not 1 <= kappa <= K:
        raise ValueError(f"kappa must lie in [1, {K}], got {kappa}")
    V = state.D - state.P / mu
    blocks = V.reshape(K, -1)
    norms = np.linalg.norm(blocks, axis=1)
    order = np.argsort(-norms, kind="stable")
    thresh = norms[order[kappa]] if kappa < K else 0.0
    keep = norms > thresh
    factor = np.zeros(K)
    factor[keep] = (norms[keep] - thresh) / norms[keep]
    C = blocks * factor[:, None]
    C[~keep] = 0.0
    C = C.reshape(V.shape)
    return C, mu * thresh


def update_multipliers(state: SolverState, opts: SolverOptions) -> SolverState:
    # Dual ascent for the +tr[P^T (C - D)] coupling term.
    P = state.P + state.mu * (state.C - state.D)
    mu = min(opts.rho * state.mu, opts.mu_max)
    return SolverState(state.C, state.D, P, mu, state.K, state.iter, state.lambda_eff)


def converged(state: SolverState, epsilon: float) -> bool:
    return bool(np.max(np.abs(state.C - state.D)) < epsilon)


def solve(
    problem: AugmentedProblem,
    opts: SolverOptions,
    *,
    track_objective: bool = True,
    callback: Callable[[dict], None] | None = None,
    method: str = "auto",
) -> SolveResult:
    """Run the IALM iteration from ``C = P = 0`` and return the final ``C``.

    Non-convergence within ``opts.max_iter`` is reported through
    ``SolveResult.converged``; a non-finite iterate raises :class:`SolverError`.
    """
    opts.check_groups(problem.K)
    system = _DSystem(problem, method)
    state = SolverState.initial(problem, opts.mu0)
    feas_hist: list[float] = []
    obj_hist: list[ObjectiveBreakdown] = []
    lam_hist: list[float] = []
    is_converged = False

    for it in range(1, opts.max_iter + 1):
        state.iter = it
        state.D = update_D(state, problem, system=system)
        state.C, state.lambda_eff = update_C(state, opts.kappa)
        if not (np.all(np.isfinite(state.D)) and np.all(np.isfinite(state.C))):
            raise SolverError(f"non-finite iterate at iteration {it}")
        feas = float(np.max(np.abs(state.C - state.D)))
        feas_hist.append(feas)
        lam_hist.append(state.lambda_eff)
        if track_objective:
            obj = problem_breakdown(state.C, problem)
            obj_hist.append(obj)
        if callback is not None:
            rec = {"iter": it, "feasibility": feas}
            if track_objective:
                rec.update(regression=obj.regression, mmd=obj.mmd, group_norm_sum=obj.group_norm_sum)
            callback(rec)
        is_converged = converged(state, opts.epsilon)
        state = update_multipliers(state, opts)
        if is_converged:
            break

    if not is_converged:
        logger.warning("no convergence after %d iterations (feasibility %.3g)", opts.max_iter, feas_hist[-1])
    C_hat = state.C
    selected = [int(i) for i in np.flatnonzero(group_norms(C_hat, problem.K) > 0)]
    return SolveResult(C_hat, state.iter, feas_hist, obj_hist, is_converged, selected, lam_hist)
