"""Cost functions of policies: exact solves, finite compositions, lim sup estimates."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .classify import classify_policy
from .core import ModelSpec, as_cost_vector, assemble_policy, check_policy, ext_matvec
from .errors import NotContractive, SingularSystem


@dataclass(frozen=True)
class LimsupEstimate:
    J: np.ndarray
    burn: int
    window: int
    periodic_detected: bool
    period: int | None = None


def evaluate_contractive(model: ModelSpec, mu: Sequence[int]) -> np.ndarray:
    """Solve ``(I - A_mu) J = b_mu`` for a contractive policy."""
    c = classify_policy(model, mu)
    if not c.contractive:
        raise NotContractive(f"policy {tuple(mu)} is {c.verdict.value} (rho={c.rho:.6g})")
    return _solve_policy(model, mu)


def _solve_policy(model: ModelSpec, mu: Sequence[int], rhs: np.ndarray | None = None) -> np.ndarray:
    pm = assemble_policy(model, mu)
    b = pm.bmu if rhs is None else rhs
    lu = scipy.linalg.lu_factor(np.eye(model.n) - pm.Amu, check_finite=True)
    if np.any(np.diag(lu[0]) == 0.0):
        raise SingularSystem(f"I - A_mu is singular for policy {tuple(mu)}")
    J = scipy.linalg.lu_solve(lu, b)
    scale = max(1.0, float(np.max(np.abs(J))))
    if not np.isfinite(J).all() or (J < -1e-9 * scale).any():
        raise SingularSystem(f"linear solve for policy {tuple(mu)} left the nonnegative orthant")
    return np.maximum(J, 0.0)


def finite_horizon_compose(model: ModelSpec, policy_seq: Sequence[Sequence[int]], J) -> np.ndarray:
    """``T_{mu_0} ... T_{mu_{N-1}} J``, applied right to left."""
    J = as_cost_vector(J, model.n)
    for mu in reversed(list(policy_seq)):
        pm = assemble_policy(model, mu)
        J = pm.bmu + ext_matvec(pm.Amu, J)
    return J


def _detect_period(window: np.ndarray, tol: float) -> int | None:
    # smallest p such that every row matches the row p steps earlier
    w = len(window)
    scale = np.maximum(1.0, np.abs(window).max(axis=0))
    for p in range(1, w // 2 + 1):
        if np.all(np.abs(window[p:] - window[:-p]) <= tol * scale):
            return p
    return None


def estimate_limsup_cost(model: ModelSpec, mu: Sequence[int], burn: int = 1000, window: int = 120,
                         divergence_cap: float = 1e12) -> LimsupEstimate:
    """Estimate ``limsup_N T_mu^N jbar`` from a trailing window of iterates.

    Components that ever exceed ``divergence_cap`` are reported as ``inf`` and
    stay there.  Exact whenever the iterates are eventually periodic with a
    period of at most ``window // 2``; ``periodic_detected`` records that.
    """
    if window < 1:
        raise ValueError("window must be at least 1")
    mu = check_policy(model, mu)
    pm = assemble_policy(model, mu)
    J = np.array(model.jbar, dtype=float)
    diverged = np.zeros(model.n, dtype=bool)
    tail = np.empty((window, model.n))
    for N in range(1, burn + window + 1):
        J = pm.bmu + ext_matvec(pm.Amu, J)
        diverged |= J > divergence_cap
        J[diverged] = np.inf
        if N > burn:
            tail[N - burn - 1] = J
    est = tail.max(axis=0)
    est[diverged] = np.inf
    finite = ~diverged
    period = _detect_period(tail[:, finite], 1e-12) if finite.any() else 1
    return LimsupEstimate(est, burn, window, period is not None, period)
