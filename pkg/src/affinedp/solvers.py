"""Value iteration, policy iteration and delta-perturbation solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classify import classify_policy
from .core import (
    ModelSpec,
    Policy,
    _greedy,
    apply_bellman_map,
    apply_policy_map,
    as_cost_vector,
    check_policy,
    q_values,
)
from .errors import (
    CycleDetected,
    Diverged,
    ImprovedPolicyNotContractive,
    NotContractive,
    NotContractiveStart,
    NotConverging,
)
from .policy_eval import _solve_policy

DIVERGENCE_CAP = 1e12


class Status(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class SolveReport:
    """Outcome of an iterative solve.

    ``regime`` says where the start vector sat relative to its own image
    (``below``: J0 <= TJ0, ``above``: J0 >= TJ0, else ``mixed``).  VI started
    below can stop at a fixed point smaller than the largest one.  ``trace``
    holds the intermediate cost vectors for PI and for the delta schedule.
    """

    J: np.ndarray
    policy: Policy
    iterations: int
    residual: float
    status: Status
    regime: str = ""
    trace: tuple = ()

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED


@dataclass(frozen=True)
class PerturbationSchedule:
    delta0: float = 1.0
    ratio: float = 0.5
    steps: int = 40
    inner_tol: float = 1e-10

    def __post_init__(self):
        if not self.delta0 > 0:
            raise ValueError("delta0 must be positive")
        if not 0 < self.ratio < 1:
            raise ValueError("ratio must lie in (0, 1)")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if not self.inner_tol > 0:
            raise ValueError("inner_tol must be positive")

    def deltas(self) -> np.ndarray:
        return self.delta0 * self.ratio ** np.arange(self.steps)


@dataclass(frozen=True)
class WeightedNorm:
    v: np.ndarray
    beta: float

    def norm(self, x) -> float:
        return float(np.max(np.abs(np.asarray(x, dtype=float)) / self.v))


def _regime(J: np.ndarray, TJ: np.ndarray) -> str:
    if np.all(J <= TJ):
        return "below"
    if np.all(J >= TJ):
        return "above"
    return "mixed"


def _iterate(model: ModelSpec, J: np.ndarray, shift: float, tol: float, max_iter: int,
             cap: float) -> SolveReport:
    """Run J <- TJ + shift until the sup-norm residual drops to ``tol``.

    The returned vector is the last one whose residual was measured, so the
    report's residual describes exactly the vector it carries.
    """
    offsets, b, A = model.offsets, model.rows_b, model.rows_A
    regime = ""
    for k in range(max_iter + 1):
        TJ = np.minimum.reduceat(b + A @ J, offsets) + shift
        res = float(np.max(np.abs(TJ - J)))
        if k == 0:
            regime = _regime(J, TJ)
        if res <= tol or k == max_iter:
            break
        if not np.isfinite(TJ).all() or (TJ > cap).any():
            _, mu = _greedy(model, q_values(model, J))
            return SolveReport(J, mu, k, res, Status.DIVERGED, regime)
        J = TJ
    _, mu = _greedy(model, q_values(model, J))
    status = Status.CONVERGED if res <= tol else Status.MAX_ITERATIONS
    return SolveReport(J, mu, k, res, status, regime)


def value_iterate(model: ModelSpec, J0=None, tol: float = 1e-10, max_iter: int = 10**6,
                  divergence_cap: float = DIVERGENCE_CAP) -> SolveReport:
    """Iterate the Bellman map from ``J0`` (zero by default)."""
    J = np.zeros(model.n) if J0 is None else as_cost_vector(J0, model.n)
    if np.isinf(J).any():
        raise ValueError("J0 must be finite")
    return _iterate(model, J, 0.0, tol, max_iter, divergence_cap)


def solve_perturbed(model: ModelSpec, delta: float, tol: float = 1e-10, max_iter: int = 10**6,
                    J0=None, divergence_cap: float = DIVERGENCE_CAP) -> SolveReport:
    """Solve ``J = TJ + delta`` by value iteration (from zero unless warm-started)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    J = np.zeros(model.n) if J0 is None else as_cost_vector(J0, model.n)
    return _iterate(model, J, float(delta), tol, max_iter, divergence_cap)


def solve_hat_j_perturbation(model: ModelSpec, schedule: PerturbationSchedule | None = None,
                             max_iter: int = 10**6) -> SolveReport:
    """Approximate the optimal cost over contractive policies as delta -> 0.

    Each perturbed solve is warm-started from the previous solution, which lies
    above the next one, so every inner run decreases monotonically.  The trace
    holds ``(delta, J*_delta)`` for every stage.
    """
    schedule = schedule or PerturbationSchedule()
    J = None
    trace = []
    total = 0
    rep = None
    for delta in schedule.deltas():
        rep = solve_perturbed(model, delta, schedule.inner_tol, max_iter, J0=J)
        total += rep.iterations
        if rep.status is Status.DIVERGED:
            raise Diverged(f"perturbed solve diverged at delta={delta:.3g}")
        if rep.status is Status.MAX_ITERATIONS:
            raise NotConverging(f"perturbed solve at delta={delta:.3g} hit {max_iter} iterations "
                                f"with residual {rep.residual:.3g}")
        J = rep.J
        trace.append((float(delta), J))
    gaps = [float(np.max(np.abs(b[1] - a[1]))) for a, b in zip(trace, trace[1:])]
    if len(gaps) >= 2 and gaps[-1] > 10 * schedule.inner_tol and gaps[-1] >= gaps[0]:
        raise NotConverging(f"successive gap {gaps[-1]:.3g} did not shrink")
    TJ, mu = apply_bellman_map(model, J)
    residual = float(np.max(np.abs(J - TJ)))
    return SolveReport(J, mu, total, residual, rep.status, rep.regime, tuple(trace))


def policy_iterate(model: ModelSpec, mu0: Sequence[int], tie_tol: float = 1e-12,
                   max_improvements: int | None = None) -> SolveReport:
    """Policy iteration from a contractive starting policy.

    The incumbent control is kept whenever it is within ``tie_tol`` (relative)
    of the minimum, otherwise the lowest minimizing index is taken.
    """
    mu = check_policy(model, mu0)
    if not classify_policy(model, mu).contractive:
        raise NotContractiveStart(f"starting policy {mu} is not contractive")
    limit = max_improvements or model.num_policies + 1
    seen = {mu}
    J = _solve_policy(model, mu)
    trace = [(mu, J)]
    for k in range(1, limit + 1):
        Q = q_values(model, J)
        best, greedy = _greedy(model, Q)
        new = list(greedy)
        for i, u in enumerate(mu):
            incumbent = Q[model.offsets[i] + u]
            if incumbent <= best[i] + tie_tol * max(1.0, abs(best[i])):
                new[i] = u
        new = tuple(new)
        if new == mu:
            residual = float(np.max(np.abs(J - best)))
            return SolveReport(J, mu, k, residual, Status.CONVERGED, "", tuple(trace))
        if new in seen:
            raise CycleDetected(f"policy {new} revisited after {k} improvements")
        if not classify_policy(model, new).contractive:
            raise ImprovedPolicyNotContractive(f"improved policy {new} is not contractive")
        seen.add(new)
        mu = new
        J = _solve_policy(model, mu)
        trace.append((mu, J))
    raise CycleDetected(f"no termination within {limit} improvements")


def build_weighted_norm(model: ModelSpec, mu: Sequence[int]) -> WeightedNorm:
    """Weights ``v = (I - A_mu)^-1 1`` and modulus ``beta = 1 - 1/max v``.

    By construction ``A_mu v = v - 1 <= beta v``.
    """
    if not classify_policy(model, mu).contractive:
        raise NotContractive(f"policy {tuple(mu)} is not contractive")
    v = _solve_policy(model, mu, rhs=np.ones(model.n))
    v = np.maximum(v, 1.0)
    return WeightedNorm(v, float(1.0 - 1.0 / v.max()))


def vi_error_bound(model: ModelSpec, norm: WeightedNorm, J) -> float:
    """Certified bound on ``||J - J_hat||_v``, valid for ``J >= J_hat``."""
    J = as_cost_vector(J, model.n)
    TJ, _ = apply_bellman_map(model, J)
    worst = float(np.max((J - TJ) / norm.v))
    return max(worst, 0.0) / (1.0 - norm.beta)


def check_optimality(model: ModelSpec, mu: Sequence[int], J, atol: float = 1e-9) -> bool:
    """True iff ``T_mu J == TJ`` componentwise within ``atol``.

    Says nothing about contractiveness; callers working with the optimum over
    contractive policies must check that separately.
    """
    TmuJ = apply_policy_map(model, mu, J)
    TJ, _ = apply_bellman_map(model, J)
    return bool(np.all(np.abs(TmuJ - TJ) <= atol))
