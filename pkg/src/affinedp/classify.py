"""Contractive/noncontractive classification of stationary policies.

A policy is contractive when ``A_mu^N -> 0``, i.e. when the Perron root of the
nonnegative matrix ``A_mu`` is below one.  The Perron root is estimated twice:
by power iteration and by repeated squaring, ``||M^(2^m)||^(1/2^m)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ModelSpec, Policy, assemble_policy, check_policy, policy_space
from .errors import CapExceeded, NoneFound

EPS_RHO = 1e-8


class Verdict(str, enum.Enum):
    CONTRACTIVE = "Contractive"
    NONCONTRACTIVE = "Noncontractive"
    MARGINAL = "Marginal"


@dataclass(frozen=True)
class Classification:
    verdict: Verdict
    rho: float
    iterations: int

    @property
    def contractive(self) -> bool:
        return self.verdict is Verdict.CONTRACTIVE


def _power_estimate(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, bool, int]:
    # Iterate on I + M: same Perron vector, root shifted by one, and the shift
    # removes the peripheral eigenvalues that make periodic matrices oscillate.
    n = M.shape[0]
    B = M + np.eye(n)
    x = np.ones(n)
    lam = np.inf
    for k in range(1, max_iter + 1):
        y = B @ x
        # Collatz-Wielandt bracket on the support of x (x > 0 since B >= I)
        live = x > 1e-300
        ratios = y[live] / x[live]
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * max(1.0, hi):
            return max(0.5 * (lo + hi) - 1.0, 0.0), True, k
        new = float(y.max())
        if abs(new - lam) <= tol * max(1.0, new):
            return max(new - 1.0, 0.0), True, k
        lam = new
        x = y / new
    return max(lam - 1.0, 0.0), False, max_iter


def _squaring_estimate(M: np.ndarray, tol: float, max_steps: int = 80) -> float:
    # log_norm tracks log ||M^(2^m)||_inf; P holds M^(2^m) scaled to unit norm
    s = float(np.max(M.sum(axis=1)))
    if s == 0.0:
        return 0.0
    P = M / s
    log_norm = math.log(s)
    est = s
    # norms of non-normal powers can plateau early (a nilpotent shift keeps
    # unit norm until M^n = 0), so only trust a stall once 2^m >= 2n
    min_steps = max(1, math.ceil(math.log2(2 * M.shape[0])))
    stalls = 0
    for m in range(1, max_steps + 1):
        P = P @ P
        s = float(np.max(P.sum(axis=1)))
        if s == 0.0:
            return 0.0
        P /= s
        log_norm = 2.0 * log_norm + math.log(s)
        new = math.exp(log_norm / 2.0**m)
        stalls = stalls + 1 if abs(new - est) <= 0.1 * tol * max(1.0, new) else 0
        if m >= min_steps and stalls >= 2:
            return new
        est = new
    return est


def spectral_radius(M, tol: float = 1e-12, max_iter: int = 20000) -> tuple[float, bool]:
    """Perron root of a nonnegative matrix.

    Returns ``(rho, converged)``.  ``converged`` is true only when the power
    iteration settled and agrees with the repeated-squaring estimate within
    ``10 * tol``.  When the two disagree the squaring estimate is returned.
    """
    rho, _, converged = _spectral(np.asarray(M, dtype=float), tol, max_iter)
    return rho, converged


def _spectral(M: np.ndarray, tol: float, max_iter: int) -> tuple[float, int, bool]:
    rho_pow, settled, its = _power_estimate(M, tol, max_iter)
    rho_sq = _squaring_estimate(M, tol)
    if settled and abs(rho_pow - rho_sq) <= 10 * tol * max(1.0, rho_sq):
        return rho_pow, its, True
    return rho_sq, its, False


def verdict_for(rho: float, eps: float = EPS_RHO) -> Verdict:
    if rho < 1.0 - eps:
        return Verdict.CONTRACTIVE
    if rho > 1.0 + eps:
        return Verdict.NONCONTRACTIVE
    return Verdict.MARGINAL


def classify_policy(model: ModelSpec, mu: Sequence[int], tol: float = 1e-12,
                    max_iter: int = 20000) -> Classification:
    pm = assemble_policy(model, mu)
    rho, its, _ = _spectral(pm.Amu, tol, max_iter)
    return Classification(verdict_for(rho), rho, its)


def _enumerate(model: ModelSpec, cap: int):
    if model.num_policies > cap:
        raise CapExceeded(f"{model.num_policies} policies exceed the cap of {cap}")
    return policy_space(model)


def find_contractive_policy(model: ModelSpec, enumeration_cap: int = 100_000) -> Policy:
    """First contractive policy in lexicographic order (last state varies fastest)."""
    for mu in _enumerate(model, enumeration_cap):
        if classify_policy(model, mu).contractive:
            return check_policy(model, mu)
    raise NoneFound("no contractive policy among the enumerated policies")


class AuditStatus(str, enum.Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class AuditResult:
    status: AuditStatus
    witness: Policy | None = None
    undecided: tuple[Policy, ...] = ()


def _partial_sums_diverge(Amu: np.ndarray, bmu: np.ndarray, horizon: int,
                          cap: float) -> bool | None:
    """Decide whether ``sum_k A^k b`` diverges, looking at S_k for k = 2^m <= horizon.

    Uses the doubling S_2k = S_k + A^k S_k.  Returns True (some component
    exceeds ``cap``), False (the increment A^k b fell below 1e-12 twice in a
    row) or None (undecided within ``horizon``).
    """
    S = bmu.copy()  # S_1
    Ak = Amu.copy()  # A^1
    k = 1
    small = 0
    while True:
        if (S > cap).any():
            return True
        inc = Ak @ bmu
        small = small + 1 if float(np.max(inc, initial=0.0)) < 1e-12 else 0
        if small >= 2:
            return False
        if 2 * k > horizon:
            return None
        S = S + Ak @ S
        # clipping keeps products finite; any clipped entry already dwarfs cap
        Ak = np.minimum(Ak @ Ak, 1e150)
        k *= 2


def check_infinite_cost_condition(model: ModelSpec, enumeration_cap: int = 100_000,
                                  horizon: int = 2**40, divergence_cap: float = 1e12) -> AuditResult:
    """Audit the infinite cost condition over all stationary policies.

    Every non-contractive policy must have a state where ``sum_k A^k b``
    diverges.  Returns Fails with the first witness whose partial sums
    converge, Holds when all diverge, and Unknown otherwise.
    """
    undecided = []
    for mu in _enumerate(model, enumeration_cap):
        if classify_policy(model, mu).contractive:
            continue
        pm = assemble_policy(model, mu)
        verdict = _partial_sums_diverge(pm.Amu, pm.bmu, horizon, divergence_cap)
        if verdict is False:
            return AuditResult(AuditStatus.FAILS, tuple(mu))
        if verdict is None:
            undecided.append(tuple(mu))
    if undecided:
        return AuditResult(AuditStatus.UNKNOWN, None, tuple(undecided))
    return AuditResult(AuditStatus.HOLDS)
