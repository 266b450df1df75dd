"""Linear-programming characterization of the largest Bellman fixed point.

The program is

    maximize    sum_i w_i J(i)
    subject to  J(i) - sum_j A_ij(u) J(j) <= b(i, u)   for every state i, control u
                J >= 0

and is solved by a dense two-phase primal simplex with Bland's rule.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import ModelSpec
from .errors import LPNotOptimal, NonpositiveWeight, SimplexError


class LPStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    UNBOUNDED = "Unbounded"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class LinearProgram:
    weights: np.ndarray
    G: np.ndarray
    h: np.ndarray
    rows: tuple[tuple[int, str], ...]

    @property
    def num_vars(self) -> int:
        return self.weights.size


def build_lp(model: ModelSpec, beta=None) -> LinearProgram:
    w = np.ones(model.n) if beta is None else np.array(beta, dtype=float)
    if w.shape != (model.n,):
        raise ValueError(f"weights must have {model.n} entries")
    if not (w > 0).all():
        raise NonpositiveWeight("every objective weight must be strictly positive")
    rows = tuple((i, label) for i in range(model.n) for label in model.controls[i])
    state = np.repeat(np.arange(model.n), model.num_controls)
    G = -np.array(model.rows_A)
    G[np.arange(len(rows)), state] += 1.0
    return LinearProgram(w, G, np.array(model.rows_b), rows)


def format_lp(lp: LinearProgram) -> str:
    """Plain-text listing, one constraint per line."""
    out = ["maximize " + " + ".join(f"{w:.17g}*J{i}" for i, w in enumerate(lp.weights))]
    for (i, label), g, h in zip(lp.rows, lp.G, lp.h):
        coeffs = " ".join(f"{c:+.17g}*J{j}" for j, c in enumerate(g) if c != 0.0) or "0"
        out.append(f"state={i} control={label}: {coeffs} <= {h:.17g}")
    out.append("bounds: J >= 0")
    return "\n".join(out)


@dataclass
class _Tableau:
    T: np.ndarray  # rows: constraints then objective; last column: rhs
    basis: list[int]
    tol: float
    pivots: int = 0

    def pivot(self, r: int, c: int) -> None:
        T = self.T
        if abs(T[r, c]) <= self.tol:
            raise SimplexError(f"pivot element {T[r, c]:.3g} below tolerance")
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        self.basis[r] = c
        self.pivots += 1

    def run(self, allowed: int, max_pivots: int) -> LPStatus:
        """Minimize the objective row with Bland's rule over the first ``allowed`` columns."""
        T, m = self.T, len(self.basis)
        while True:
            reduced = T[-1, :allowed]
            entering = np.flatnonzero(reduced < -self.tol)
            if entering.size == 0:
                return LPStatus.OPTIMAL
            c = int(entering[0])
            col = T[:m, c]
            cand = np.flatnonzero(col > self.tol)
            if cand.size == 0:
                return LPStatus.UNBOUNDED
            ratios = T[cand, -1] / col[cand]
            best = ratios.min()
            ties = cand[ratios <= best + self.tol * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, c)
            if self.pivots > max_pivots:
                raise SimplexError("pivot limit exceeded")


def _simplex(c: np.ndarray, A: np.ndarray, b: np.ndarray, tol: float,
             max_pivots: int = 100_000) -> tuple[np.ndarray | None, LPStatus]:
    """Maximize c.x subject to A x <= b, x >= 0."""
    m, n = A.shape
    flip = b < 0
    S = np.eye(m)
    A_eq = np.hstack([A, S])
    b_eq = b.copy()
    A_eq[flip] *= -1
    b_eq[flip] *= -1
    art_rows = np.flatnonzero(flip)
    k = art_rows.size
    nv = n + m + k
    T = np.zeros((m + 1, nv + 1))
    T[:m, : n + m] = A_eq
    T[art_rows, n + m + np.arange(k)] = 1.0
    T[:m, -1] = b_eq
    basis = [n + i for i in range(m)]
    for j, r in enumerate(art_rows):
        basis[r] = n + m + j
    tab = _Tableau(T, basis, tol)
    kept = list(range(m))

    if k:
        # phase one: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, n + m:nv] = 1.0
        for r in art_rows:
            T[-1] -= T[r]
        tab.run(nv, max_pivots)
        if -T[-1, -1] > tol * max(1.0, np.abs(b).max()):
            return None, LPStatus.INFEASIBLE
        for r in range(m):
            if tab.basis[r] >= n + m:
                nz = np.flatnonzero(np.abs(T[r, : n + m]) > tol)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
        keep = [r for r in range(m) if tab.basis[r] < n + m]
        kept = [kept[r] for r in keep]
        T = np.vstack([T[keep], T[-1:]])
        T = np.delete(T, np.s_[n + m:nv], axis=1)
        tab = _Tableau(T, [tab.basis[r] for r in keep], tol, tab.pivots)
        m = len(keep)

    cost = np.zeros(T.shape[1] - 1)
    cost[:n] = -c
    T[-1, :-1] = cost
    T[-1, -1] = 0.0
    for r, j in enumerate(tab.basis):
        T[-1] -= cost[j] * T[r]
    status = tab.run(T.shape[1] - 1, max_pivots)
    if status is not LPStatus.OPTIMAL:
        return None, status

    x = np.zeros(T.shape[1] - 1)
    x[tab.basis] = T[: len(tab.basis), -1]
    # re-solve the optimal basis against the original data to shed pivot drift
    B = A_eq[np.ix_(kept, tab.basis)]
    try:
        xb = np.linalg.solve(B, b_eq[kept])
    except np.linalg.LinAlgError as exc:
        raise SimplexError("optimal basis is numerically singular") from exc
    if np.all(xb >= -tol):
        x = np.zeros_like(x)
        x[tab.basis] = np.maximum(xb, 0.0)
    return x[:n], LPStatus.OPTIMAL


def simplex_solve(lp: LinearProgram, tol: float = 1e-9) -> tuple[np.ndarray | None, LPStatus]:
    J, status = _simplex(lp.weights, lp.G, lp.h, tol)
    if J is not None:
        J = np.maximum(J, 0.0)
    return J, status


def solve_hat_j_lp(model: ModelSpec, beta=None, tol: float = 1e-9) -> np.ndarray:
    J, status = simplex_solve(build_lp(model, beta), tol)
    if status is not LPStatus.OPTIMAL:
        raise LPNotOptimal(status)
    return J
