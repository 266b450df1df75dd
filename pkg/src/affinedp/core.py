"""Finite-state affine monotonic models and their Bellman operators.

A model assigns to every state ``i`` a finite list of controls; control ``u``
at state ``i`` carries a nonnegative row ``A[i][u, :]`` and a nonnegative
scalar ``b[i][u]``.  For a stationary policy ``mu`` the policy map is

    T_mu J = b_mu + A_mu J

and the Bellman map ``T`` takes the componentwise minimum over controls.

Cost vectors are plain float arrays whose components live in ``[0, inf]``.
Products follow the extended convention ``0 * inf = 0``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyControlSet,
    IndexOutOfRange,
    InfiniteComponent,
    InvalidCostVector,
    NegativeEntry,
    NonFiniteEntry,
)

Policy = tuple[int, ...]


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Immutable affine monotonic model.

    ``A[i]`` has shape ``(len(controls[i]), n)`` and ``b[i]`` has shape
    ``(len(controls[i]),)``.  Inputs may be nested lists; they are coerced to
    read-only float arrays and validated on construction.
    """

    n: int
    controls: Sequence[Sequence[str]]
    A: Sequence[np.ndarray]
    b: Sequence[np.ndarray]
    jbar: np.ndarray
    # stacked (state, control) rows for vectorized Bellman updates
    rows_A: np.ndarray = field(init=False, repr=False)
    rows_b: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise DimensionMismatch(f"n must be an integer, got {self.n!r}")
        n = int(self.n)
        if n < 1:
            raise DimensionMismatch("n must be at least 1")
        for name in ("controls", "A", "b"):
            if len(getattr(self, name)) != n:
                raise DimensionMismatch(f"{name} must have one entry per state ({n})")
        controls = tuple(tuple(str(c) for c in cs) for cs in self.controls)
        A, b = [], []
        for i in range(n):
            if not controls[i]:
                raise EmptyControlSet(f"state {i} has no controls")
            k = len(controls[i])
            try:
                Ai = np.array(self.A[i], dtype=float)
                bi = np.array(self.b[i], dtype=float)
            except (ValueError, TypeError) as exc:
                raise DimensionMismatch(f"state {i}: ragged or non-numeric data") from exc
            if Ai.shape != (k, n):
                raise DimensionMismatch(f"state {i}: A has shape {Ai.shape}, expected {(k, n)}")
            if bi.shape != (k,):
                raise DimensionMismatch(f"state {i}: b has shape {bi.shape}, expected {(k,)}")
            A.append(_frozen(Ai))
            b.append(_frozen(bi))
        try:
            jbar = np.array(self.jbar, dtype=float)
        except (ValueError, TypeError) as exc:
            raise DimensionMismatch("jbar: ragged or non-numeric data") from exc
        if jbar.shape != (n,):
            raise DimensionMismatch(f"jbar has shape {jbar.shape}, expected {(n,)}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "A", tuple(A))
        object.__setattr__(self, "b", tuple(b))
        object.__setattr__(self, "jbar", _frozen(jbar))
        validate_model(self)
        counts = [len(c) for c in controls]
        object.__setattr__(self, "rows_A", _frozen(np.vstack(A)))
        object.__setattr__(self, "rows_b", _frozen(np.concatenate(b)))
        object.__setattr__(self, "offsets", _frozen(np.concatenate([[0], np.cumsum(counts)[:-1]])))

    @property
    def num_controls(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.controls)

    @property
    def num_policies(self) -> int:
        return int(np.prod([len(c) for c in self.controls], dtype=object))

    def with_b(self, b: Sequence[np.ndarray]) -> "ModelSpec":
        return ModelSpec(self.n, self.controls, self.A, b, self.jbar)


@dataclass(frozen=True)
class PolicyMatrices:
    Amu: np.ndarray
    bmu: np.ndarray


def validate_model(model: ModelSpec) -> None:
    """Raise if ``model`` violates nonnegativity, finiteness or shape rules."""
    n = model.n
    if n < 1:
        raise DimensionMismatch("n must be at least 1")
    for i in range(n):
        k = len(model.controls[i])
        if k == 0:
            raise EmptyControlSet(f"state {i} has no controls")
        Ai, bi = np.asarray(model.A[i]), np.asarray(model.b[i])
        if Ai.shape != (k, n) or bi.shape != (k,):
            raise DimensionMismatch(f"state {i}: inconsistent shapes")
        if not (np.isfinite(Ai).all() and np.isfinite(bi).all()):
            raise NonFiniteEntry(f"state {i}: A and b must be finite")
        if (Ai < 0).any():
            raise NegativeEntry(f"state {i}: negative entry in A")
        if (bi < 0).any():
            raise NegativeEntry(f"state {i}: negative entry in b")
    jbar = np.asarray(model.jbar)
    if jbar.shape != (n,):
        raise DimensionMismatch("jbar must have n components")
    if not np.isfinite(jbar).all():
        raise NonFiniteEntry("jbar must be finite")
    if (jbar < 0).any():
        raise NegativeEntry("jbar must be nonnegative")


def check_policy(model: ModelSpec, mu: Sequence[int]) -> Policy:
    """Return ``mu`` as a tuple after checking every index is in range."""
    mu = tuple(int(u) for u in mu)
    if len(mu) != model.n:
        raise DimensionMismatch(f"policy has {len(mu)} entries, model has {model.n} states")
    for i, u in enumerate(mu):
        if not 0 <= u < len(model.controls[i]):
            raise IndexOutOfRange(f"state {i}: control index {u} out of range")
    return mu


def as_cost_vector(J, n: int) -> np.ndarray:
    """Coerce ``J`` to a float vector in [0, inf]^n."""
    J = np.array(J, dtype=float)
    if J.shape != (n,):
        raise InvalidCostVector(f"cost vector has shape {J.shape}, expected {(n,)}")
    if np.isnan(J).any() or (J < 0).any():
        raise InvalidCostVector("cost vector components must lie in [0, inf]")
    return J


def ext_matvec(M: np.ndarray, J: np.ndarray) -> np.ndarray:
    """``M @ J`` for nonnegative ``M`` with the convention ``0 * inf = 0``."""
    inf = np.isinf(J)
    if not inf.any():
        return M @ J
    out = M[:, ~inf] @ J[~inf]
    out[(M[:, inf] > 0).any(axis=1)] = np.inf
    return out


def assemble_policy(model: ModelSpec, mu: Sequence[int]) -> PolicyMatrices:
    mu = check_policy(model, mu)
    Amu = np.array([model.A[i][u] for i, u in enumerate(mu)])
    bmu = np.array([model.b[i][u] for i, u in enumerate(mu)])
    return PolicyMatrices(Amu, bmu)


def apply_policy_map(model: ModelSpec, mu: Sequence[int], J) -> np.ndarray:
    pm = assemble_policy(model, mu)
    J = as_cost_vector(J, model.n)
    return pm.bmu + ext_matvec(pm.Amu, J)


def q_values(model: ModelSpec, J: np.ndarray) -> np.ndarray:
    """Stacked ``b(i,u) + sum_j A_ij(u) J(j)`` over all (state, control) rows."""
    return model.rows_b + ext_matvec(model.rows_A, J)


def _greedy(model: ModelSpec, Q: np.ndarray) -> tuple[np.ndarray, Policy]:
    best = np.minimum.reduceat(Q, model.offsets)
    rep = np.repeat(best, model.num_controls)
    idx = np.arange(Q.size)
    # lowest control index among the minimizers
    first = np.minimum.reduceat(np.where(Q <= rep, idx, Q.size), model.offsets)
    return best, tuple(int(u) for u in first - model.offsets)


def apply_bellman_map(model: ModelSpec, J) -> tuple[np.ndarray, Policy]:
    """Return ``(TJ, greedy policy)``; ties go to the lowest control index."""
    J = as_cost_vector(J, model.n)
    return _greedy(model, q_values(model, J))


def bellman_residual(model: ModelSpec, J) -> float:
    """Sup-norm distance between ``J`` and ``TJ``."""
    J = as_cost_vector(J, model.n)
    if np.isinf(J).any():
        raise InfiniteComponent("residual needs a finite cost vector")
    TJ, _ = _greedy(model, q_values(model, J))
    return float(np.max(np.abs(J - TJ)))


def policy_space(model: ModelSpec):
    """Iterate all stationary policies in lexicographic order."""
    return itertools.product(*(range(k) for k in model.num_controls))
