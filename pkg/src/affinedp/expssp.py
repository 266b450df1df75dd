"""Multiplicative and exponential cost shortest path problems.

States ``0..n-1`` plus an absorbing termination state ``t``.  Control ``u`` at
state ``i`` has a distribution ``p[i][u]`` over ``n + 1`` successors (the last
entry is ``t``) and a nonnegative factor per successor, either given directly
(``h``) or as ``h = exp(g)`` for real stage costs ``g``.  The affine model has

    A_ij(u) = p_ij(u) h(i,u,j),    b(i,u) = p_it(u) h(i,u,t),    jbar = 1.

Also here: the trajectory-enumeration and Monte Carlo oracles for the expected
multiplicative cost, and the fixture builders used by the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .core import ModelSpec, Policy, check_policy
from .errors import (
    CapExceeded,
    DanglingState,
    DimensionMismatch,
    EmptyControlSet,
    IndexOutOfRange,
    InvalidC,
    InvalidDistribution,
    NegativeFactor,
    NonFiniteEntry,
)

TERMINAL = "t"
Arc = tuple[int, Union[int, str], float]


@dataclass(frozen=True, eq=False)
class TerminatingChainSpec:
    """Transition/factor data for a chain with an absorbing termination state.

    Exactly one of ``h`` (multiplicative factors) and ``g`` (exponential stage
    costs) must be supplied.  Arrays for state ``i`` have shape
    ``(len(controls[i]), n + 1)``.
    """

    n: int
    controls: Sequence[Sequence[str]]
    p: Sequence[np.ndarray]
    h: Sequence[np.ndarray] | None = None
    g: Sequence[np.ndarray] | None = None

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise DimensionMismatch("n must be a positive integer")
        if (self.h is None) == (self.g is None):
            raise ValueError("supply exactly one of h (multiplicative) or g (exponential)")
        data = self.h if self.h is not None else self.g
        if not (len(self.controls) == len(self.p) == len(data) == n):
            raise DimensionMismatch("controls, p and factors need one entry per state")
        controls = tuple(tuple(str(c) for c in cs) for cs in self.controls)
        p, f = [], []
        for i in range(n):
            k = len(controls[i])
            if k == 0:
                raise EmptyControlSet(f"state {i} has no controls")
            try:
                pi = np.array(self.p[i], dtype=float)
                fi = np.array(data[i], dtype=float)
            except (ValueError, TypeError) as exc:
                raise DimensionMismatch(f"state {i}: ragged or non-numeric data") from exc
            if pi.shape != (k, n + 1) or fi.shape != (k, n + 1):
                raise DimensionMismatch(f"state {i}: expected arrays of shape {(k, n + 1)}")
            if not (np.isfinite(pi).all() and np.isfinite(fi).all()):
                raise NonFiniteEntry(f"state {i}: probabilities and factors must be finite")
            if (pi < 0).any() or np.any(np.abs(pi.sum(axis=1) - 1.0) > 1e-12):
                raise InvalidDistribution(f"state {i}: rows of p must be probability vectors")
            if self.h is not None and (fi < 0).any():
                raise NegativeFactor(f"state {i}: multiplicative factors must be nonnegative")
            pi.setflags(write=False)
            fi.setflags(write=False)
            p.append(pi)
            f.append(fi)
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "p", tuple(p))
        object.__setattr__(self, "h" if self.h is not None else "g", tuple(f))

    @property
    def kind(self) -> str:
        return "multiplicative" if self.h is not None else "exponential"

    @property
    def factors(self) -> tuple[np.ndarray, ...]:
        if self.h is not None:
            return self.h
        return tuple(np.exp(gi) for gi in self.g)


def build_multiplicative(spec: TerminatingChainSpec) -> ModelSpec:
    n = spec.n
    A, b = [], []
    for pi, hi in zip(spec.p, spec.factors):
        A.append(pi[:, :n] * hi[:, :n])
        b.append(pi[:, n] * hi[:, n])
    return ModelSpec(n, spec.controls, A, b, np.ones(n))


def build_exponential(spec: TerminatingChainSpec) -> ModelSpec:
    if spec.g is None:
        raise ValueError("build_exponential needs stage costs g")
    return build_multiplicative(spec)


def build_chain_model(spec: TerminatingChainSpec) -> ModelSpec:
    return build_exponential(spec) if spec.kind == "exponential" else build_multiplicative(spec)


def deterministic_sp_chain(n: int, arcs: Sequence[Arc]) -> TerminatingChainSpec:
    """Exponential chain in which every arc ``(i, j or 't', length)`` is a control."""
    controls = [[] for _ in range(n)]
    p = [[] for _ in range(n)]
    g = [[] for _ in range(n)]
    for tail, head, length in arcs:
        if not 0 <= int(tail) < n:
            raise IndexOutOfRange(f"arc tail {tail} is not a state")
        if head == TERMINAL:
            col = n
        elif 0 <= int(head) < n:
            col = int(head)
        else:
            raise IndexOutOfRange(f"arc head {head} is not a state")
        row_p = np.zeros(n + 1)
        row_p[col] = 1.0
        row_g = np.zeros(n + 1)
        row_g[col] = float(length)
        controls[tail].append(f"->{head}")
        p[tail].append(row_p)
        g[tail].append(row_g)
    dangling = [i for i in range(n) if not controls[i]]
    if dangling:
        raise DanglingState(f"states without outgoing arcs: {dangling}")
    return TerminatingChainSpec(n, controls, p, g=g)


def build_deterministic_sp(n: int, arcs: Sequence[Arc]) -> ModelSpec:
    """Affine model whose cost is ``exp(path length)`` for the chosen arcs.

    Negative cycles are allowed: a policy circling a negative cycle forever
    is contractive and has cost 0 on the cycle.
    """
    return build_exponential(deterministic_sp_chain(n, arcs))


def exit_or_stay_chain(grid_step: float = 1e-3) -> TerminatingChainSpec:
    """Single state; control ``u`` on a grid of [0, 1].

    With probability ``u`` the chain terminates at cost 0, otherwise it stays
    at cost ``-u``.  ``u = 0`` never terminates and is the one noncontractive
    control.
    """
    m = int(round(1.0 / grid_step))
    if m < 1 or not np.isclose(m * grid_step, 1.0):
        raise ValueError("grid_step must divide 1")
    us = np.arange(m + 1) / m
    p = np.column_stack([1.0 - us, us])
    g = np.column_stack([-us, np.zeros_like(us)])
    labels = [f"u={u:.17g}" for u in us]
    return TerminatingChainSpec(1, [labels], [p], g=[g])


def exit_or_stay_model(grid_step: float = 1e-3) -> ModelSpec:
    return build_exponential(exit_or_stay_chain(grid_step))


def twin_cycle_chain(c: float = 3.0) -> TerminatingChainSpec:
    """Seven states, two zero-length three-cycles, and exits of cost ``c``.

    Control 0 everywhere is the cycling policy: state 0 moves to 1 or 4 with
    probability 1/2 at cost 0, then 1->2->3->1 with costs (1, 0, -1) and
    4->5->6->4 with costs (-1, 0, 1).  States 0, 3 and 6 also have control 1,
    a deterministic exit to ``t`` at cost ``c``.
    """
    if not c > 2:
        raise InvalidC(f"exit cost c must exceed 2, got {c}")
    n = 7
    controls, p, g = [], [], []

    def move(succ: dict, costs: dict):
        rp, rg = np.zeros(n + 1), np.zeros(n + 1)
        for j, q in succ.items():
            rp[j] = q
        for j, cost in costs.items():
            rg[j] = cost
        return rp, rg

    exit_row = move({n: 1.0}, {n: c})
    cycle = {0: move({1: 0.5, 4: 0.5}, {}),
             1: move({2: 1.0}, {2: 1.0}), 2: move({3: 1.0}, {}), 3: move({1: 1.0}, {1: -1.0}),
             4: move({5: 1.0}, {5: -1.0}), 5: move({6: 1.0}, {}), 6: move({4: 1.0}, {4: 1.0})}
    for i in range(n):
        rows = [cycle[i]] + ([exit_row] if i in (0, 3, 6) else [])
        controls.append(["cycle", "exit"][: len(rows)])
        p.append([r[0] for r in rows])
        g.append([r[1] for r in rows])
    return TerminatingChainSpec(n, controls, p, g=g)


def build_twin_cycles(c: float = 3.0) -> tuple[ModelSpec, Policy]:
    """Model of :func:`twin_cycle_chain` and its noncontractive cycling policy."""
    return build_exponential(twin_cycle_chain(c)), (0,) * 7


def _schedule(spec: TerminatingChainSpec, policy_seq, horizon: int) -> list[Policy]:
    seq = list(policy_seq)
    if seq and isinstance(seq[0], (int, np.integer)):
        seq = [seq]
    if len(seq) == 1:
        seq = seq * horizon
    if len(seq) < horizon:
        raise ValueError(f"need {horizon} policies, got {len(seq)}")
    # check_policy only needs .n and .controls, which the chain spec has
    return [check_policy(spec, mu) for mu in seq[:horizon]]


def _step_tables(spec: TerminatingChainSpec, mu: Policy) -> tuple[np.ndarray, np.ndarray]:
    """(n+1)x(n+1) transition and factor tables with ``t`` absorbing at factor 1."""
    n = spec.n
    P = np.zeros((n + 1, n + 1))
    H = np.ones((n + 1, n + 1))
    factors = spec.factors
    for i, u in enumerate(mu):
        P[i] = spec.p[i][u]
        H[i] = factors[i][u]
    P[n, n] = 1.0
    return P, H


def enumerate_cost(spec: TerminatingChainSpec, policy_seq, horizon: int,
                   cap: int = 10**7) -> np.ndarray:
    """Expected product of stage factors over ``horizon`` steps, by brute force.

    Every trajectory over states ``0..n-1, t`` is enumerated and its
    probability-weighted product accumulated per start state.  ``policy_seq``
    is a single policy (stationary) or one policy per step.
    """
    n = spec.n
    if n * (n + 1) ** horizon > cap:
        raise CapExceeded(f"{n * (n + 1) ** horizon} trajectories exceed the cap of {cap}")
    seq = _schedule(spec, policy_seq, horizon)
    start = np.arange(n)
    state = np.arange(n)
    weight = np.ones(n)
    succ = np.arange(n + 1)
    for mu in seq:
        P, H = _step_tables(spec, mu)
        cur = np.repeat(state, n + 1)
        nxt = np.tile(succ, state.size)
        weight = np.repeat(weight, n + 1) * P[cur, nxt] * H[cur, nxt]
        start = np.repeat(start, n + 1)
        state = nxt
    return np.bincount(start, weights=weight, minlength=n)


def mc_cost(spec: TerminatingChainSpec, mu: Sequence[int], horizon: int, samples: int,
            seed: int, block: int = 1 << 16) -> tuple[np.ndarray, np.ndarray]:
    """Monte Carlo mean and standard error of the multiplicative cost.

    Samples are drawn in fixed-size blocks, each with its own child seed
    spawned from ``seed``, so the output depends only on the arguments.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    n = spec.n
    mu = _schedule(spec, [mu], 1)[0]
    P, H = _step_tables(spec, mu)
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    nblocks = -(-samples // block)
    children = np.random.SeedSequence(seed).spawn(n * nblocks)
    mean, stderr = np.empty(n), np.empty(n)
    for i in range(n):
        values = np.empty(samples)
        for k in range(nblocks):
            size = min(block, samples - k * block)
            rng = np.random.default_rng(children[i * nblocks + k])
            state = np.full(size, i)
            prod = np.ones(size)
            for _ in range(horizon):
                r = rng.random(size)
                nxt = (cdf[state] <= r[:, None]).sum(axis=1)
                prod *= H[state, nxt]
                state = nxt
            values[k * block: k * block + size] = prod
        mean[i] = values.mean()
        stderr[i] = values.std(ddof=1) / np.sqrt(samples) if samples > 1 else 0.0
    return mean, stderr
