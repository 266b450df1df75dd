"""Seeded random problem instances for tests, audits and the CLI."""

from __future__ import annotations

import numpy as np

from .core import ModelSpec
from .expssp import TerminatingChainSpec


def random_chain(rng: np.random.Generator, n: int, max_controls: int = 3,
                 g_scale: float = 1.0) -> TerminatingChainSpec:
    """Dense exponential chain with stage costs uniform in [-g_scale, g_scale]."""
    controls, p, g = [], [], []
    for i in range(n):
        k = int(rng.integers(1, max_controls + 1))
        w = rng.random((k, n + 1)) + 1e-3
        p.append(w / w.sum(axis=1, keepdims=True))
        g.append(rng.uniform(-g_scale, g_scale, (k, n + 1)))
        controls.append([f"a{u}" for u in range(k)])
    return TerminatingChainSpec(n, controls, p, g=g)


def random_contractive_model(rng: np.random.Generator, n: int, max_controls: int = 3,
                             row_sum: float = 0.95) -> ModelSpec:
    """Affine model whose every row sums to at most ``row_sum`` < 1.

    Every stationary policy is then contractive, since the Perron root is
    bounded by the largest row sum.
    """
    controls, A, b = [], [], []
    for i in range(n):
        k = int(rng.integers(1, max_controls + 1))
        rows = rng.random((k, n)) * (rng.random((k, n)) < 0.8)
        sums = rows.sum(axis=1, keepdims=True)
        target = rng.uniform(0.0, row_sum, (k, 1))
        A.append(np.where(sums > 0, rows / np.where(sums > 0, sums, 1.0) * target, 0.0))
        b.append(rng.random(k))
        controls.append([f"a{u}" for u in range(k)])
    return ModelSpec(n, controls, A, b, np.zeros(n))


def random_policy(rng: np.random.Generator, model) -> tuple[int, ...]:
    return tuple(int(rng.integers(0, len(c))) for c in model.controls)
