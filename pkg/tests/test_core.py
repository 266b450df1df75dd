import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinedp import ModelSpec, apply_bellman_map, apply_policy_map, assemble_policy, bellman_residual
from affinedp.core import check_policy, ext_matvec, policy_space
from affinedp.errors import (
    DimensionMismatch,
    EmptyControlSet,
    IndexOutOfRange,
    InfiniteComponent,
    InvalidCostVector,
    NegativeEntry,
    NonFiniteEntry,
)
from affinedp.expssp import exit_or_stay_chain, build_exponential
from affinedp.instances import random_contractive_model


def grid_model(us):
    p = np.column_stack([1 - us, us])
    g = np.column_stack([-us, np.zeros_like(us)])
    from affinedp.expssp import TerminatingChainSpec
    spec = TerminatingChainSpec(1, [[f"u={u}" for u in us]], [p], g=[g])
    return build_exponential(spec)


class TestValidation:
    def test_minimal_model_is_valid(self):
        m = ModelSpec(1, [["a"]], [[[0.5]]], [[1.0]], [0.0])
        assert m.n == 1 and m.num_policies == 1

    def test_negative_b(self):
        with pytest.raises(NegativeEntry):
            ModelSpec(1, [["a"]], [[[0.5]]], [[-1.0]], [0.0])

    def test_negative_a(self):
        with pytest.raises(NegativeEntry):
            ModelSpec(1, [["a"]], [[[-0.5]]], [[1.0]], [0.0])

    def test_row_too_long(self):
        with pytest.raises(DimensionMismatch):
            ModelSpec(1, [["a"]], [[[0.5, 0.1]]], [[1.0]], [0.0])

    def test_ragged_rows(self):
        with pytest.raises(DimensionMismatch):
            ModelSpec(2, [["a"], ["b"]], [[[0.5, 0.1]], [[0.5]]], [[1.0], [1.0]], [0.0, 0.0])

    def test_empty_controls(self):
        with pytest.raises(EmptyControlSet):
            ModelSpec(1, [[]], [np.zeros((0, 1))], [np.zeros(0)], [0.0])

    def test_nonfinite(self):
        with pytest.raises(NonFiniteEntry):
            ModelSpec(1, [["a"]], [[[math.inf]]], [[1.0]], [0.0])
        with pytest.raises(NonFiniteEntry):
            ModelSpec(1, [["a"]], [[[0.5]]], [[math.nan]], [0.0])

    def test_model_is_read_only(self, two_control):
        with pytest.raises(ValueError):
            two_control.A[0][0, 0] = 2.0

    def test_policy_checks(self, two_control):
        assert check_policy(two_control, [1]) == (1,)
        with pytest.raises(IndexOutOfRange):
            check_policy(two_control, [2])
        with pytest.raises(DimensionMismatch):
            check_policy(two_control, [0, 0])

    def test_policy_space_order(self):
        m = ModelSpec(2, [["a", "b"], ["c", "d", "e"]], [np.zeros((2, 2)), np.zeros((3, 2))],
                      [np.zeros(2), np.zeros(3)], [0, 0])
        pols = list(policy_space(m))
        assert len(pols) == m.num_policies == 6
        assert pols[:2] == [(0, 0), (0, 1)]


class TestAssemble:
    def test_exit_or_stay_half(self):
        m = grid_model(np.array([0.5]))
        pm = assemble_policy(m, (0,))
        assert pm.Amu[0, 0] == pytest.approx(0.5 * math.exp(-0.5), abs=1e-15)
        assert pm.Amu[0, 0] == pytest.approx(0.30327, abs=1e-5)
        assert pm.bmu[0] == pytest.approx(0.5, abs=1e-15)

    def test_zero_model(self):
        m = ModelSpec(2, [["a"], ["b"]], [np.zeros((1, 2))] * 2, [np.zeros(1)] * 2, [0, 0])
        pm = assemble_policy(m, (0, 0))
        assert not pm.Amu.any() and not pm.bmu.any()

    def test_rows_copied(self):
        A0 = np.array([[0.1, 0.2], [0.3, 0.4]])
        A1 = np.array([[0.5, 0.6], [0.7, 0.05]])
        m = ModelSpec(2, [["x", "y"], ["z", "w"]], [A0, A1], [[1, 2], [3, 4]], [0, 0])
        for mu in policy_space(m):
            pm = assemble_policy(m, mu)
            np.testing.assert_array_equal(pm.Amu, np.vstack([A0[mu[0]], A1[mu[1]]]))
            np.testing.assert_array_equal(pm.bmu, [[1, 2][mu[0]], [3, 4][mu[1]]])


class TestPolicyMap:
    def test_annihilation(self):
        m = ModelSpec(2, [["a"], ["b"]], [np.zeros((1, 2))] * 2, [np.zeros(1)] * 2, [0, 0])
        np.testing.assert_array_equal(apply_policy_map(m, (0, 0), [np.inf, 7.0]), [0.0, 0.0])

    def test_exit_or_stay_half(self):
        m = grid_model(np.array([0.5]))
        assert apply_policy_map(m, (0,), [1.0])[0] == pytest.approx(0.80327, abs=1e-5)

    def test_zero_times_inf(self):
        M = np.array([[0.0, 1.0], [0.0, 0.0]])
        np.testing.assert_array_equal(ext_matvec(M, np.array([np.inf, 3.0])), [3.0, 0.0])
        m = ModelSpec(2, [["a"], ["b"]], [[[0, 1]], [[0, 0]]], [[0], [0]], [0, 0])
        np.testing.assert_array_equal(apply_policy_map(m, (0, 0), [np.inf, 3.0]), [3.0, 0.0])

    def test_inf_propagates(self):
        M = np.array([[0.5, 0.0]])
        assert ext_matvec(M, np.array([np.inf, 1.0]))[0] == np.inf

    def test_rejects_negative_and_nan(self, two_control):
        with pytest.raises(InvalidCostVector):
            apply_policy_map(two_control, (0,), [-1.0])
        with pytest.raises(InvalidCostVector):
            apply_policy_map(two_control, (0,), [np.nan])


class TestBellmanMap:
    def test_two_control_hand_case(self, two_control):
        TJ, mu = apply_bellman_map(two_control, [1.5])
        assert TJ[0] == pytest.approx(1.5, abs=1e-15)
        assert mu == (1,)

    def test_all_infinite_with_terminal_control(self):
        m = ModelSpec(2, [["stay", "quit"], ["stay"]], [[[0.5, 0.5], [0, 0]], [[1, 0]]],
                      [[0.1, 2.0], [0.2]], [0, 0])
        TJ, mu = apply_bellman_map(m, [np.inf, np.inf])
        assert TJ[0] == 2.0 and mu[0] == 1
        assert TJ[1] == np.inf

    def test_exit_or_stay_three_point_grid(self):
        m = grid_model(np.array([0.0, 0.5, 1.0]))
        TJ, mu = apply_bellman_map(m, [0.0])
        assert TJ[0] == 0.0 and mu == (0,)

    def test_tie_breaks_to_lowest_index(self):
        m = ModelSpec(1, [["a", "b", "c"]], [[[0.5], [0.5], [0.5]]], [[1, 1, 1]], [0])
        assert apply_bellman_map(m, [3.0])[1] == (0,)


class TestResidual:
    def test_hand_values(self, two_control):
        assert bellman_residual(two_control, [0.0]) == pytest.approx(0.3)
        assert bellman_residual(two_control, [2.0]) == pytest.approx(0.1)
        assert bellman_residual(two_control, [1.5]) == pytest.approx(0.0, abs=1e-15)

    def test_infinite_component_rejected(self, two_control):
        with pytest.raises(InfiniteComponent):
            bellman_residual(two_control, [np.inf])


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_monotonicity(seed):
    rng = np.random.default_rng(seed)
    m = random_contractive_model(rng, int(rng.integers(1, 5)))
    J = rng.random(m.n) * 5
    Jp = J + rng.random(m.n) * 5
    mu = tuple(int(rng.integers(len(c))) for c in m.controls)
    assert np.all(apply_policy_map(m, mu, J) <= apply_policy_map(m, mu, Jp))
    assert np.all(apply_bellman_map(m, J)[0] <= apply_bellman_map(m, Jp)[0])


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_dominance(seed):
    rng = np.random.default_rng(seed)
    m = random_contractive_model(rng, int(rng.integers(1, 5)))
    J = rng.random(m.n) * 5
    TJ, greedy = apply_bellman_map(m, J)
    for mu in policy_space(m):
        assert np.all(TJ <= apply_policy_map(m, mu, J))
    np.testing.assert_array_equal(TJ, apply_policy_map(m, greedy, J))


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_value_iteration_from_zero_is_nondecreasing(seed):
    rng = np.random.default_rng(seed)
    m = random_contractive_model(rng, int(rng.integers(1, 5)))
    J = np.zeros(m.n)
    for _ in range(30):
        TJ, _ = apply_bellman_map(m, J)
        assert np.all(TJ >= J)
        J = TJ


def test_exit_or_stay_grid_data():
    spec = exit_or_stay_chain(0.25)
    m = build_exponential(spec)
    us = np.array([0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(m.A[0][:, 0], (1 - us) * np.exp(-us), rtol=0, atol=1e-15)
    np.testing.assert_allclose(m.b[0], us, rtol=0, atol=1e-15)
