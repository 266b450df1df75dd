import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affinedp import (
    ModelSpec,
    assemble_policy,
    build_deterministic_sp,
    build_twin_cycles,
    estimate_limsup_cost,
    evaluate_contractive,
    finite_horizon_compose,
)
from affinedp.core import apply_policy_map
from affinedp.errors import NotContractive
from affinedp.expssp import enumerate_cost, exit_or_stay_model
from affinedp.instances import random_chain, random_contractive_model, random_policy
from affinedp.solvers import build_weighted_norm
from test_core import grid_model

E = math.e


class TestEvaluateContractive:
    def test_exit_or_stay_half(self):
        J = evaluate_contractive(grid_model(np.array([0.5])), (0,))[0]
        series = sum(0.5 * (0.5 * math.exp(-0.5)) ** k for k in range(200))
        assert J == pytest.approx(series, abs=1e-12)
        assert J == pytest.approx(0.5 / (1 - 0.5 * math.exp(-0.5)), abs=1e-14)

    def test_zero_matrix_returns_b(self):
        m = ModelSpec(2, [["a"], ["b"]], [np.zeros((1, 2))] * 2, [[0.7], [1.3]], [0, 0])
        np.testing.assert_array_equal(evaluate_contractive(m, (0, 0)), [0.7, 1.3])

    def test_negative_two_cycle_costs_zero(self):
        m = build_deterministic_sp(2, [(0, 1, -1.0), (1, 0, -1.0)])
        assert np.all(evaluate_contractive(m, (0, 0)) == 0.0)

    def test_noncontractive_raises(self):
        m = ModelSpec(1, [["a"]], [[[1.0]]], [[1.0]], [0.0])
        with pytest.raises(NotContractive):
            evaluate_contractive(m, (0,))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_residual_and_positivity(self, seed):
        rng = np.random.default_rng(seed)
        m = random_contractive_model(rng, int(rng.integers(1, 7)))
        mu = random_policy(rng, m)
        J = evaluate_contractive(m, mu)
        assert np.all(J >= 0)
        assert np.max(np.abs(J - apply_policy_map(m, mu, J))) < 1e-9
        v = evaluate_contractive(m.with_b([np.ones(k) for k in m.num_controls]), mu)
        assert np.all(v >= 1.0)


class TestCompose:
    def test_empty_sequence(self, scalar_half):
        np.testing.assert_array_equal(finite_horizon_compose(scalar_half, [], [4.0]), [4.0])

    def test_two_steps(self, scalar_half):
        assert finite_horizon_compose(scalar_half, [(0,), (0,)], [0.0])[0] == 1.5

    def test_order_is_right_to_left(self):
        m = ModelSpec(1, [["a", "b"]], [[[0.5], [0.0]]], [[1.0, 2.0]], [0.0])
        # T_a T_b 0 = 1 + 0.5*2 = 2; T_b T_a 0 = 2
        assert finite_horizon_compose(m, [(0,), (1,)], [0.0])[0] == 2.0
        # T_a T_a T_b 0 = 1 + 0.5*(1 + 0.5*2) = 2
        assert finite_horizon_compose(m, [(0,), (0,), (1,)], [0.0])[0] == 2.0
        # T_b T_a T_a 0 = 2 + 0 = 2, T_a T_b T_a 0 = 1 + 0.5*2 = 2 ...
        assert finite_horizon_compose(m, [(1,), (0,)], [10.0])[0] == 2.0
        assert finite_horizon_compose(m, [(0,), (1,)], [10.0])[0] == 2.0
        assert finite_horizon_compose(m, [(0,)], [10.0])[0] == 6.0

    def test_matches_enumeration(self):
        rng = np.random.default_rng(11)
        spec = random_chain(rng, 3)
        from affinedp import build_exponential
        m = build_exponential(spec)
        mu = random_policy(rng, m)
        np.testing.assert_allclose(finite_horizon_compose(m, [mu] * 6, m.jbar),
                                   enumerate_cost(spec, mu, 6), rtol=0, atol=1e-10)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(0, 10))
    def test_closed_form_powers(self, seed, N):
        # T_mu^N J = A^N J + sum_{k<N} A^k b
        rng = np.random.default_rng(seed)
        m = random_contractive_model(rng, int(rng.integers(1, 5)))
        mu = random_policy(rng, m)
        pm = assemble_policy(m, mu)
        J = rng.random(m.n) * 3
        closed = np.linalg.matrix_power(pm.Amu, N) @ J + sum(
            (np.linalg.matrix_power(pm.Amu, k) @ pm.bmu for k in range(N)), np.zeros(m.n))
        np.testing.assert_allclose(finite_horizon_compose(m, [mu] * N, J), closed, rtol=1e-12, atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_start_vector_forgotten_geometrically(self, seed):
        rng = np.random.default_rng(seed)
        m = random_contractive_model(rng, int(rng.integers(1, 5)))
        mu = random_policy(rng, m)
        norm = build_weighted_norm(m, mu)
        J1, J2 = rng.random(m.n) * 5, rng.random(m.n) * 5
        start = norm.norm(J1 - J2)
        for N in (1, 3, 8):
            gap = norm.norm(finite_horizon_compose(m, [mu] * N, J1) - finite_horizon_compose(m, [mu] * N, J2))
            assert gap <= norm.beta ** N * start + 1e-12


class TestLimsup:
    def test_contractive_matches_exact(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = random_contractive_model(rng, 3)
            mu = random_policy(rng, m)
            est = estimate_limsup_cost(m, mu)
            np.testing.assert_allclose(est.J, evaluate_contractive(m, mu), rtol=0, atol=1e-9)
            assert est.periodic_detected and est.period == 1

    def test_twin_cycles(self):
        m, mu = build_twin_cycles(3.0)
        est = estimate_limsup_cost(m, mu)
        assert est.periodic_detected and est.period == 3
        assert est.J[0] == pytest.approx(0.5 * (E + 1 / E), abs=1e-9)
        assert est.J[1] == pytest.approx(E, abs=1e-9)

    def test_twin_cycles_state_five_matches_finite_horizon(self):
        # the lim sup from the second cycle's entry state is the max over one
        # period of its own finite-horizon costs
        m, mu = build_twin_cycles(3.0)
        est = estimate_limsup_cost(m, mu)
        finite = [finite_horizon_compose(m, [mu] * N, m.jbar)[4] for N in range(300, 303)]
        assert est.J[4] == pytest.approx(max(finite), abs=1e-12)
        assert est.J[4] == pytest.approx(1.0, abs=1e-12)

    def test_linear_divergence(self):
        m = ModelSpec(1, [["a"]], [[[1.0]]], [[1.0]], [0.0])
        # the iterates grow like N, so a cap below the horizon flags divergence
        est = estimate_limsup_cost(m, (0,), burn=1000, window=120, divergence_cap=500.0)
        assert est.J[0] == np.inf

    def test_default_cap_reports_large_finite_value(self):
        m = ModelSpec(1, [["a"]], [[[1.0]]], [[1.0]], [0.0])
        est = estimate_limsup_cost(m, (0,))
        assert est.J[0] == 1120.0 and not est.periodic_detected

    def test_exponential_divergence_frozen(self):
        m = ModelSpec(2, [["a"], ["b"]], [[[2.0, 0.0]], [[0.0, 0.5]]], [[1.0], [1.0]], [0, 0])
        est = estimate_limsup_cost(m, (0, 0))
        assert est.J[0] == np.inf
        assert est.J[1] == pytest.approx(2.0, abs=1e-12)

    def test_exit_or_stay_u0(self):
        est = estimate_limsup_cost(exit_or_stay_model(0.1), (0,))
        assert est.J[0] == pytest.approx(1.0, abs=1e-12)
