import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abruptrl.mdp import (ModelError, NonstationaryProcess, RngStream, TabularMDP,
                          bellman_residual, discounted_return, env_step, rollout,
                          sample_next_state, value_iteration)

from conftest import FixedDraws


def row_mdp(row):
    n = len(row)
    kernel = np.tile(np.asarray(row, float), (n, 1, 1))
    return TabularMDP(kernel, np.zeros((n, 1, n)))


def tagged_mdp(tag, n=3):
    """Uniform kernel whose reward equals ``tag`` everywhere, to tell models apart."""
    return TabularMDP(np.full((n, 2, n), 1.0 / n), np.full((n, 2, n), float(tag)))


class TestTabularMDP:
    def test_rejects_rows_not_summing_to_one(self):
        with pytest.raises(ModelError):
            TabularMDP(np.array([[[0.5, 0.4]]]), np.zeros((1, 1, 2)))

    def test_rejects_negative_probability(self):
        with pytest.raises(ModelError):
            TabularMDP(np.array([[[1.2, -0.2]]]), np.zeros((1, 1, 2)))

    def test_rejects_nonfinite_reward(self):
        with pytest.raises(ModelError):
            TabularMDP(np.array([[[1.0]]]), np.array([[[np.inf]]]))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ModelError):
            TabularMDP(np.ones((1, 1, 1)), np.zeros((1, 2, 1)))

    def test_immutable(self, inv4):
        with pytest.raises(ValueError):
            inv4.kernel[0, 0, 0] = 1.0

    def test_cumulative_rows_end_at_one(self, inv4):
        assert np.all(inv4.cum_kernel[..., -1] == 1.0)

    def test_process_needs_matching_spaces(self):
        with pytest.raises(ModelError):
            NonstationaryProcess(tagged_mdp(0, 3), tagged_mdp(1, 4), 5)


class TestSampleNextState:
    def test_point_mass(self):
        mdp = row_mdp([0.0, 0.0, 1.0])
        for u in (0.0, 0.3, 0.999999):
            assert sample_next_state(mdp, 0, 0, FixedDraws([u])) == 2

    def test_uniform_two_states(self):
        assert sample_next_state(row_mdp([0.5, 0.5]), 0, 0, FixedDraws([0.75])) == 1

    def test_consumes_one_draw(self):
        draws = FixedDraws([0.1, 0.9])
        sample_next_state(row_mdp([0.5, 0.5]), 0, 0, draws)
        assert draws.values == [0.9]

    def test_frequencies_match_row(self, rng):
        row = np.array([0.2, 0.5, 0.3])
        mdp = row_mdp(row)
        n = 100_000
        counts = np.bincount([sample_next_state(mdp, 0, 0, rng) for _ in range(n)], minlength=3)
        sigma = np.sqrt(n * row * (1 - row))
        assert np.all(np.abs(counts - n * row) < 3 * sigma)

    @pytest.mark.parametrize("s,a", [(-1, 0), (3, 0), (0, 1)])
    def test_out_of_range(self, s, a):
        with pytest.raises(ValueError):
            sample_next_state(row_mdp([0.2, 0.5, 0.3]), s, a, RngStream(0))


class TestEnvStep:
    proc = NonstationaryProcess(tagged_mdp(0), tagged_mdp(1), 1000)

    def test_before_change(self):
        assert env_step(self.proc, 999, 0, 0, RngStream(1))[1] == 0.0

    def test_at_change(self):
        assert env_step(self.proc, 1000, 0, 0, RngStream(1))[1] == 1.0

    def test_change_at_zero(self):
        proc = NonstationaryProcess(tagged_mdp(0), tagged_mdp(1), 0)
        assert all(env_step(proc, t, 0, 0, RngStream(t))[1] == 1.0 for t in range(20))

    def test_reproducible(self, inv4):
        proc = NonstationaryProcess(inv4, inv4, 10)
        a = rollout(proc, [5, 4, 3, 2, 1, 0], 200, RngStream(7))
        b = rollout(proc, [5, 4, 3, 2, 1, 0], 200, RngStream(7))
        assert a == b

    def test_reward_matches_model(self, inv4, inv18):
        proc = NonstationaryProcess(inv4, inv18, 50)
        for rec in rollout(proc, [5, 4, 3, 2, 1, 0], 100, RngStream(3)):
            model = proc.model_at(rec.t)
            assert rec.reward == model.reward[rec.state, rec.action, rec.next_state]


class TestValueIteration:
    def test_geometric_series(self):
        mdp = TabularMDP(np.ones((1, 1, 1)), np.ones((1, 1, 1)))
        plan = value_iteration(mdp, 0.9, tol=1e-10)
        assert plan.V[0] == pytest.approx(10.0, abs=1e-8)

    def test_zero_reward(self):
        mdp = TabularMDP(np.full((3, 2, 3), 1 / 3), np.zeros((3, 2, 3)))
        plan = value_iteration(mdp, 0.9)
        assert np.all(plan.V == 0) and np.all(plan.policy == 0)

    @pytest.mark.parametrize("beta,tol", [(1.0, 1e-6), (0.0, 1e-6), (0.9, 0.0)])
    def test_bad_arguments(self, beta, tol):
        mdp = TabularMDP(np.ones((1, 1, 1)), np.ones((1, 1, 1)))
        with pytest.raises(ValueError):
            value_iteration(mdp, beta, tol=tol)

    def test_residual_bound_on_inventory(self, inv4):
        beta, tol = 0.9999, 1e-6
        plan = value_iteration(inv4, beta, tol=tol)
        assert bellman_residual(inv4, plan.Q, beta).max() <= tol / (1 - beta)

    def test_matches_policy_evaluation(self, inv4):
        # independent check: solve (I - beta P_pi) V = r_pi for the returned policy
        beta = 0.95
        plan = value_iteration(inv4, beta, tol=1e-12)
        idx = np.arange(6)
        P = inv4.kernel[idx, plan.policy]
        r = np.einsum("ij,ij->i", P, inv4.reward[idx, plan.policy])
        V = np.linalg.solve(np.eye(6) - beta * P, r)
        np.testing.assert_allclose(plan.V, V, atol=1e-8)

    def test_optimal_action_mask_accepts_ties(self, inv4):
        plan = value_iteration(inv4, 0.9999)
        # at a full warehouse every order pays the fixed cost for nothing
        assert plan.optimal_actions()[5].tolist() == [True] + [False] * 5
        # one free slot: every positive order buys exactly one item
        assert plan.optimal_actions()[4, 1:].all()
        assert plan.is_optimal([5, 4, 3, 2, 5, 0])
        assert not plan.is_optimal([5, 4, 3, 2, 1, 1])


class TestDiscountedReturn:
    def test_zeros(self):
        assert discounted_return([0.0] * 5, 0.9, 2) == (0.0, 0.0)

    def test_empty(self):
        assert discounted_return([], 0.9, 0) == (0.0, 0.0)

    def test_undiscounted(self):
        assert discounted_return([1, 1, 1, 1], 1.0, 2) == (4.0, 2.0)

    def test_clock_resets_at_change(self):
        assert discounted_return([2, 4], 0.5, 1) == (6.0, 4.0)

    def test_gamma_outside(self):
        with pytest.raises(ValueError):
            discounted_return([1, 2], 0.9, 3)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.floats(0.1, 0.99))
    def test_gamma_zero_is_plain_discounting(self, rewards, beta):
        total, post = discounted_return(rewards, beta, 0)
        expected = sum(beta ** t * r for t, r in enumerate(rewards))
        assert total == pytest.approx(expected, abs=1e-9) and post == total

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40), st.data())
    def test_no_change_within_horizon(self, rewards, data):
        total, post = discounted_return(rewards, 0.9, len(rewards))
        assert post == 0.0
        assert total == pytest.approx(sum(0.9 ** t * r for t, r in enumerate(rewards)), abs=1e-9)


def test_rng_streams_independent_of_order():
    a = [RngStream.for_run(9, i).uniform() for i in range(5)]
    b = [RngStream.for_run(9, i).uniform() for i in reversed(range(5))][::-1]
    assert a == b and len(set(a)) == 5
