import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abruptrl.detect import (Baseline, CusumDetector, DetectorStateError, GlrCusum,
                             baseline_stats, check_alarm, cusum_update,
                             estimate_information_number, glr_explicit, glr_update,
                             log_likelihood_ratio)
from abruptrl.inventory import full_stock_map
from abruptrl.mdp import NonstationaryProcess, RngStream, TabularMDP, rollout

from conftest import bernoulli_mdp


def armed(direction, mu0=0.0, sd0=1.0, eta=0.5, threshold=6.0):
    det = CusumDetector(direction=direction, eta=eta, threshold=threshold)
    det.arm(Baseline(mu0, sd0, (0, 2)))
    return det


class TestBaseline:
    def test_constant(self):
        b = baseline_stats([3.0] * 10)
        assert b.mu0 == 3.0 and b.sd0 == 0.0

    def test_two_points(self):
        b = baseline_stats([1.0, 3.0])
        assert b.mu0 == 2.0 and b.sd0 == pytest.approx(math.sqrt(2))

    def test_too_short(self):
        with pytest.raises(ValueError):
            baseline_stats([1.0])

    def test_records_window(self):
        assert baseline_stats(np.arange(100.0), (500, 600)).window == (500, 600)


class TestCusum:
    def test_unarmed(self):
        with pytest.raises(DetectorStateError):
            cusum_update(CusumDetector(), 1.0)

    def test_at_mean_stays_zero(self):
        det = armed("low_to_high", mu0=5.0, sd0=2.0)
        assert cusum_update(det, 5.0) == 0.0

    def test_increment(self):
        det = armed("low_to_high", mu0=5.0, sd0=2.0, eta=0.5)
        assert cusum_update(det, 5.0 + 0.5 * 2.0 + 1.0) == pytest.approx(1.0)

    def test_high_to_low_mirror(self):
        det = armed("high_to_low", mu0=5.0, sd0=2.0, eta=0.5)
        assert cusum_update(det, 5.0 - 1.0 - 1.0) == pytest.approx(-1.0)

    def test_two_sided_reports_larger(self):
        det = armed("two_sided", eta=0.0)
        cusum_update(det, 3.0)
        cusum_update(det, -1.0)
        assert det.w == pytest.approx(2.0)
        cusum_update(det, -4.0)
        assert det.w == pytest.approx(-5.0)

    def test_sign_invariants_million_updates(self):
        rng = np.random.default_rng(0)
        r = rng.normal(0.0, 3.0, 1_000_000)
        up, down = armed("low_to_high"), armed("high_to_low")
        w_up = np.empty(r.size)
        w_down = np.empty(r.size)
        for i, x in enumerate(r):
            w_up[i] = cusum_update(up, x)
            w_down[i] = cusum_update(down, x)
        assert w_up.min() >= 0.0 and w_down.max() <= 0.0

    def test_pre_change_walk_keeps_returning_to_zero(self):
        rng = np.random.default_rng(1)
        det = armed("high_to_low", eta=0.5)
        w = np.array([cusum_update(det, x) for x in rng.normal(0.0, 1.0, 100_000)])
        zeros = np.flatnonzero(w == 0.0)
        assert zeros.size > 1000 and zeros[-1] > 99_000
        assert abs(w.mean()) < 5.0

    def test_threshold_resolution(self):
        det = armed("high_to_low", sd0=2.5, threshold=6.0)
        assert det.threshold_abs == 15.0

    def test_alarm_is_strict_and_monotone(self):
        det = armed("high_to_low", sd0=1.0, eta=0.0, threshold=2.0)
        assert not check_alarm(det)
        cusum_update(det, -2.0)
        assert not check_alarm(det)  # |w| == A is not an alarm
        assert check_alarm(det, 1.5)
        cusum_update(det, -0.5)
        assert check_alarm(det)

    def test_deterministic_drop_delay(self):
        # rewards at mu0 until the change, then mu0 - 10 sd0 every step
        sd0, eta, mult = 2.0, 0.92, 6.0
        det = armed("high_to_low", mu0=10.0, sd0=sd0, eta=eta, threshold=mult)
        steps = 0
        while not check_alarm(det):
            cusum_update(det, 10.0 - 10 * sd0)
            steps += 1
        assert steps == math.ceil(mult * sd0 / (10 * sd0 - eta * sd0))


class TestGlr:
    def test_identical_kernels(self, inv4):
        g = GlrCusum(inv4, inv4, 5.0)
        proc = NonstationaryProcess(inv4, inv4, 0)
        for rec in rollout(proc, full_stock_map(5), 200, RngStream(1)):
            assert glr_update(g, rec.state, rec.action, rec.next_state) == 0.0

    def test_point_mass_increment(self):
        pre = bernoulli_mdp(0.5)
        post = TabularMDP(np.array([[[0.0, 1.0]], [[0.0, 1.0]]]), np.zeros((2, 1, 2)))
        g = GlrCusum(pre, post, 10.0)
        assert glr_update(g, 0, 0, 1) == pytest.approx(math.log(2))

    def test_impossible_transition_flags_alarm(self):
        pre = TabularMDP(np.array([[[1.0, 0.0]], [[1.0, 0.0]]]), np.zeros((2, 1, 2)))
        g = GlrCusum(pre, bernoulli_mdp(0.5), 10.0)
        glr_update(g, 0, 0, 1)
        assert g.impossible and g.alarmed() and g.w == math.inf

    def test_recursive_equals_explicit(self, inv4, inv18):
        proc = NonstationaryProcess(inv4, inv18, 25)
        root = np.random.default_rng(5)
        for trial in range(100):
            length = int(root.integers(1, 51))
            policy = root.integers(0, 6, size=6)
            recs = rollout(proc, policy, length, RngStream(trial))
            llrs = [log_likelihood_ratio(inv4, inv18, r.state, r.action, r.next_state) for r in recs]
            if any(math.isinf(x) for x in llrs):
                continue
            g = GlrCusum(inv4, inv18, math.inf)
            rec_w = [glr_update(g, r.state, r.action, r.next_state) for r in recs]
            np.testing.assert_allclose(rec_w, glr_explicit(llrs), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=50))
    def test_recursion_identity(self, llrs):
        w, out = 0.0, []
        for x in llrs:
            w = max(0.0, w + x)
            out.append(w)
        np.testing.assert_allclose(out, glr_explicit(llrs), atol=1e-9)


class TestInformationNumber:
    def test_identical_models(self, inv4):
        assert estimate_information_number(full_stock_map(5), inv4, inv4, 10_000, RngStream(0)) == 0.0

    def test_bernoulli_kl(self):
        kl = 0.9 * math.log(1.8) + 0.1 * math.log(0.2)
        est, se = estimate_information_number([0, 0], bernoulli_mdp(0.5), bernoulli_mdp(0.9),
                                              100_000, RngStream(3), return_stderr=True)
        assert kl == pytest.approx(0.368, abs=1e-3)
        assert abs(est - kl) < 3 * se

    def test_full_stock_more_informative_than_lean_policy(self, inv4, inv18):
        full = estimate_information_number(full_stock_map(5), inv4, inv18, 50_000, RngStream(4))
        lean = estimate_information_number([3, 2, 0, 0, 0, 0], inv4, inv18, 50_000, RngStream(4))
        assert full > lean > 0

    def test_impossible_transition(self):
        pre = TabularMDP(np.array([[[1.0, 0.0]], [[1.0, 0.0]]]), np.zeros((2, 1, 2)))
        est = estimate_information_number([0, 0], pre, bernoulli_mdp(0.5), 1000, RngStream(1))
        assert est == math.inf


def test_glr_delay_scales_with_log_threshold(inv4, inv18):
    # delay of the likelihood-ratio CUSUM ~ log(threshold) / I, loose agreement
    policy = full_stock_map(5)
    info = estimate_information_number(policy, inv4, inv18, 200_000, RngStream(8))
    for log_a in (4.0, 8.0):
        delays = []
        for i in range(300):
            proc = NonstationaryProcess(inv18, inv18, 0)
            g = GlrCusum(inv4, inv18, log_a)
            for rec in rollout(proc, policy, 1000, RngStream.for_run(8, i)):
                glr_update(g, rec.state, rec.action, rec.next_state)
                if g.alarmed():
                    delays.append(rec.t + 1)
                    break
        assert np.mean(delays) == pytest.approx(log_a / info, rel=0.3)
