import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rspsim import sampling
from rspsim._sampling_py import count_trajectories as py_count
from rspsim.engine import RNG_ALGORITHM, SAMPLE_CHUNK, run_exact, sample
from rspsim.protocol import ChannelKind, ChannelSpec, Protocol, TargetSpec, ValidationError
from rspsim.random_inputs import random_case

from conftest import any_case, cases

S = 1 / math.sqrt(2)
REFERENCE = (TargetSpec(Protocol.REAL_1Q, (0.6, 0.8)), ChannelSpec(ChannelKind.ONE_PAIR, (0.6, 0.8)))


class TestRunExact:
    def test_reference_case(self):
        rep = run_exact(*REFERENCE)
        assert [b.probability for b in rep.branches] == pytest.approx([0.5, 0.5], abs=1e-12)
        assert rep.branches[0].ancilla_pass_probability == 1.0
        assert rep.branches[1].ancilla_pass_probability == pytest.approx(0.5625, abs=1e-12)
        assert rep.total_success == pytest.approx(0.78125, abs=1e-12)
        assert [b.fidelity for b in rep.branches] == pytest.approx([1, 1], abs=1e-12)
        assert [b.succeeds_via for b in rep.branches] == ["direct", "filtered"]
        assert rep.notes

    @given(cases(Protocol.REAL_2Q))
    def test_real2q_maximal(self, case):
        target, _ = case
        rep = run_exact(target, ChannelSpec(ChannelKind.TWO_PAIR, (0.5,) * 4))
        assert rep.total_success == pytest.approx(1.0, abs=1e-12)
        assert len(rep.branches) == 4
        assert all(b.fidelity >= 1 - 1e-12 for b in rep.branches)

    @given(cases(Protocol.COMPLEX_1Q))
    def test_complex1q_branch_two_fails(self, case):
        target, channel = case
        rep = run_exact(target, channel)
        b2 = rep.branches[1]
        assert b2.succeeds_via == "fails" and b2.ancilla_pass_probability == 0.0
        assert b2.final_state is None and b2.fidelity is None
        al, be = target.magnitudes
        a2, b2m = (abs(c) ** 2 for c in channel.coefficients)
        c2sq = 1 / (b2m * al * al + a2 * be * be)
        assert rep.total_success == pytest.approx(a2 * b2m * c2sq, abs=1e-12)

    def test_real2q_branch_probabilities(self):
        a, b, c, d = 0.2, 0.4, 0.5, math.sqrt(0.55)
        target = TargetSpec(Protocol.REAL_2Q, (0.1, 0.2, 0.3, math.sqrt(0.86)))
        rep = run_exact(target, ChannelSpec(ChannelKind.TWO_PAIR, (a, b, c, d)))
        al, be, ga, de = target.magnitudes
        k2 = 1 / ((b * c * d * al) ** 2 + (a * c * d * be) ** 2 + (a * b * d * ga) ** 2 + (a * b * c * de) ** 2)
        expected = [k2 * (a * a * c * d) ** 2, k2 * (a * a * b * d) ** 2, k2 * (a * a * b * c) ** 2]
        assert [br.success_contribution for br in rep.branches[1:]] == pytest.approx(expected, abs=1e-14)
        assert rep.branches[0].success_contribution == pytest.approx(k2 * (a * b * c * d) ** 2, abs=1e-14)

    @given(any_case)
    def test_invariants(self, case):
        rep = run_exact(*case)
        assert rep.probability_sum == pytest.approx(1.0, abs=1e-12)
        assert rep.total_success == pytest.approx(rep.analytic_success, abs=1e-12)
        for b in rep.branches:
            assert 0 <= b.probability <= 1 + 1e-12
            assert 0 <= b.ancilla_pass_probability <= 1 + 1e-12
            assert b.success_contribution <= b.probability + 1e-15
            if b.succeeded:
                assert b.fidelity >= 1 - 1e-12

    def test_propagates_validation(self):
        with pytest.raises(ValidationError):
            run_exact(TargetSpec(Protocol.REAL_1Q, (0.6, 0.8)), ChannelSpec(ChannelKind.TWO_PAIR, (0.5,) * 4))

    def test_monotone_in_a(self):
        target = TargetSpec(Protocol.REAL_1Q, (0.3, math.sqrt(0.91)))
        grid = np.linspace(0.02, S, 60)
        grid[-1] = S
        totals = [run_exact(target, ChannelSpec(ChannelKind.ONE_PAIR, (a, math.sqrt(1 - a * a)))).total_success
                  for a in grid]
        assert all(x <= y + 1e-12 for x, y in zip(totals, totals[1:]))
        assert totals[-1] == pytest.approx(1.0, abs=1e-12)


class TestSample:
    def test_maximal_always_succeeds(self):
        stats = sample(REFERENCE[0], ChannelSpec(ChannelKind.ONE_PAIR, (S, S)), 1000, seed=3)
        assert stats.successes == 1000
        assert stats.estimate == 1.0 and stats.std_error == 0.0

    def test_reference_within_four_sigma(self):
        stats = sample(*REFERENCE, trials=100_000, seed=11)
        assert abs(stats.estimate - 0.78125) <= 4 * stats.std_error
        assert stats.algorithm == RNG_ALGORITHM
        assert sum(stats.branch_counts) == stats.trials

    def test_deterministic(self):
        assert sample(*REFERENCE, trials=5000, seed=42) == sample(*REFERENCE, trials=5000, seed=42)

    def test_seed_changes_draws(self):
        assert sample(*REFERENCE, trials=5000, seed=1) != sample(*REFERENCE, trials=5000, seed=2)

    def test_zero_trials(self):
        with pytest.raises(ValueError):
            sample(*REFERENCE, trials=0, seed=1)

    def test_chunking_crosses_boundary(self):
        stats = sample(*REFERENCE, trials=SAMPLE_CHUNK + 17, seed=5)
        assert stats.trials == SAMPLE_CHUNK + 17 == sum(stats.branch_counts)

    def test_complex_failures_never_succeed(self):
        rng = np.random.default_rng(0)
        target, channel = random_case(Protocol.COMPLEX_2Q, rng)
        stats = sample(target, channel, 20_000, seed=9)
        # only branch 1 can succeed, and it always does
        assert stats.successes == stats.branch_counts[0]

    @pytest.mark.skipif(sampling.BACKEND != "compiled", reason="compiled kernel not active")
    @pytest.mark.parametrize("variant", list(Protocol))
    def test_backends_identical(self, variant):
        case = random_case(variant, np.random.default_rng(17))
        fast = sample(*case, trials=150_000, seed=8)
        slow = sample(*case, trials=150_000, seed=8, backend=py_count)
        assert fast == slow


@settings(max_examples=30)
@given(st.integers(1, 200), st.lists(st.floats(0, 1), min_size=1, max_size=4), st.integers(0, 2 ** 32))
def test_kernel_contract(n, weights, seed):
    # both kernels against a per-trial loop
    w = np.array(weights) + 1e-3
    cumulative = np.cumsum(w / w.sum())
    cumulative[-1] = 1.0
    rng = np.random.default_rng(seed)
    pass_prob = rng.random(len(w))
    u = rng.random((2, n))
    expected_counts = [0] * len(w)
    expected = 0
    for ub, ua in zip(u[0], u[1]):
        k = next(i for i, c in enumerate(cumulative) if ub < c or i == len(w) - 1)
        expected_counts[k] += 1
        expected += ua < pass_prob[k]
    for fn in {sampling.count_trajectories, py_count}:
        counts = np.zeros(len(w), dtype=np.int64)
        assert fn(u[0], u[1], cumulative, pass_prob, counts) == expected
        assert counts.tolist() == expected_counts
