import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rspsim.protocol import ChannelKind, ChannelSpec, Protocol, TargetSpec, build_basis
from rspsim.statevec import (
    DimensionError,
    Operator,
    StateVector,
    apply,
    fidelity,
    identity,
    inner,
    project_subsystem,
    tensor,
)

from conftest import cases, states
import brute

KET0 = StateVector.basis(0)
KET1 = StateVector.basis(1)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return Operator(q * (np.diag(r) / abs(np.diag(r))))


class TestStateVector:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(DimensionError):
            StateVector([1, 0, 0])

    def test_rejects_too_many_qubits(self):
        with pytest.raises(DimensionError):
            StateVector(np.zeros(64))

    @pytest.mark.parametrize("bad", [np.nan, np.inf, complex(0, np.inf)])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(ValueError):
            StateVector([1.0, bad])

    def test_immutable(self):
        s = StateVector([1, 0])
        with pytest.raises(ValueError):
            s.amps[0] = 2

    def test_big_endian_basis(self):
        assert StateVector.basis(1, 2).amps.tolist() == [0, 1, 0, 0]
        assert tensor(KET1, KET0).amps.tolist() == [0, 0, 1, 0]


class TestTensor:
    def test_basis_product(self):
        assert tensor(KET0, KET0).amps.tolist() == [1, 0, 0, 0]

    def test_linearity(self):
        a, b = 0.6, 0.8
        out = tensor(StateVector([a, b]), KET0)
        assert np.allclose(out.amps, [a, 0, b, 0], atol=0)

    def test_channel_with_ancilla(self):
        # |A B b>: |000> -> index 0, |110> -> index 6
        chan = StateVector(brute.channel_state([0.6, 0.8]))
        out = tensor(chan, KET0)
        assert out.qubit_count == 3
        assert out.amps.tolist() == [0.6, 0, 0, 0, 0, 0, 0.8, 0]
        assert out.norm() == pytest.approx(chan.norm(), abs=1e-15)


class TestInner:
    def test_trivial(self):
        assert inner(KET0, KET0) == 1
        assert inner(KET0, KET1) == 0

    def test_conjugates_left(self):
        assert inner(StateVector([1j, 0]), StateVector([1, 0])) == -1j

    def test_real1q_basis_orthogonal(self):
        basis = build_basis(TargetSpec(Protocol.REAL_1Q, (0.6, 0.8)),
                            ChannelSpec(ChannelKind.ONE_PAIR, (0.6, 0.8)))
        assert abs(inner(basis[0], basis[1])) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            inner(KET0, StateVector.basis(0, 2))


class TestApply:
    def test_identity(self):
        s = StateVector([0.6, 0.8j])
        assert np.array_equal(apply(identity(1), s).amps, s.amps)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            apply(identity(2), KET0)

    def test_real1q_filter_on_branch_two(self):
        from rspsim.protocol import build_filter, collapse_pattern, filter_unitary
        al, be, a, b = 0.6, 0.8, 0.6, 0.8
        target = TargetSpec(Protocol.REAL_1Q, (al, be))
        collapsed = StateVector([a * a * be, -b * b * al])
        flt = build_filter(collapsed, collapse_pattern(target, 2))
        out = apply(filter_unitary(flt), tensor(KET0, collapsed.normalized()))
        kept, prob = project_subsystem(out, [0], KET0)
        assert prob == pytest.approx(0.5625, abs=1e-12)
        assert prob == pytest.approx(a ** 4 / (a ** 4 * be ** 2 + b ** 4 * al ** 2), abs=1e-12)
        assert fidelity(kept.normalized(), StateVector([be, -al])) >= 1 - 1e-12

    def test_degenerate_filter_trivial_on_ancilla_zero(self):
        from rspsim.protocol import TwoOutcomeFilter, filter_unitary
        u = filter_unitary(TwoOutcomeFilter((1.0, 1.0), (0.0, 0.0)))
        s = StateVector([0.6, -0.8])
        out = apply(u, tensor(KET0, s))
        assert np.array_equal(out.amps[:2], s.amps)
        assert np.array_equal(out.amps[2:], [0, 0])


class TestProject:
    def test_trivial(self):
        res, p = project_subsystem(StateVector.basis(0, 2), [0], KET0)
        assert p == 1.0
        assert res.amps.tolist() == [1, 0]

    def test_real1q_branch_one(self):
        al, be, a, b = 0.6, 0.8, 0.6, 0.8
        basis = build_basis(TargetSpec(Protocol.REAL_1Q, (al, be)),
                            ChannelSpec(ChannelKind.ONE_PAIR, (a, b)))
        res, p = project_subsystem(StateVector([a, 0, 0, b]), [0], basis[0])
        assert p == pytest.approx(0.5, abs=1e-12)
        expected = np.array([al, be]) * 0.48 / math.sqrt(0.4608)
        assert np.allclose(res.amps, expected, atol=1e-12, rtol=0)
        # independent loop computation
        ref = brute.collapse(brute.channel_state([a, b]), brute.real1q_basis(al, be, a, b)[0])
        assert np.allclose(res.amps, ref, atol=1e-15, rtol=0)

    def test_non_prefix_mask(self):
        # |01> projected on qubit 1 with <1| leaves |0> on qubit 0
        res, p = project_subsystem(StateVector.basis(1, 2), [1], KET1)
        assert p == 1.0
        assert res.amps.tolist() == [1, 0]

    @pytest.mark.parametrize("mask", [[2], [0, 0], [-1]])
    def test_bad_mask(self, mask):
        bvec = StateVector.basis(0, len(mask))
        with pytest.raises(DimensionError):
            project_subsystem(StateVector.basis(0, 2), mask, bvec)

    def test_full_mask(self):
        with pytest.raises(DimensionError):
            project_subsystem(StateVector.basis(0, 2), [0, 1], StateVector.basis(0, 2))

    def test_non_normalized_bvec(self):
        with pytest.raises(ValueError):
            project_subsystem(StateVector.basis(0, 2), [0], StateVector([1, 1]))

    def test_clamps_tiny_probability(self):
        _, p = project_subsystem(StateVector([1, 0, 1e-9, 0]), [0], KET1)
        assert p == 0.0

    @given(cases(Protocol.REAL_2Q))
    def test_real2q_basis_probabilities_sum_to_one(self, case):
        target, channel = case
        psi = channel.state()
        probs = [project_subsystem(psi, channel.alice_mask, v)[1] for v in build_basis(target, channel).vectors]
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
        assert min(probs) >= 0.0


class TestFidelity:
    def test_trivial(self):
        s = StateVector([0.6, 0.8])
        assert fidelity(s, s) == pytest.approx(1.0, abs=1e-15)
        assert fidelity(KET0, KET1) == 0.0

    @given(st.floats(min_value=-10, max_value=10))
    def test_global_phase(self, theta):
        s = StateVector([0.6, 0.8j])
        assert fidelity(s, s.scaled(np.exp(1j * theta))) >= 1 - 1e-12


@given(states(2), st.integers(0, 2 ** 16))
def test_complete_basis_probabilities(s, seed):
    basis = random_unitary(np.random.default_rng(seed), 2).matrix
    sv = StateVector(s)
    probs = [project_subsystem(sv, [1], StateVector(basis[:, i]))[1] for i in range(2)]
    assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
    assert all(p >= 0.0 for p in probs)


@given(states(2), states(1))
def test_tensor_then_project_recovers_factor(u, v):
    su, sv = StateVector(u), StateVector(v)
    joint = tensor(su, sv)
    res, p = project_subsystem(joint, [0, 1], su)
    assert p == pytest.approx(1.0, abs=1e-12)
    assert fidelity(res.normalized(), sv) >= 1 - 1e-12
    res, _ = project_subsystem(joint, [2], sv)
    assert fidelity(res.normalized(), su) >= 1 - 1e-12


@given(states(3), st.integers(0, 2 ** 16))
def test_unitary_preserves_norm(s, seed):
    u = random_unitary(np.random.default_rng(seed), 8)
    assert u.is_unitary()
    assert apply(u, StateVector(s)).norm() == pytest.approx(1.0, abs=1e-12)


def test_unitarity_deviation_non_finite():
    assert Operator([[np.nan, 0], [0, 1]]).unitarity_deviation() == float("inf")
