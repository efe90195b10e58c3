"""Independent checks that never touch the closed-form probabilities.

Everything here works on explicit full-space matrices over ``A.. B.. b``
(Alice, Bob, ancilla last) rather than the engine's subsystem contractions,
so agreement between the two is a meaningful cross-check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .protocol import (
    ChannelSpec,
    MeasurementBasis,
    PatternVector,
    Protocol,
    TargetSpec,
    TwoOutcomeFilter,
    build_basis,
    build_filter,
    collapse_pattern,
    filter_unitary,
)
from .random_inputs import random_target
from .statevec import Operator, StateVector, _eye

FIDELITY_TOL = 1e-12
RECOVERY_SEARCH_TARGETS = 100
RECOVERY_SEARCH_SEED = 20240611


class RecoveryNotFound(RuntimeError):
    """No signed permutation maps the pattern onto the target."""


def gram_check(basis: MeasurementBasis) -> float:
    """Max ``|<phi_i|phi_j> - delta_ij|``."""
    g = basis.gram()
    return float(np.max(np.abs(g - _eye(len(basis)))))


def resolution_check(basis: MeasurementBasis) -> float:
    """Max entry of ``|sum_i |phi_i><phi_i| - I|``."""
    m = basis.matrix()
    return float(np.max(np.abs(m.T @ m.conj() - _eye(m.shape[1]))))


def kron(*factors: np.ndarray) -> np.ndarray:
    """Kronecker product of 2-D factors (lighter than ``np.kron`` for tiny matrices)."""
    out = factors[0]
    for f in factors[1:]:
        r1, c1 = out.shape
        r2, c2 = f.shape
        out = (out[:, None, :, None] * f[None, :, None, :]).reshape(r1 * r2, c1 * c2)
    return out


def _batched_kron(stack: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``kron(stack[i], m)`` for every ``i``."""
    k, r1, c1 = stack.shape
    r2, c2 = m.shape
    return (stack[:, :, None, :, None] * m[None, None, :, None, :]).reshape(k, r1 * r2, c1 * c2)


def qubit_permutation(order: list[int]) -> np.ndarray:
    """Matrix sending a state on qubits ``(q_order[0], q_order[1], ...)`` to natural order.

    Column index is the big-endian index in the permuted layout, where
    position ``p`` holds qubit ``order[p]``; row index is the natural layout.
    """
    n = len(order)
    dim = 1 << n
    perm = np.zeros((dim, dim))
    for col in range(dim):
        bits = [(col >> (n - 1 - p)) & 1 for p in range(n)]
        natural = [0] * n
        for p, q in enumerate(order):
            natural[q] = bits[p]
        row = 0
        for bit in natural:
            row = (row << 1) | bit
        perm[row, col] = 1.0
    return perm


@lru_cache(maxsize=None)
def _ancilla_last(bob_qubits: int) -> np.ndarray:
    # filter_unitary lays out (ancilla, Bob...); the oracle's space is (Bob..., ancilla)
    return qubit_permutation([bob_qubits] + list(range(bob_qubits)))


def embed_filter(op: Operator) -> np.ndarray:
    bob_qubits = op.dim.bit_length() - 2
    s = _ancilla_last(bob_qubits)
    return s @ op.matrix @ s.T


def signed_permutations(n: int):
    """All ``n! * 2**n`` signed permutation matrices of size ``n``."""
    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            m = np.zeros((n, n))
            m[np.arange(n), list(perm)] = signs
            yield m


def _pattern_for(pattern: PatternVector, t: np.ndarray) -> np.ndarray:
    return np.array([s * t[p] for p, s in zip(pattern.perm, pattern.signs)])



def pauli_recovery_search(pattern: PatternVector, target: TargetSpec,
                          n_targets: int = RECOVERY_SEARCH_TARGETS,
                          seed: int = RECOVERY_SEARCH_SEED) -> Operator:
    """Exhaustive search for one signed permutation mapping the pattern to the target.

    The operator must work for ``target`` and for ``n_targets`` further random
    targets of the same variant (same pattern structure), i.e. it has to be
    target-independent.
    """
    if not target.variant.is_real:
        raise ValueError("recovery search applies to real-variant patterns")
    rng = np.random.default_rng(seed)
    cases = [(pattern.array(), target.amplitudes())]
    for _ in range(n_targets):
        t = random_target(target.variant, rng).amplitudes()
        cases.append((_pattern_for(pattern, t), t))
    pats = np.array([c[0] for c in cases])
    tgts = np.array([c[1] for c in cases])
    for m in signed_permutations(pats.shape[1]):
        mapped = pats @ m.T
        ov = np.abs(np.sum(mapped.conj() * tgts, axis=1)) ** 2
        norms = np.sum(np.abs(mapped) ** 2, axis=1) * np.sum(np.abs(tgts) ** 2, axis=1)
        if np.all(ov / norms >= 1.0 - FIDELITY_TOL):
            return Operator(m)
    raise RecoveryNotFound(f"no signed permutation recovers pattern {pattern.perm}/{pattern.signs}")


@lru_cache(maxsize=None)
def searched_recovery(variant: Protocol, branch: int) -> Operator:
    """Target-independent recovery operator for a branch, found by search (cached)."""
    variant = Protocol(variant)
    if branch == 1 or not variant.is_real:
        return Operator(np.eye(variant.branch_count))
    reference = random_target(variant, np.random.default_rng(RECOVERY_SEARCH_SEED + branch))
    return pauli_recovery_search(collapse_pattern(reference, branch), reference)


@lru_cache(maxsize=None)
def _full_recovery(variant: Protocol, branch: int) -> np.ndarray:
    # recovery on Bob, ancilla projected on |0>, identity on Alice
    nb = variant.branch_count
    out = kron(np.eye(nb), searched_recovery(variant, branch).matrix, np.array([[1.0, 0.0], [0.0, 0.0]]))
    out.setflags(write=False)
    return out


def uncorrected_branch2_filter(channel: ChannelSpec) -> TwoOutcomeFilter:
    """Two-pair branch-2 filter with the ``bd/ac`` fourth entry. Deliberately broken."""
    a, b, c, d = channel.magnitudes
    return TwoOutcomeFilter.from_pass_amplitudes([1.0, a * a / (b * b), a * d / (b * c), b * d / (a * c)],
                                                 validate=False)


@dataclass
class OracleReport:
    branch_probabilities: list[float]
    pass_probabilities: list[float]
    success_contributions: list[float]
    fidelities: list[float | None]
    total_success: float
    gram_deviation: float
    resolution_deviation: float
    unitarity_deviation: float
    filter_domain_deviation: float
    reconstruction_deviation: float

    def checks(self, tol: float = 1e-12) -> dict[str, tuple[float, bool]]:
        """Structural checks as ``name -> (deviation, passed)``."""
        devs = {
            "gram": self.gram_deviation,
            "resolution": self.resolution_deviation,
            "unitarity": self.unitarity_deviation,
            "filter_domain": self.filter_domain_deviation,
            "reconstruction": self.reconstruction_deviation,
            "probability_sum": abs(math.fsum(self.branch_probabilities) - 1.0),
            "fidelity": max([1.0 - f for f in self.fidelities if f is not None], default=0.0),
        }
        return {k: (v, v <= tol) for k, v in devs.items()}

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks().values())


def reconstruction_deviation(basis: MeasurementBasis, channel: ChannelSpec) -> float:
    """Rebuild the channel as ``sum_i |phi_i> (x) residual_i`` and return the max error."""
    psi = channel.state().amps
    rows = basis.matrix()
    bras = _batched_kron(rows.conj()[:, None, :], _eye(channel.kind.size))
    residuals = bras @ psi
    rebuilt = (rows[:, :, None] * residuals[:, None, :]).reshape(len(rows), -1).sum(axis=0)
    return float(np.max(np.abs(rebuilt - psi)))


def born_enumerate(target: TargetSpec, channel: ChannelSpec, filter_override=None) -> OracleReport:
    """Recompute every branch as squared norms of full-space projected states.

    ``filter_override(channel, branch, collapsed)`` may replace the filter
    for a branch (used to inject known-bad filters).
    """
    variant = target.variant
    basis = build_basis(target, channel)
    nb = channel.kind.size
    eye_a = _eye(nb)
    anc0 = np.array([[1.0, 0.0], [0.0, 0.0]])

    rows = basis.matrix()
    alice = rows[:, :, None] * rows.conj()[:, None, :]
    psi = kron(channel.state().amps[:, None], np.array([[1.0], [0.0]])).ravel()
    projectors = _batched_kron(alice, _eye(2 * nb))
    projected = projectors @ psi
    probs = np.einsum("ij,ij->i", projected.conj(), projected).real.tolist()

    t = target.amplitudes()
    # every path leaves the ancilla in |0> on success, so one check operator per branch suffices
    checks = _batched_kron(alice, kron(np.outer(t, t.conj()), anc0))
    bob_bras = _batched_kron(rows.conj()[:, None, :], kron(eye_a, np.array([[1.0, 0.0]])))

    passes, contribs, fids = [], [], []
    unit_dev, dom_dev = 0.0, 0.0
    for i in range(1, nb + 1):
        p = probs[i - 1]
        out = projected[i - 1]
        if i > 1:
            if not variant.is_real:
                passes.append(0.0)
                contribs.append(0.0)
                fids.append(None)
                continue
            collapsed = StateVector(bob_bras[i - 1] @ psi)
            if filter_override is not None:
                flt = filter_override(channel, i, collapsed)
            else:
                flt = build_filter(collapsed, collapse_pattern(target, i))
            u_op = filter_unitary(flt)
            unit_dev = max(unit_dev, u_op.unitarity_deviation())
            dom_dev = max(dom_dev, flt.domain_deviation())
            u_full = kron(eye_a, embed_filter(u_op))
            out = _full_recovery(variant, i) @ (u_full @ out)
        joint = float(np.vdot(out, out).real)
        contribs.append(joint)
        passes.append(joint / p if p > 0 else 0.0)
        fids.append(float(np.vdot(out, checks[i - 1] @ out).real) / joint if joint > 0 else None)

    return OracleReport(probs, passes, contribs, fids, math.fsum(contribs), gram_check(basis),
                        resolution_check(basis), unit_dev, dom_dev, reconstruction_deviation(basis, channel))
