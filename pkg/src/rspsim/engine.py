"""Protocol execution: exact branch enumeration and seeded trajectory sampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import sampling
from .protocol import (
    CORRECTIONS,
    ChannelSpec,
    TargetSpec,
    TwoOutcomeFilter,
    filter_unitary,
    improvement_bound,
    plan_branches,
)
from .statevec import StateVector, apply, fidelity, project_subsystem, tensor

RNG_ALGORITHM = "numpy.random.PCG64"
SAMPLE_CHUNK = 1 << 16

_KET0 = StateVector.basis(0)


@dataclass(frozen=True, eq=False)
class BranchResult:
    index: int
    probability: float
    ancilla_pass_probability: float
    succeeds_via: str
    final_state: Optional[StateVector] = None
    fidelity: Optional[float] = None
    filter: Optional[TwoOutcomeFilter] = None

    @property
    def success_contribution(self) -> float:
        return self.probability * self.ancilla_pass_probability

    @property
    def succeeded(self) -> bool:
        return self.succeeds_via != "fails" and self.ancilla_pass_probability > 0.0


@dataclass(frozen=True, eq=False)
class ProtocolReport:
    target: TargetSpec
    channel: ChannelSpec
    branches: tuple[BranchResult, ...]
    total_success: float
    analytic_success: float
    bound: Optional[float]
    ratio: Optional[float]
    notes: tuple[str, ...] = field(default=())

    @property
    def probability_sum(self) -> float:
        return math.fsum(b.probability for b in self.branches)

    @property
    def min_success_fidelity(self) -> float:
        fids = [b.fidelity for b in self.branches if b.succeeded]
        return min(fids) if fids else float("nan")


def _run_filtered(collapsed: StateVector, flt: TwoOutcomeFilter, recovery, target_state: StateVector):
    bob = collapsed.normalized()
    # ancilla prepended so it is the most significant qubit, matching filter_unitary's layout
    out = apply(filter_unitary(flt), tensor(_KET0, bob))
    kept, pass_prob = project_subsystem(out, [0], _KET0)
    if pass_prob == 0.0:
        return pass_prob, None, None
    final = apply(recovery, kept.normalized())
    return pass_prob, final, fidelity(final, target_state)


def run_exact(target: TargetSpec, channel: ChannelSpec) -> ProtocolReport:
    """Enumerate every Alice outcome and Bob's response to it."""
    plans = plan_branches(target, channel)
    target_state = target.state()
    results = []
    for plan in plans:
        if plan.succeeds_via == "fails" or plan.probability == 0.0:
            results.append(BranchResult(plan.index, plan.probability, 0.0, plan.succeeds_via))
        elif plan.succeeds_via == "direct":
            final = plan.collapsed.normalized()
            results.append(BranchResult(plan.index, plan.probability, 1.0, "direct", final,
                                        fidelity(final, target_state)))
        else:
            pass_prob, final, fid = _run_filtered(plan.collapsed, plan.filter, plan.recovery, target_state)
            results.append(BranchResult(plan.index, plan.probability, pass_prob, "filtered", final, fid,
                                        plan.filter))

    bc = improvement_bound(target, channel)
    total = math.fsum(r.success_contribution for r in results)
    return ProtocolReport(target, channel, tuple(results), total, bc.analytic, bc.bound, bc.ratio,
                          tuple(CORRECTIONS[target.variant]))


@dataclass(frozen=True)
class TrialStats:
    trials: int
    successes: int
    seed: int
    branch_counts: tuple[int, ...]
    algorithm: str = RNG_ALGORITHM

    @property
    def estimate(self) -> float:
        return self.successes / self.trials

    @property
    def std_error(self) -> float:
        p = self.estimate
        return math.sqrt(p * (1.0 - p) / self.trials)


def sample(target: TargetSpec, channel: ChannelSpec, trials: int, seed: int,
           report: Optional[ProtocolReport] = None, backend=None) -> TrialStats:
    """Monte Carlo over measurement outcomes.

    Each trial draws Alice's outcome from the exact branch distribution, then
    the ancilla outcome from the branch's exact pass probability.  Uniforms
    come from a single PCG64 stream in chunks of ``SAMPLE_CHUNK`` trials, two
    rows per chunk (Alice, then ancilla), so results depend only on
    ``(seed, trials)`` and the inputs.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if report is None:
        report = run_exact(target, channel)
    count = backend or sampling.count_trajectories

    probs = np.array([b.probability for b in report.branches])
    cumulative = np.cumsum(probs)
    cumulative[-1] = 1.0
    pass_prob = np.ascontiguousarray([b.ancilla_pass_probability for b in report.branches], dtype=float)
    branch_counts = np.zeros(len(probs), dtype=np.int64)

    rng = np.random.Generator(np.random.PCG64(seed))
    successes = 0
    remaining = trials
    while remaining:
        n = min(remaining, SAMPLE_CHUNK)
        u = rng.random((2, n))
        successes += int(count(u[0], u[1], cumulative, pass_prob, branch_counts))
        remaining -= n
    return TrialStats(trials, successes, seed, tuple(int(c) for c in branch_counts))
