"""Invariant checks shared by the ``run`` and ``verify`` commands."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .engine import ProtocolReport, TrialStats, run_exact, sample
from .oracle import (
    OracleReport,
    RecoveryNotFound,
    born_enumerate,
    searched_recovery,
    uncorrected_branch2_filter,
)
from .protocol import (
    ChannelKind,
    ChannelSpec,
    Protocol,
    TargetSpec,
    build_filter,
    collapse_pattern,
    recovery_operator,
)
from .random_inputs import random_case

TOL = 1e-12
MC_SIGMAS = 4.0
DEFAULT_VERIFY_SEED = 20241014
DEFAULT_VERIFY_CASES = 250
REFERENCE_TRIALS = 100_000


@dataclass
class Check:
    name: str
    deviation: float
    tolerance: float
    variant: str = ""

    @property
    def passed(self) -> bool:
        # NaN deviations fail
        return self.deviation <= self.tolerance

    def merge(self, deviation: float) -> None:
        if math.isnan(deviation) or deviation > self.deviation:
            self.deviation = deviation


def _agreement(report: ProtocolReport, oracle: OracleReport) -> float:
    dev = abs(report.total_success - oracle.total_success)
    for b, p, q, f in zip(report.branches, oracle.branch_probabilities,
                          oracle.pass_probabilities, oracle.fidelities):
        dev = max(dev, abs(b.probability - p), abs(b.ancilla_pass_probability - q))
        if (b.fidelity is None) != (f is None):
            return float("inf")
        if f is not None:
            dev = max(dev, abs(b.fidelity - f))
    return dev


def case_deviations(report: ProtocolReport, oracle: OracleReport) -> dict[str, float]:
    """Every per-input invariant as a non-negative deviation."""
    fids = [1.0 - b.fidelity for b in report.branches if b.succeeded]
    devs = {
        "probability_sum": abs(report.probability_sum - 1.0),
        "exact_vs_analytic": abs(report.total_success - report.analytic_success),
        "exact_vs_oracle": _agreement(report, oracle),
        "success_fidelity": max(fids, default=0.0),
        "gram": oracle.gram_deviation,
        "resolution": oracle.resolution_deviation,
        "reconstruction": oracle.reconstruction_deviation,
    }
    if report.target.variant.is_real:
        devs["filter_unitarity"] = oracle.unitarity_deviation
        devs["filter_domain"] = oracle.filter_domain_deviation
    if report.bound is not None:
        devs["bound"] = max(0.0, report.bound - report.total_success)
    return devs


def run_checks(report: ProtocolReport, oracle: OracleReport) -> list[Check]:
    variant = report.target.variant.value
    return [Check(k, v, TOL, variant) for k, v in case_deviations(report, oracle).items()]


def injected_filter_hook(target: TargetSpec) -> Callable:
    """``born_enumerate`` filter hook that swaps in the bd/ac branch-2 filter on two-pair channels."""

    def override(channel: ChannelSpec, branch: int, collapsed):
        if channel.kind is ChannelKind.TWO_PAIR and branch == 2:
            return uncorrected_branch2_filter(channel)
        return build_filter(collapsed, collapse_pattern(target, branch))

    return override


def evaluate_case(target: TargetSpec, channel: ChannelSpec, inject_uncorrected: bool = False):
    override = injected_filter_hook(target) if inject_uncorrected else None
    return run_exact(target, channel), born_enumerate(target, channel, filter_override=override)


def recovery_check(variant: Protocol) -> Check:
    """Searched operator must match the fixed one (up to sign) for every branch."""
    dev = 0.0
    for branch in range(2, variant.branch_count + 1):
        try:
            found = searched_recovery(variant, branch).matrix
        except RecoveryNotFound:
            return Check("recovery_search", float("inf"), TOL, variant.value)
        fixed = recovery_operator(variant, branch).matrix
        dev = max(dev, min(np.abs(found - fixed).max(), np.abs(found + fixed).max()))
    return Check("recovery_search", dev, TOL, variant.value)


REFERENCE_CASE = (TargetSpec(Protocol.REAL_1Q, (0.6, 0.8)), ChannelSpec(ChannelKind.ONE_PAIR, (0.6, 0.8)))


def monte_carlo_check(seed: int, trials: int = REFERENCE_TRIALS) -> tuple[Check, TrialStats, float]:
    """z-score of a seeded run of the reference case against its exact total."""
    target, channel = REFERENCE_CASE
    exact = run_exact(target, channel).total_success
    stats = sample(target, channel, trials, seed)
    z = z_score(stats, exact)
    return Check("monte_carlo_z", z, MC_SIGMAS, Protocol.REAL_1Q.value), stats, exact


def z_score(stats: TrialStats, exact: float) -> float:
    se = stats.std_error
    if se == 0.0:
        return 0.0 if stats.estimate == exact else float("inf")
    return abs(stats.estimate - exact) / se


def verify_suite(seed: int = DEFAULT_VERIFY_SEED, cases: int = DEFAULT_VERIFY_CASES,
                 inject_uncorrected: bool = False) -> list[Check]:
    """Full randomized invariant suite; one aggregated ``Check`` per (check, variant)."""
    rng = np.random.default_rng(seed)
    out: list[Check] = []
    for variant in Protocol:
        agg: dict[str, Check] = {}
        for _ in range(cases):
            target, channel = random_case(variant, rng)
            report, oracle = evaluate_case(target, channel, inject_uncorrected)
            for name, dev in case_deviations(report, oracle).items():
                agg.setdefault(name, Check(name, 0.0, TOL, variant.value)).merge(dev)
        out.extend(agg.values())
        if variant.is_real:
            out.append(recovery_check(variant))
    out.append(monte_carlo_check(seed)[0])
    return out
