"""Exact simulation of probabilistic remote state preparation over
non-maximally entangled channels."""
from .engine import BranchResult, ProtocolReport, TrialStats, run_exact, sample
from .oracle import OracleReport, born_enumerate, gram_check, pauli_recovery_search
from .protocol import (
    ChannelKind,
    ChannelSpec,
    Protocol,
    TargetSpec,
    ValidationError,
    analytic_success,
    build_basis,
    build_filter,
    collapse_pattern,
    filter_unitary,
    improvement_bound,
    recovery_operator,
)
from .statevec import Operator, StateVector, apply, fidelity, inner, project_subsystem, tensor

__version__ = "0.1.0"

__all__ = [
    "BranchResult", "ProtocolReport", "TrialStats", "run_exact", "sample",
    "OracleReport", "born_enumerate", "gram_check", "pauli_recovery_search",
    "ChannelKind", "ChannelSpec", "Protocol", "TargetSpec", "ValidationError",
    "analytic_success", "build_basis", "build_filter", "collapse_pattern", "filter_unitary",
    "improvement_bound", "recovery_operator",
    "Operator", "StateVector", "apply", "fidelity", "inner", "project_subsystem", "tensor",
]
