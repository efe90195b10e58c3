"""Protocol constructions: targets, channels, Alice's bases, Bob's filters.

Four protocol variants are supported.  The single-pair variants share a
two-qubit resource ``a|00> + b|11>`` (Alice's qubit first); the two-pair
variants share ``a|0000> + b|0101> + c|1010> + d|1111>`` ordered
``A1 A2 B1 B2``.  Alice measures in a basis that depends on both the target
and the channel; Bob either holds the target outright (branch 1) or a signed
permutation of it with channel-induced amplitude distortion, which the real
variants undo with an ancilla-assisted filter followed by a fixed recovery
operator.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .statevec import NORM_TOL, Operator, StateVector, project_subsystem

ORDER_TOL = 1e-12
ZERO_TOL = 1e-12


class ValidationError(ValueError):
    """An input violates a protocol assumption (normalization, ordering, ...)."""


class Protocol(str, Enum):
    REAL_1Q = "real-1q"
    COMPLEX_1Q = "complex-1q"
    REAL_2Q = "real-2q"
    COMPLEX_2Q = "complex-2q"

    @property
    def is_real(self) -> bool:
        return self in (Protocol.REAL_1Q, Protocol.REAL_2Q)

    @property
    def target_qubits(self) -> int:
        return 1 if self in (Protocol.REAL_1Q, Protocol.COMPLEX_1Q) else 2

    @property
    def branch_count(self) -> int:
        return 1 << self.target_qubits

    @property
    def channel_kind(self) -> "ChannelKind":
        return ChannelKind.ONE_PAIR if self.target_qubits == 1 else ChannelKind.TWO_PAIR

    @property
    def phase_count(self) -> int:
        return {Protocol.COMPLEX_1Q: 1, Protocol.COMPLEX_2Q: 3}.get(self, 0)


class ChannelKind(str, Enum):
    ONE_PAIR = "one-pair"
    TWO_PAIR = "two-pair"

    @property
    def pairs(self) -> int:
        return 1 if self is ChannelKind.ONE_PAIR else 2

    @property
    def size(self) -> int:
        return 1 << self.pairs


MAGNITUDE_NAMES = ("alpha", "beta", "gamma", "delta")
COEFFICIENT_NAMES = ("a", "b", "c", "d")
PHASE_NAMES = {1: ("phi",), 3: ("phi1", "phi2", "phi3")}


def _check_ordered(values: Sequence[float], names: Sequence[str], what: str) -> None:
    for i in range(len(values) - 1):
        if values[i] > values[i + 1] + ORDER_TOL:
            chain = " <= ".join(names[: len(values)])
            raise ValidationError(
                f"{what} ordering violated: requires {chain} "
                f"(got {names[i]}={values[i]:.17g} > {names[i + 1]}={values[i + 1]:.17g})"
            )


@dataclass(frozen=True)
class TargetSpec:
    """The state Alice wants Bob to hold.

    ``magnitudes`` are the non-negative moduli ``alpha, beta[, gamma, delta]``
    in ascending order; ``phases`` are the relative phases on the second and
    later components (complex variants only).
    """

    variant: Protocol
    magnitudes: tuple[float, ...]
    phases: tuple[float, ...] = ()

    def __post_init__(self):
        variant = Protocol(self.variant)
        mags = tuple(float(m) for m in self.magnitudes)
        phases = tuple(float(p) for p in self.phases)
        if not phases and variant.phase_count:
            phases = (0.0,) * variant.phase_count
        object.__setattr__(self, "variant", variant)
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "phases", phases)

        if len(mags) != variant.branch_count:
            raise ValidationError(f"{variant.value} target needs {variant.branch_count} magnitudes, got {len(mags)}")
        if len(phases) != variant.phase_count:
            raise ValidationError(f"{variant.value} target needs {variant.phase_count} phases, got {len(phases)}")
        if not all(math.isfinite(x) for x in mags + phases):
            raise ValidationError("target parameters must be finite")
        if any(m < 0 for m in mags):
            raise ValidationError("target magnitudes must be non-negative")
        total = math.fsum(m * m for m in mags)
        if abs(total - 1.0) > NORM_TOL:
            raise ValidationError(f"target not normalized: sum of squared magnitudes is {total:.17g}")
        _check_ordered(mags, MAGNITUDE_NAMES, "target")

    def amplitudes(self) -> np.ndarray:
        amps = np.array(self.magnitudes, dtype=complex)
        if self.phases:
            amps[1:] *= np.exp(1j * np.array(self.phases))
        return amps

    def state(self) -> StateVector:
        return StateVector(self.amplitudes())


@dataclass(frozen=True)
class ChannelSpec:
    """Schmidt-form coefficients of the shared entangled resource."""

    kind: ChannelKind
    coefficients: tuple[complex, ...]

    def __post_init__(self):
        kind = ChannelKind(self.kind)
        coefs = tuple(complex(c) for c in self.coefficients)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "coefficients", coefs)

        if len(coefs) != kind.size:
            raise ValidationError(f"{kind.value} channel needs {kind.size} coefficients, got {len(coefs)}")
        if not all(math.isfinite(c.real) and math.isfinite(c.imag) for c in coefs):
            raise ValidationError("channel coefficients must be finite")
        mags = self.magnitudes
        if any(m <= ZERO_TOL for m in mags):
            raise ValidationError("channel coefficients must all be nonzero")
        total = math.fsum(m * m for m in mags)
        if abs(total - 1.0) > NORM_TOL:
            raise ValidationError(f"channel not normalized: sum of squared moduli is {total:.17g}")
        _check_ordered(mags, ["|a|", "|b|", "|c|", "|d|"], "channel")

    @classmethod
    def from_polar(cls, kind: ChannelKind, pairs: Sequence[tuple[float, float]]) -> "ChannelSpec":
        return cls(kind, tuple(complex(m * math.cos(p), m * math.sin(p)) for m, p in pairs))

    @property
    def magnitudes(self) -> tuple[float, ...]:
        return tuple(abs(c) for c in self.coefficients)

    @property
    def is_real(self) -> bool:
        return all(c.imag == 0.0 for c in self.coefficients)

    def array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=complex)

    def state(self) -> StateVector:
        """Joint resource state, Alice's qubits first."""
        m = self.kind.size
        amps = np.zeros(m * m, dtype=complex)
        amps[np.arange(m) * (m + 1)] = self.coefficients
        # coefficients were validated finite and normalized at construction
        return StateVector._wrap(amps)

    @property
    def alice_mask(self) -> list[int]:
        return list(range(self.kind.pairs))


def check_compatible(target: TargetSpec, channel: ChannelSpec) -> None:
    """Raise ``ValidationError`` unless the pair is a valid protocol input."""
    variant = target.variant
    if channel.kind is not variant.channel_kind:
        raise ValidationError(f"{variant.value} needs a {variant.channel_kind.value} channel, got {channel.kind.value}")
    if variant.is_real:
        if not channel.is_real or any(c.real <= 0 for c in channel.coefficients):
            raise ValidationError(f"{variant.value} needs positive real channel coefficients")
    if variant is Protocol.REAL_2Q:
        a, b, c, d = channel.magnitudes
        if a * d > b * c + ORDER_TOL:
            raise ValidationError(f"channel ordering violated: requires ad <= bc (got ad={a * d:.17g}, bc={b * c:.17g})")


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    vectors: tuple[StateVector, ...]

    def matrix(self) -> np.ndarray:
        """Rows are the basis vectors."""
        return np.array([v.amps for v in self.vectors])

    def gram(self) -> np.ndarray:
        m = self.matrix()
        return m.conj() @ m.T

    def __len__(self) -> int:
        return len(self.vectors)

    def __getitem__(self, i: int) -> StateVector:
        return self.vectors[i]


def build_basis(target: TargetSpec, channel: ChannelSpec) -> MeasurementBasis:
    """Alice's projective measurement basis for the given target and channel."""
    check_compatible(target, channel)
    variant = target.variant
    coefs = channel.array()

    if variant is Protocol.REAL_1Q:
        al, be = target.magnitudes
        a, b = coefs.real
        c1 = 1.0 / math.sqrt(b * b * al * al + a * a * be * be)
        rows = [[al * b, be * a], [be * a, -al * b]]
        scale = c1

    elif variant is Protocol.COMPLEX_1Q:
        al, be = target.magnitudes
        (phi,) = target.phases
        a, b = coefs
        ep = np.exp(1j * phi)
        c2 = 1.0 / math.sqrt(abs(b) ** 2 * al * al + abs(a) ** 2 * be * be)
        # second vector takes -alpha*b (not its conjugate) to stay orthogonal to the first
        rows = [[al * b.conjugate(), be * a.conjugate() / ep], [be * ep * a, -al * b]]
        scale = c2

    elif variant is Protocol.REAL_2Q:
        al, be, ga, de = target.magnitudes
        a, b, c, d = coefs.real
        w1, w2, w3, w4 = b * c * d * al, a * c * d * be, a * b * d * ga, a * b * c * de
        scale = 1.0 / math.sqrt(w1 * w1 + w2 * w2 + w3 * w3 + w4 * w4)
        rows = [
            [w1, w2, w3, w4],
            [w2, -w1, -w4, w3],
            [w3, w4, -w1, -w2],
            [-w4, w3, -w2, w1],
        ]

    else:
        al, be, ga, de = target.magnitudes
        e1, e2, e3 = np.exp(-1j * np.array(target.phases))
        a, b, c, d = coefs
        # unconjugated weights; the first vector uses their conjugates
        w1, w2, w3, w4 = b * c * d * al, a * c * d * be, a * b * d * ga, a * b * c * de
        x = abs(w1) ** 2 + abs(w2) ** 2
        y = abs(w3) ** 2 + abs(w4) ** 2
        scale = 1.0 / math.sqrt(x + y)
        s = math.sqrt(y / x)
        first = [w1.conjugate(), w2.conjugate() * e1, w3.conjugate() * e2, w4.conjugate() * e3]
        second = [w2, -w1 * e1, -w4 * e2, w3 * e3]
        rows = [
            first,
            second,
            [s * first[0], s * first[1], -first[2] / s, -first[3] / s],
            [s * second[0], s * second[1], -second[2] / s, -second[3] / s],
        ]

    m = np.array(rows, dtype=complex) * scale
    return MeasurementBasis(tuple(StateVector._wrap(r) for r in m))


@dataclass(frozen=True)
class PatternVector:
    """Ideal shape of Bob's state after a given Alice outcome.

    For the real variants ``entries[i] == signs[i] * target[perm[i]]``.
    """

    entries: tuple[complex, ...]
    perm: tuple[int, ...]
    signs: tuple[int, ...]

    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=complex)


# (perm, signs) per real-variant branch, as read off Bob's collapsed states
_PATTERNS = {
    Protocol.REAL_1Q: [
        ((0, 1), (1, 1)),
        ((1, 0), (1, -1)),
    ],
    Protocol.REAL_2Q: [
        ((0, 1, 2, 3), (1, 1, 1, 1)),
        ((1, 0, 3, 2), (1, -1, -1, 1)),
        ((2, 3, 0, 1), (1, 1, -1, -1)),
        ((3, 2, 1, 0), (-1, 1, -1, 1)),
    ],
}


def collapse_pattern(target: TargetSpec, branch: int) -> PatternVector:
    """Pattern for 1-based ``branch``; complex variants only define branch 1."""
    variant = target.variant
    if not 1 <= branch <= variant.branch_count:
        raise ValueError(f"branch {branch} out of range for {variant.value}")
    t = target.amplitudes()
    if not variant.is_real:
        if branch != 1:
            raise ValueError(f"{variant.value} has no recoverable pattern for branch {branch}")
        n = t.size
        return PatternVector(tuple(t), tuple(range(n)), (1,) * n)
    perm, signs = _PATTERNS[variant][branch - 1]
    return PatternVector(tuple(complex(s * t[p]) for p, s in zip(perm, signs)), perm, signs)


@dataclass(frozen=True)
class TwoOutcomeFilter:
    """Diagonal pair ``(F, G)`` with ``F**2 + G**2 == 1`` componentwise."""

    F: tuple[float, ...]
    G: tuple[float, ...]
    validate: bool = field(default=True, compare=False, repr=False)

    def __post_init__(self):
        if len(self.F) != len(self.G):
            raise ValueError("F and G must have equal length")
        if self.validate:
            dev = self.domain_deviation()
            if dev > NORM_TOL:
                raise ValueError(f"invalid filter (domain deviation {dev:.3g})")

    @classmethod
    def from_pass_amplitudes(cls, F: Sequence[float], validate: bool = True) -> "TwoOutcomeFilter":
        """Complete ``F`` with ``G = sqrt(1 - F**2)``.

        With ``validate=False`` an out-of-range ``F`` yields an imaginary ``G``
        instead of an error, so a broken filter can be carried into checks.
        """
        F = tuple(float(f) for f in F)
        G = []
        for f in F:
            g = 1.0 - f * f
            G.append(math.sqrt(g) if g >= 0.0 else complex(0.0, math.sqrt(-g)))
        return cls(F, tuple(G), validate=validate)

    def domain_deviation(self) -> float:
        """How far the pair is from being a valid filter (0 when valid)."""
        devs = [abs(max(self.F) - 1.0)] if self.F else [0.0]
        for f, g in zip(self.F, self.G):
            if isinstance(g, complex):
                if not cmath.isfinite(g):
                    return float("inf")
                devs.append(abs(g.imag))
                g = g.real
            if not (math.isfinite(f) and math.isfinite(g)):
                return float("inf")
            devs += (abs(f * f + g * g - 1.0), f - 1.0, -f, -g)
        return max(devs)


def build_filter(collapsed: StateVector, pattern: PatternVector) -> TwoOutcomeFilter:
    """Filter that removes the amplitude distortion of ``collapsed`` relative to ``pattern``.

    The component with the smallest distortion passes unattenuated; every
    other component is damped down to it.  Components absent from both
    vectors pass through (``F = 1``).
    """
    c = [abs(x) for x in collapsed.amps.tolist()]
    p = [abs(x) for x in pattern.entries]
    if len(c) != len(p):
        raise ValueError("collapsed state and pattern differ in length")
    c_tol = ZERO_TOL * max(c)
    p_tol = ZERO_TOL * max(p)
    d = []
    for ci, pi in zip(c, p):
        p_zero, c_zero = pi <= p_tol, ci <= c_tol
        if p_zero and not c_zero:
            raise ValueError("pattern vanishes where the collapsed state does not; a filter cannot create amplitude")
        if c_zero and not p_zero:
            raise ValueError("collapsed state vanishes where the pattern does not")
        d.append(None if p_zero else ci / pi)
    dmin = min(x for x in d if x is not None)
    F = []
    for di in d:
        f = 1.0 if di is None else dmin / di
        F.append(1.0 if abs(f - 1.0) <= 1e-15 else f)
    return TwoOutcomeFilter.from_pass_amplitudes(F)


def filter_unitary(f: TwoOutcomeFilter) -> Operator:
    """Block unitary ``[[F, G], [G, -F]]`` on ancilla (x) Bob.

    The ancilla is the most significant qubit of this operator: the top half
    of the index range is ancilla ``|0>``, the bottom half ancilla ``|1>``.
    """
    n = len(f.F)
    m = np.zeros(4 * n * n, dtype=complex)
    m[_block_diagonal_slots(n)] = f.F + f.G + f.G + tuple(-x for x in f.F)
    return Operator(m.reshape(2 * n, 2 * n))


@lru_cache(maxsize=None)
def _block_diagonal_slots(n: int) -> np.ndarray:
    # flat indices of the diagonals of the four n x n blocks: F, G / G, -F
    i = np.arange(n)
    w = 2 * n
    return np.concatenate([i * w + i, i * w + i + n, (i + n) * w + i, (i + n) * w + i + n])


_R = np.array([[0, -1], [1, 0]], dtype=float)
_Z = np.diag([1.0, -1.0])
_I2 = np.eye(2)

_RECOVERY = {
    (Protocol.REAL_1Q, 2): _R,
    (Protocol.REAL_2Q, 2): np.kron(_Z, _R),
    (Protocol.REAL_2Q, 3): np.kron(_R, _I2),
    (Protocol.REAL_2Q, 4): np.kron(_Z @ _R, _R),
}


@lru_cache(maxsize=None)
def recovery_operator(variant: Protocol, branch: int) -> Operator:
    """Fixed signed permutation taking branch ``branch``'s pattern to the target."""
    variant = Protocol(variant)
    if not 1 <= branch <= variant.branch_count:
        raise ValueError(f"branch {branch} out of range for {variant.value}")
    if branch == 1:
        return Operator(np.eye(variant.branch_count))
    if not variant.is_real:
        raise ValueError(f"{variant.value} branch {branch} is not recoverable")
    return Operator(_RECOVERY[variant, branch])


def analytic_success(target: TargetSpec, channel: ChannelSpec) -> float:
    """Closed-form total success probability."""
    check_compatible(target, channel)
    variant = target.variant
    if variant is Protocol.REAL_1Q:
        al, be = target.magnitudes
        a, b = channel.magnitudes
        return a * a / (b * b * al * al + a * a * be * be)
    if variant is Protocol.COMPLEX_1Q:
        al, be = target.magnitudes
        a2, b2 = (m * m for m in channel.magnitudes)
        return a2 * b2 / (b2 * al * al + a2 * be * be)
    if variant is Protocol.REAL_2Q:
        al, be, ga, de = target.magnitudes
        a2, b2, c2, d2 = (m * m for m in channel.magnitudes)
        num = a2 * (c2 * d2 * (b2 + a2) + a2 * b2 * (d2 + c2))
        den = c2 * d2 * (b2 * al * al + a2 * be * be) + a2 * b2 * (d2 * ga * ga + c2 * de * de)
        return num / den
    al, be, ga, de = target.magnitudes
    a, b, c, d = channel.magnitudes
    num = (a * b * c * d) ** 2
    den = (b * c * d * al) ** 2 + (a * c * d * be) ** 2 + (a * b * d * ga) ** 2 + (a * b * c * de) ** 2
    return num / den


@dataclass(frozen=True)
class BoundCheck:
    analytic: float
    bound: Optional[float]
    ratio: Optional[float]


def improvement_bound(target: TargetSpec, channel: ChannelSpec) -> BoundCheck:
    """Closed form next to its guaranteed lower bound (none for complex-2q)."""
    p = analytic_success(target, channel)
    mags = channel.magnitudes
    variant = target.variant
    if variant is Protocol.REAL_1Q:
        bound = 2 * mags[0] ** 2
    elif variant is Protocol.COMPLEX_1Q:
        bound = 2 * (mags[0] * mags[1]) ** 2
    elif variant is Protocol.REAL_2Q:
        bound = 4 * mags[0] ** 2
    else:
        return BoundCheck(p, None, None)
    return BoundCheck(p, bound, p / bound)


@dataclass(frozen=True, eq=False)
class BranchPlan:
    index: int
    basis_vector: StateVector
    collapsed: StateVector
    probability: float
    pattern: Optional[PatternVector]
    filter: Optional[TwoOutcomeFilter]
    recovery: Optional[Operator]
    succeeds_via: str  # "direct" | "filtered" | "fails"


def plan_branches(target: TargetSpec, channel: ChannelSpec) -> list[BranchPlan]:
    """Project the channel on each basis vector and decide how Bob handles it."""
    basis = build_basis(target, channel)
    psi = channel.state()
    mask = channel.alice_mask
    variant = target.variant
    plans = []
    for i, vec in enumerate(basis.vectors, start=1):
        collapsed, prob = project_subsystem(psi, mask, vec)
        if i == 1:
            plans.append(BranchPlan(i, vec, collapsed, prob, collapse_pattern(target, 1), None,
                                    recovery_operator(variant, 1), "direct"))
        elif variant.is_real:
            pattern = collapse_pattern(target, i)
            plans.append(BranchPlan(i, vec, collapsed, prob, pattern, build_filter(collapsed, pattern),
                                    recovery_operator(variant, i), "filtered"))
        else:
            plans.append(BranchPlan(i, vec, collapsed, prob, None, None, None, "fails"))
    return plans


CORRECTIONS = {
    Protocol.REAL_1Q: ["recovery operator for branch 2 is [[0,-1],[1,0]], found by exhaustive search"],
    Protocol.COMPLEX_1Q: ["second basis vector uses -alpha*b (unconjugated) so the basis is orthonormal for complex b"],
    Protocol.REAL_2Q: [
        "filters built from amplitude distortion; branch-2 filter entry 4 is ac/bd (bd/ac would exceed 1)",
        "recovery operators are fixed signed permutations found by exhaustive search",
    ],
    Protocol.COMPLEX_2Q: ["branch-1 residual prefactor is k*abcd; probabilities come from the Born rule"],
}
