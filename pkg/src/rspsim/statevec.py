"""Dense state-vector algebra for a handful of qubits.

Amplitudes are stored big-endian: for ``|q0 q1 ... q_{n-1}>`` the flat index
is ``q0 * 2**(n-1) + ... + q_{n-1}``, so qubit 0 is the most significant bit.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

MAX_QUBITS = 5
NORM_TOL = 1e-12
PROB_CLAMP = 1e-15


class DimensionError(ValueError):
    """Operands of incompatible size."""


@lru_cache(maxsize=None)
def _eye(dim: int) -> np.ndarray:
    return _freeze(np.eye(dim))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable vector of ``2**qubit_count`` complex amplitudes."""

    amps: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size == 0 or 1 << n != amps.size:
            raise DimensionError(f"length {amps.size} is not a power of two")
        if n > MAX_QUBITS:
            raise DimensionError(f"{n} qubits exceeds the {MAX_QUBITS}-qubit limit")
        # a sum is non-finite iff some term is (barring overflow near 1e308)
        if not cmath.isfinite(complex(amps.sum())):
            raise ValueError("amplitudes must be finite")
        object.__setattr__(self, "amps", _freeze(amps))

    @classmethod
    def _wrap(cls, amps: np.ndarray) -> "StateVector":
        # results of operations on already-valid states skip re-validation
        sv = object.__new__(cls)
        object.__setattr__(sv, "amps", _freeze(amps))
        return sv

    @classmethod
    def basis(cls, index: int, qubit_count: int = 1) -> "StateVector":
        amps = np.zeros(1 << qubit_count, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @property
    def qubit_count(self) -> int:
        return self.amps.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real) ** 0.5

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(float(np.vdot(self.amps, self.amps).real) - 1.0) <= tol

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector._wrap(self.amps / nrm)

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.amps * factor)

    def __len__(self) -> int:
        return self.amps.size

    def __repr__(self) -> str:
        return f"StateVector({np.array2string(self.amps, precision=6)})"


@dataclass(frozen=True, eq=False)
class Operator:
    """Square complex matrix acting on a state vector."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"operator must be square, got shape {m.shape}")
        object.__setattr__(self, "matrix", _freeze(m))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dagger(self) -> "Operator":
        return Operator(self.matrix.conj().T)

    def unitarity_deviation(self) -> float:
        """Max entry of ``|U U^dagger - I|``; ``inf`` if anything is non-finite."""
        m = self.matrix
        if not cmath.isfinite(complex(m.sum())):
            return float("inf")
        return float(np.abs(m @ m.conj().T - _eye(self.dim)).max())

    def is_unitary(self, tol: float = NORM_TOL) -> bool:
        return self.unitarity_deviation() <= tol

    def __matmul__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix @ other.matrix)


def tensor(u: StateVector, v: StateVector) -> StateVector:
    """Kronecker product; ``u``'s qubits become the leading (most significant) ones."""
    return StateVector._wrap(np.outer(u.amps, v.amps).ravel())


def inner(u: StateVector, v: StateVector) -> complex:
    """``<u|v>``, conjugating the left operand."""
    if u.dim != v.dim:
        raise DimensionError(f"inner product of {u.qubit_count}- and {v.qubit_count}-qubit states")
    return complex(np.vdot(u.amps, v.amps))


def apply(op: Operator, s: StateVector) -> StateVector:
    if op.dim != s.dim:
        raise DimensionError(f"operator of dim {op.dim} on state of dim {s.dim}")
    return StateVector._wrap(op.matrix @ s.amps)


def project_subsystem(s: StateVector, mask: Sequence[int], bvec: StateVector) -> tuple[StateVector, float]:
    """Contract the qubits in ``mask`` with ``<bvec|``.

    Returns the unnormalized residual on the remaining qubits (in their
    original relative order) and its squared norm, which is the Born
    probability of the outcome ``bvec``.  Projecting out every qubit leaves a
    one-amplitude vector, so the residual is always at least one qubit wide
    unless ``mask`` covers the whole register, in which case a scalar state of
    length 1 is not representable and ``DimensionError`` is raised.
    """
    n = s.qubit_count
    mask = list(mask)
    if len(set(mask)) != len(mask) or min(mask) < 0 or max(mask) >= n:
        raise DimensionError(f"mask {mask} invalid for a {n}-qubit state")
    if bvec.qubit_count != len(mask):
        raise DimensionError(f"projector on {bvec.qubit_count} qubits for mask of size {len(mask)}")
    if len(mask) == n:
        raise DimensionError("mask covers every qubit; nothing remains")
    if not bvec.is_normalized():
        raise ValueError("projection vector must be normalized")

    m = len(mask)
    if mask == list(range(m)):
        grid = s.amps.reshape(1 << m, 1 << (n - m))
    else:
        rest = [q for q in range(n) if q not in mask]
        grid = s.amps.reshape((2,) * n).transpose(mask + rest).reshape(1 << m, 1 << (n - m))
    residual = bvec.amps.conj() @ grid
    prob = float(np.vdot(residual, residual).real)
    if prob < PROB_CLAMP:
        prob = 0.0
    return StateVector._wrap(residual), prob


def fidelity(u: StateVector, v: StateVector) -> float:
    """``|<u|v>|**2`` for normalized states."""
    ov = inner(u, v)
    f = ov.real * ov.real + ov.imag * ov.imag
    return min(max(f, 0.0), 1.0)


def identity(qubit_count: int) -> Operator:
    return Operator(np.eye(1 << qubit_count))
