"""State vectors, the normalized Hadamard layer and diagonal phase evolution.

Bit convention: bit ``q`` of a basis index ``j`` is qubit ``q``, i.e. qubit 0 is
the last tensor factor.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * np.pi
MAX_QUBITS = 26
PHASE_EPS = 1e-10

_SQRT_HALF = np.sqrt(0.5)


class SizeError(ValueError):
    """Register size is not a supported power of two."""


class ShapeError(ValueError):
    """Operands have mismatched lengths."""


def n_qubits_for(length: int) -> int:
    """Return ``log2(length)``, raising :class:`SizeError` if it is not a power of two >= 2."""
    if length < 2 or length & (length - 1):
        raise SizeError(f"length {length} is not a power of two >= 2")
    return length.bit_length() - 1


@dataclass
class StateVector:
    amps: np.ndarray

    def __post_init__(self) -> None:
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.ndim != 1:
            raise ShapeError("amplitudes must be one-dimensional")
        n_qubits_for(self.amps.size)

    @property
    def n_qubits(self) -> int:
        return self.amps.size.bit_length() - 1

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def copy(self) -> StateVector:
        return StateVector(self.amps.copy())

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> StateVector:
        _check_qubits(n_qubits)
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(amps)


@dataclass
class DiagonalHamiltonian:
    """Diagonal phase coefficients ``h_j`` in radians.

    Coefficients are stored as given so that Walsh round trips are exact;
    :meth:`canonical` wraps them into ``[0, 2*pi)``, which leaves the evolution unchanged.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=np.float64)
        if self.coeffs.ndim != 1:
            raise ShapeError("coefficients must be one-dimensional")
        n_qubits_for(self.coeffs.size)

    @property
    def n_qubits(self) -> int:
        return self.coeffs.size.bit_length() - 1

    def canonical(self) -> DiagonalHamiltonian:
        return DiagonalHamiltonian(wrap_phase(self.coeffs))


def wrap_phase(h: np.ndarray) -> np.ndarray:
    """Reduce angles into ``[0, 2*pi)``."""
    out = np.mod(h, TWO_PI)
    # np.mod(-tiny, 2pi) rounds up to exactly 2pi
    out[out >= TWO_PI] = 0.0
    return out


def _check_qubits(n_qubits: int, max_qubits: int = MAX_QUBITS) -> None:
    if not 1 <= n_qubits <= max_qubits:
        raise SizeError(f"n_qubits must be in [1, {max_qubits}], got {n_qubits}")


def uniform_state(n_qubits: int, max_qubits: int = MAX_QUBITS) -> StateVector:
    _check_qubits(n_qubits, max_qubits)
    dim = 1 << n_qubits
    return StateVector(np.full(dim, 1.0 / np.sqrt(dim), dtype=np.complex128))


def fwht_inplace(a: np.ndarray, normalized: bool = True) -> np.ndarray:
    """In-place fast Walsh-Hadamard transform of a 1-D power-of-two array.

    With ``normalized`` each butterfly stage carries a 1/sqrt(2) factor, so the
    transform is the unitary ``H^{(x)n}``; otherwise it is the plain +-1 sum.
    Only a half-length scratch buffer is allocated.
    """
    dim = a.size
    n_qubits_for(dim)
    scratch = np.empty(dim // 2, dtype=a.dtype)
    h = 1
    while h < dim:
        view = a.reshape(-1, 2, h)
        u = view[:, 0, :]
        v = view[:, 1, :]
        s = scratch.reshape(-1, h)
        np.subtract(u, v, out=s)
        np.add(u, v, out=u)
        v[...] = s
        if normalized:
            view *= _SQRT_HALF
        h *= 2
    return a


def fwht(state: StateVector) -> StateVector:
    """Apply the all-qubit Hadamard layer to ``state`` in place and return it."""
    fwht_inplace(state.amps)
    return state


def evolve_diagonal(state: StateVector, h: DiagonalHamiltonian | np.ndarray) -> StateVector:
    """Multiply amplitude ``j`` by ``exp(-i h_j)`` in place."""
    coeffs = h.coeffs if isinstance(h, DiagonalHamiltonian) else np.asarray(h, dtype=np.float64)
    if coeffs.shape != state.amps.shape:
        raise ShapeError(f"hamiltonian length {coeffs.size} != state length {state.dim}")
    state.amps *= np.exp(-1j * coeffs)
    return state


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.dim != b.dim:
        raise ShapeError(f"state lengths differ: {a.dim} vs {b.dim}")
    f = abs(np.vdot(a.amps, b.amps)) ** 2
    return float(min(f, 1.0))


def phases(state: StateVector, eps: float = PHASE_EPS) -> np.ndarray:
    """Phases ``theta_j`` with ``amps_j = |amps_j| exp(-i theta_j)``, in (-pi, pi].

    Entries whose modulus is below ``eps`` get phase 0.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    return _phases(state.amps, eps)


def _phases(amps: np.ndarray, eps: float) -> np.ndarray:
    theta = -np.angle(amps)
    # -angle lies in [-pi, pi); move -pi to +pi
    theta[theta <= -np.pi] = np.pi
    theta[np.abs(amps) < eps] = 0.0
    return theta


# -- serialization ---------------------------------------------------------

def save_state(state: StateVector, path: str | Path) -> None:
    """Binary layout: little-endian u64 length, then (re, im) float64 pairs."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", state.dim))
        fh.write(state.amps.astype("<c16").tobytes())


def load_state(path: str | Path) -> StateVector:
    with open(path, "rb") as fh:
        (dim,) = struct.unpack("<Q", fh.read(8))
        body = fh.read()
    if len(body) != 16 * dim:
        raise SizeError(f"expected {dim} amplitudes, file holds {len(body) // 16}")
    return StateVector(np.frombuffer(body, dtype="<c16").astype(np.complex128))


def export_csv(state: StateVector, path: str | Path, eps: float = PHASE_EPS) -> None:
    theta = phases(state, eps)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "re", "im", "modulus", "phase"])
        for j, z in enumerate(state.amps):
            writer.writerow([j, repr(float(z.real)), repr(float(z.imag)), repr(float(abs(z))), repr(float(theta[j]))])
