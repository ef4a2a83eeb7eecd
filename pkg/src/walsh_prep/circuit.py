"""Gate-level synthesis of Walsh-term evolutions and OpenQASM 2.0 export.

``exp(-i c W_r)`` becomes a CNOT ladder that collects the parity of r's set bits
onto its highest set qubit, ``rz(2c)`` there, and the mirrored ladder.
``rz(t) = diag(exp(-i t/2), exp(i t/2))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .walsh import WalshSpectrum


class UnsupportedTermError(ValueError):
    pass


class Gate(NamedTuple):
    name: str  # "h", "rz" or "cx"
    qubits: tuple[int, ...]
    angle: float | None = None


@dataclass
class GateList:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        for q in g.qubits:
            if not 0 <= q < self.n_qubits:
                raise ValueError(f"qubit {q} outside [0, {self.n_qubits})")
        if g.angle is not None and not math.isfinite(g.angle):
            raise ValueError(f"non-finite angle in {g}")

    def append(self, g: Gate) -> None:
        self._check(g)
        self.gates.append(g)

    def extend(self, other: GateList) -> None:
        for g in other.gates:
            self.append(g)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)


@dataclass(frozen=True)
class GateCounts:
    one_qubit: int
    two_qubit: int

    def to_json(self) -> dict:
        return {"one_qubit": self.one_qubit, "two_qubit": self.two_qubit}


def hadamard_layer(n_qubits: int) -> GateList:
    return GateList(n_qubits, [Gate("h", (q,)) for q in range(n_qubits)])


def synthesize_walsh_term(r: int, c: float, n_qubits: int) -> GateList:
    if r == 0:
        raise UnsupportedTermError("W_0 is a global phase and has no gate realization")
    if not 0 < r < (1 << n_qubits):
        raise UnsupportedTermError(f"Walsh index {r} outside [1, {1 << n_qubits})")
    bits = [q for q in range(n_qubits) if r >> q & 1]
    ladder = [Gate("cx", (a, b)) for a, b in zip(bits, bits[1:])]
    gates = ladder + [Gate("rz", (bits[-1],), 2.0 * c)] + ladder[::-1]
    return GateList(n_qubits, gates)


def synthesize_evolution(spec: WalshSpectrum) -> GateList:
    """Gates for ``exp(-i sum_r c_r W_r)``; terms commute, so ascending-r order is exact."""
    if 0 in spec.terms:
        raise UnsupportedTermError("spectrum contains the identity term r=0")
    out = GateList(spec.n_qubits)
    for r, c in spec.terms.items():
        out.extend(synthesize_walsh_term(r, c, spec.n_qubits))
    return out


def synthesize_state_preparation(spectra: list[WalshSpectrum]) -> GateList:
    """H layer, then (evolution, H layer) for every spectrum but the last, then the last evolution."""
    if not spectra:
        raise ValueError("need at least one evolution")
    n = spectra[0].n_qubits
    out = hadamard_layer(n)
    for spec in spectra[:-1]:
        out.extend(synthesize_evolution(spec))
        out.extend(hadamard_layer(n))
    out.extend(synthesize_evolution(spectra[-1]))
    return out


def count_gates(gates: GateList) -> GateCounts:
    two = sum(1 for g in gates if g.name == "cx")
    return GateCounts(len(gates) - two, two)


def to_qasm(gates: GateList) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";', f"qreg q[{gates.n_qubits}];"]
    for g in gates:
        if g.name == "h":
            lines.append(f"h q[{g.qubits[0]}];")
        elif g.name == "rz":
            lines.append(f"rz({g.angle:.17g}) q[{g.qubits[0]}];")
        elif g.name == "cx":
            lines.append(f"cx q[{g.qubits[0]}],q[{g.qubits[1]}];")
        else:
            raise ValueError(f"unknown gate {g.name!r}")
    return "\n".join(lines) + "\n"


def export_qasm(gates: GateList, path: str | Path) -> None:
    Path(path).write_text(to_qasm(gates))
