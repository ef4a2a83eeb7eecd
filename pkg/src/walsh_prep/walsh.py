"""Walsh-basis representation of diagonal Hamiltonians.

``W_r = sum_j (-1)^{popcount(r & j)} |j><j|``; bit ``q`` of ``r`` puts a Pauli-Z on qubit ``q``.
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .statevec import TWO_PI, DiagonalHamiltonian, fwht_inplace


class TopologyError(ValueError):
    pass


def popcount(x: int) -> int:
    return bin(x).count("1")


def walsh_signs(r: int, n_qubits: int) -> np.ndarray:
    """Diagonal of ``W_r`` as a float array of +-1."""
    j = np.arange(1 << n_qubits, dtype=np.int64) & r
    parity = np.zeros(j.shape, dtype=np.int64)
    while np.any(j):
        parity ^= j & 1
        j >>= 1
    return 1.0 - 2.0 * parity


@lru_cache(maxsize=64)
def _sign_rows(indices: tuple[int, ...], n_qubits: int) -> np.ndarray:
    rows = np.array([walsh_signs(r, n_qubits) for r in indices]).reshape(len(indices), -1)
    rows.flags.writeable = False
    return rows


@dataclass
class WalshSpectrum:
    n_qubits: int
    terms: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        dim = 1 << self.n_qubits
        clean = {}
        for r, c in self.terms.items():
            r = int(r)
            if not 0 <= r < dim:
                raise ValueError(f"Walsh index {r} outside [0, {dim})")
            clean[r] = float(c)
        self.terms = dict(sorted(clean.items()))

    @classmethod
    def from_arrays(cls, n_qubits: int, indices, coeffs) -> WalshSpectrum:
        return cls(n_qubits, dict(zip((int(r) for r in indices), (float(c) for c in coeffs))))

    def to_json(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "terms": [{"r": r, "c": c} for r, c in self.terms.items()],
        }

    @classmethod
    def from_json(cls, data: dict) -> WalshSpectrum:
        return cls(int(data["n_qubits"]), {int(t["r"]): float(t["c"]) for t in data["terms"]})

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=2))

    @classmethod
    def load(cls, path: str | Path) -> WalshSpectrum:
        return cls.from_json(json.loads(Path(path).read_text()))


def walsh_coefficients(h: DiagonalHamiltonian) -> WalshSpectrum:
    """Full spectrum ``c_r = (1/N) sum_j (-1)^{r.j} h_j``."""
    dim = h.coeffs.size
    c = fwht_inplace(h.coeffs.copy(), normalized=False) / dim
    return WalshSpectrum(h.n_qubits, dict(enumerate(c.tolist())))


def walsh_transform(values: np.ndarray) -> np.ndarray:
    """Unnormalized transform ``out_r = sum_j (-1)^{r.j} values_j`` (returns a new array)."""
    return fwht_inplace(np.array(values, dtype=np.float64), normalized=False)


def expand_diagonal(spec: WalshSpectrum) -> DiagonalHamiltonian:
    """``h_j = sum_r c_r (-1)^{r.j}``, summed directly when the spectrum is sparse."""
    return DiagonalHamiltonian(
        expand_coefficients(spec.n_qubits, list(spec.terms), list(spec.terms.values()))
    )


def expand_coefficients(n_qubits: int, indices, coeffs) -> np.ndarray:
    dim = 1 << n_qubits
    indices = np.asarray(indices, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if indices.size <= 4 * n_qubits:
        return coeffs @ _sign_rows(tuple(indices.tolist()), n_qubits)
    dense = np.zeros(dim)
    dense[indices] = coeffs
    return fwht_inplace(dense, normalized=False)


@dataclass(frozen=True)
class TopologyGraph:
    n_qubits: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen = set()
        norm = []
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise TopologyError(f"self-loop on qubit {a}")
            if not (0 <= a < self.n_qubits and 0 <= b < self.n_qubits):
                raise TopologyError(f"edge ({a}, {b}) outside [0, {self.n_qubits})")
            key = (min(a, b), max(a, b))
            if key in seen:
                raise TopologyError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(norm))

    def to_json(self) -> dict:
        return {"n_qubits": self.n_qubits, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_json(cls, data: dict) -> TopologyGraph:
        return cls(int(data["n_qubits"]), tuple(tuple(e) for e in data["edges"]))


def ladder_graph(n_qubits: int) -> TopologyGraph:
    """Two rails ``0..n/2-1`` and ``n/2..n-1`` joined by rungs ``(i, i + n/2)``."""
    if n_qubits < 4 or n_qubits % 2:
        raise TopologyError(f"ladder needs an even number of qubits >= 4, got {n_qubits}")
    half = n_qubits // 2
    edges = []
    for rail in (0, half):
        edges += [(rail + i, rail + i + 1) for i in range(half - 1)]
    edges += [(i, i + half) for i in range(half)]
    return TopologyGraph(n_qubits, tuple(edges))


@dataclass(frozen=True)
class TermSet:
    """Trainable Walsh indices. ``kind`` is ``"full"``, ``"k_local"`` or ``"topology"``."""

    n_qubits: int
    indices: tuple[int, ...]
    kind: str
    k: int | None = None
    graph: TopologyGraph | None = None

    def __len__(self) -> int:
        return len(self.indices)

    def to_json(self) -> dict:
        out: dict = {"n_qubits": self.n_qubits, "kind": self.kind}
        if self.k is not None:
            out["k"] = self.k
        if self.graph is not None:
            out["graph"] = self.graph.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> TermSet:
        graph = TopologyGraph.from_json(data["graph"]) if "graph" in data else None
        return select_terms(int(data["n_qubits"]), data["kind"], k=data.get("k"), graph=graph)


def select_terms(
    n_qubits: int, kind: str, k: int | None = None, graph: TopologyGraph | None = None
) -> TermSet:
    dim = 1 << n_qubits
    if kind == "full":
        indices = list(range(1, dim))
    elif kind == "k_local":
        if k is None or k < 1:
            raise ValueError("k_local selection needs k >= 1")
        indices = [r for r in range(1, dim) if popcount(r) <= k]
    elif kind == "topology":
        if graph is None:
            raise TopologyError("topology selection needs a graph")
        if graph.n_qubits != n_qubits:
            raise TopologyError(f"graph has {graph.n_qubits} qubits, expected {n_qubits}")
        indices = [1 << q for q in range(n_qubits)]
        indices += [(1 << a) | (1 << b) for a, b in graph.edges]
        indices.sort()
    else:
        raise ValueError(f"unknown term selection {kind!r}")
    return TermSet(n_qubits, tuple(indices), kind, k=k if kind == "k_local" else None,
                   graph=graph if kind == "topology" else None)


def two_local(n_qubits: int) -> TermSet:
    return select_terms(n_qubits, "k_local", k=2)


def hardware_efficient(n_qubits: int) -> TermSet:
    return select_terms(n_qubits, "topology", graph=ladder_graph(n_qubits))


def quantize_hamiltonian(h: DiagonalHamiltonian, m: int) -> DiagonalHamiltonian:
    """Round each coefficient (mod 2*pi) to the nearest multiple of ``2**-m``.

    Models the oracle register of 3 integer bits plus ``m`` fractional bits. A
    value that would round up to 2*pi or beyond maps to the equivalent 0.
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    scale = float(2 ** m)
    k = np.round(np.mod(h.coeffs, TWO_PI) * scale)
    k_max = np.floor(TWO_PI * scale)
    k[k > k_max] = 0.0
    return DiagonalHamiltonian(k / scale)
