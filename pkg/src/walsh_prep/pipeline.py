"""The interleaved Hadamard / diagonal-evolution circuit as a forward map.

Layer layout for ``layers=2``::

    full_oracle:      F D2 F D1 F |0>            (phase fix D3 derived afterwards)
    walsh_truncated:  D3 F D2 F D1 F |0>         (D3 trained with the rest)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevec import (
    PHASE_EPS,
    DiagonalHamiltonian,
    ShapeError,
    StateVector,
    _phases,
    evolve_diagonal,
    fwht_inplace,
    uniform_state,
)
from .walsh import TermSet, WalshSpectrum, expand_coefficients

FULL_ORACLE = "full_oracle"
WALSH_TRUNCATED = "walsh_truncated"
METHODS = (FULL_ORACLE, WALSH_TRUNCATED)


@dataclass(frozen=True)
class PipelineConfig:
    n_qubits: int
    method: str = FULL_ORACLE
    layers: int = 2
    term_set: TermSet | None = None

    def __post_init__(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.layers not in (1, 2):
            raise ValueError(f"layers must be 1 or 2, got {self.layers}")
        if self.method == WALSH_TRUNCATED:
            if self.term_set is None or len(self.term_set) == 0:
                raise ValueError("walsh_truncated needs a nonempty term set")
            if self.term_set.n_qubits != self.n_qubits:
                raise ValueError("term set qubit count does not match the pipeline")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @property
    def n_blocks(self) -> int:
        """Number of trained diagonal evolutions."""
        return self.layers + (self.method == WALSH_TRUNCATED)

    @property
    def block_size(self) -> int:
        return self.dim if self.method == FULL_ORACLE else len(self.term_set)

    @property
    def n_params(self) -> int:
        return self.n_blocks * self.block_size

    def offset(self, block: int, key: int) -> int:
        """Flat offset of basis index ``key`` (full_oracle) or Walsh index ``key`` in ``block``."""
        if not 0 <= block < self.n_blocks:
            raise IndexError(f"block {block} outside [0, {self.n_blocks})")
        if self.method == FULL_ORACLE:
            if not 0 <= key < self.dim:
                raise IndexError(f"basis index {key} outside [0, {self.dim})")
            pos = key
        else:
            pos = self.term_set.indices.index(key)
        return block * self.block_size + pos

    def to_json(self) -> dict:
        out = {"n_qubits": self.n_qubits, "method": self.method, "layers": self.layers}
        if self.term_set is not None:
            out["term_set"] = self.term_set.to_json()
        return out

    @classmethod
    def from_json(cls, data: dict) -> PipelineConfig:
        ts = TermSet.from_json(data["term_set"]) if data.get("term_set") else None
        return cls(int(data["n_qubits"]), data["method"], int(data["layers"]), ts)


@dataclass
class ParameterVector:
    values: np.ndarray
    config: PipelineConfig

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (self.config.n_params,):
            raise ShapeError(
                f"expected {self.config.n_params} parameters, got {self.values.size}"
            )

    def block(self, k: int) -> np.ndarray:
        b = self.config.block_size
        return self.values[k * b:(k + 1) * b]

    def diagonals(self) -> list[np.ndarray]:
        return layer_diagonals(self.values, self.config)

    def hamiltonians(self) -> list[DiagonalHamiltonian]:
        return [DiagonalHamiltonian(h) for h in self.diagonals()]

    def to_json(self) -> dict:
        """Diagonal arrays for full_oracle, Walsh spectra for walsh_truncated."""
        out = {"config": self.config.to_json(), "method": self.config.method}
        if self.config.method == FULL_ORACLE:
            out["hamiltonians"] = [b.tolist() for b in (self.block(k) for k in range(self.config.n_blocks))]
        else:
            out["spectra"] = [s.to_json() for s in self.spectra()]
        return out

    @classmethod
    def from_json(cls, data: dict) -> ParameterVector:
        config = PipelineConfig.from_json(data["config"])
        if config.method == FULL_ORACLE:
            values = np.concatenate([np.asarray(h, dtype=np.float64) for h in data["hamiltonians"]])
        else:
            idx = config.term_set.indices
            blocks = []
            for spec in data["spectra"]:
                terms = {int(t["r"]): float(t["c"]) for t in spec["terms"]}
                blocks.append([terms.get(r, 0.0) for r in idx])
            values = np.concatenate(blocks)
        return cls(values, config)

    def spectra(self) -> list[WalshSpectrum]:
        cfg = self.config
        if cfg.method != WALSH_TRUNCATED:
            raise ValueError("only walsh_truncated parameters have a Walsh spectrum")
        return [
            WalshSpectrum.from_arrays(cfg.n_qubits, cfg.term_set.indices, self.block(k))
            for k in range(cfg.n_blocks)
        ]


def layer_diagonals(values: np.ndarray, config: PipelineConfig) -> list[np.ndarray]:
    b = config.block_size
    blocks = [values[k * b:(k + 1) * b] for k in range(config.n_blocks)]
    if config.method == FULL_ORACLE:
        return blocks
    idx = config.term_set.indices
    return [expand_coefficients(config.n_qubits, idx, c) for c in blocks]


def init_params(config: PipelineConfig, seed: int, scale: float = 0.1) -> ParameterVector:
    rng = np.random.default_rng(seed)
    return ParameterVector(rng.normal(0.0, scale, config.n_params), config)


def zero_params(config: PipelineConfig) -> ParameterVector:
    return ParameterVector(np.zeros(config.n_params), config)


def run_circuit(diagonals: list[np.ndarray], config: PipelineConfig) -> np.ndarray:
    """Raw amplitude array of the circuit for precomputed per-block diagonals."""
    psi = uniform_state(config.n_qubits).amps
    for k in range(config.layers):
        psi *= np.exp(-1j * diagonals[k])
        fwht_inplace(psi)
    if config.method == WALSH_TRUNCATED:
        psi *= np.exp(-1j * diagonals[config.layers])
    return psi


def forward(params: ParameterVector, config: PipelineConfig | None = None) -> StateVector:
    config = config or params.config
    if params.values.size != config.n_params:
        raise ShapeError(f"expected {config.n_params} parameters, got {params.values.size}")
    return StateVector(run_circuit(layer_diagonals(params.values, config), config))


def phase_correction(state: StateVector, eps: float = PHASE_EPS) -> DiagonalHamiltonian:
    """Diagonal evolution ``h_j = -theta_j`` that removes the residual phases of ``state``."""
    return DiagonalHamiltonian(-_phases(state.amps, eps))


def prepared_state_method1(
    params: ParameterVector, config: PipelineConfig | None = None, eps: float = PHASE_EPS
) -> StateVector:
    config = config or params.config
    if config.method != FULL_ORACLE:
        raise ValueError("analytic phase correction applies to full_oracle pipelines only")
    psi = forward(params, config)
    return evolve_diagonal(psi, phase_correction(psi, eps))


def prepared_state(params: ParameterVector, eps: float = PHASE_EPS) -> StateVector:
    """State the hardware would produce: phase-corrected for full_oracle, raw otherwise."""
    if params.config.method == FULL_ORACLE:
        return prepared_state_method1(params, eps=eps)
    return forward(params)
