"""Target amplitude vectors: seeded random data, linear and sine profiles, text files."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .statevec import SizeError, StateVector, n_qubits_for

DISTRIBUTIONS = ("uniform", "normal")


class DatasetError(ValueError):
    pass


def _normalized(values: np.ndarray) -> StateVector:
    return StateVector(values / np.linalg.norm(values))


def linear_state(n_qubits: int) -> StateVector:
    if n_qubits < 1:
        raise SizeError("n_qubits must be >= 1")
    dim = 1 << n_qubits
    scale = np.sqrt(6.0 / (dim * (dim - 1) * (2 * dim - 1)))
    return StateVector(np.arange(dim, dtype=np.float64) * scale)


def sine_state(n_qubits: int) -> StateVector:
    if n_qubits < 1:
        raise SizeError("n_qubits must be >= 1")
    dim = 1 << n_qubits
    j = np.arange(dim, dtype=np.float64)
    amps = np.sqrt(2.0 / dim) * np.sin(np.pi * (j + 0.5) / dim)
    # enforce the exact mirror symmetry that rounding of sin() can break
    amps[dim // 2:] = amps[: dim // 2][::-1]
    return StateVector(amps)


def random_state(kind: str, n_qubits: int, seed: int) -> StateVector:
    """U[0,1] or |N(0,1)| samples, L2-normalized."""
    rng = np.random.default_rng(seed)
    dim = 1 << n_qubits
    if kind == "uniform":
        values = rng.uniform(0.0, 1.0, dim)
    elif kind == "normal":
        values = np.abs(rng.standard_normal(dim))
    else:
        raise DatasetError(f"unknown distribution {kind!r}; expected one of {DISTRIBUTIONS}")
    return _normalized(values)


def load_amplitudes(path: str | Path) -> StateVector:
    """Read one value per line ('#' comments and blank lines skipped) and normalize."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            v = float(line)
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: cannot parse {line!r}") from None
        if v < 0:
            raise DatasetError(
                f"{path}:{lineno}: negative value {v}; targets are amplitude moduli and must be >= 0"
            )
        values.append(v)
    try:
        n_qubits_for(len(values))
    except SizeError:
        raise SizeError(f"{path}: {len(values)} values is not a power of two >= 2") from None
    arr = np.array(values)
    if not np.any(arr):
        raise DatasetError(f"{path}: all values are zero")
    return _normalized(arr)


def save_amplitudes(state: StateVector, path: str | Path) -> None:
    lines = [f"{float(v):.17g}" for v in np.abs(state.amps)]
    Path(path).write_text("\n".join(lines) + "\n")


def make_target(name: str, n_qubits: int, seed: int = 0) -> StateVector:
    """Resolve a CLI target name: uniform, normal, linear, sine, or ``file:<path>``."""
    if name.startswith("file:"):
        return load_amplitudes(name[5:])
    if name in DISTRIBUTIONS:
        return random_state(name, n_qubits, seed)
    if name == "linear":
        return linear_state(n_qubits)
    if name == "sine":
        return sine_state(n_qubits)
    raise DatasetError(f"unknown target {name!r}")
