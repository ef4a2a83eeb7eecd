"""Classical learning of diagonal Hamiltonians for Hadamard/phase-evolution state preparation."""

__version__ = "0.1.0"
