"""Simulator and verifier for symmetric-cyclic bidirectional teleportation of Bell-like states."""

from .basis import BellLikeState, bell_like, ghz_decompose, ghz_measure, ghz_state, x_ket
from .engine import PauliString, SparseState, basis_state, fidelity, project, tensor, try_factor
from .metrics import comparison_table, efficiency
from .network import run_many, run_protocol
from .protocol import (
    ProtocolInputs,
    audit,
    correction_table,
    enumerate_branches,
    run_branch,
)

__version__ = "0.1.0"

__all__ = [
    "BellLikeState",
    "PauliString",
    "ProtocolInputs",
    "SparseState",
    "audit",
    "basis_state",
    "bell_like",
    "comparison_table",
    "correction_table",
    "efficiency",
    "enumerate_branches",
    "fidelity",
    "ghz_decompose",
    "ghz_measure",
    "ghz_state",
    "project",
    "run_branch",
    "run_many",
    "run_protocol",
    "tensor",
    "try_factor",
    "x_ket",
]
