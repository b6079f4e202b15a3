"""GHZ-like basis, Bell-like payloads and single-qubit X-basis kets."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import (
    PRUNE,
    TOL,
    RegisterError,
    SparseState,
    empty_state,
    permute,
    state_from_amplitudes,
    to_dense,
)

_R = 1 / math.sqrt(2)

# (first ket, second ket, sign of second) for |G_0> .. |G_7>
GHZ_TABLE: tuple[tuple[str, str, int], ...] = (
    ("000", "111", +1),
    ("000", "111", -1),
    ("100", "011", +1),
    ("100", "011", -1),
    ("010", "101", +1),
    ("010", "101", -1),
    ("110", "001", +1),
    ("110", "001", -1),
)

# column k is |G_k> in the 3-qubit computational basis
GHZ_MATRIX = np.zeros((8, 8))
for _k, (_u, _v, _s) in enumerate(GHZ_TABLE):
    GHZ_MATRIX[int(_u, 2), _k] = _R
    GHZ_MATRIX[int(_v, 2), _k] = _s * _R


class ImpossibleOutcomeError(ValueError):
    """A forced measurement outcome has (numerically) zero probability."""


def _check_index(k: int) -> int:
    if not isinstance(k, (int, np.integer)) or not 0 <= k <= 7:
        raise ValueError(f"GHZ index must be in 0..7, got {k!r}")
    return int(k)


def ghz_state(k: int, triple: Sequence[str]) -> SparseState:
    k = _check_index(k)
    triple = tuple(triple)
    if len(triple) != 3 or len(set(triple)) != 3:
        raise RegisterError(f"GHZ state needs three distinct qubits, got {triple}")
    first, second, sign = GHZ_TABLE[k]
    return state_from_amplitudes(triple, {first: _R, second: sign * _R})


@dataclass(frozen=True)
class BellLikeState:
    """Payload a0|00> + a1|11>."""

    a0: complex
    a1: complex

    def __post_init__(self):
        object.__setattr__(self, "a0", complex(self.a0))
        object.__setattr__(self, "a1", complex(self.a1))
        norm2 = abs(self.a0) ** 2 + abs(self.a1) ** 2
        if abs(norm2 - 1) > TOL:
            raise ValueError(f"Bell-like amplitudes not normalized: |a0|^2+|a1|^2 = {norm2:.12g}")

    @property
    def degenerate(self) -> bool:
        """True when a non-identity Pauli correction fixes the payload up to phase.

        Inside span{|00>, |11>} the Pauli images are (a0, -a1), (a1, a0) and
        (a1, -a0); a zero amplitude or a1/a0 in {±1, ±i} makes one of them
        indistinguishable from the identity.
        """
        a0, a1 = self.a0, self.a1
        images = ((a0, -a1), (a1, a0), (a1, -a0))
        return any(abs(a0.conjugate() * u + a1.conjugate() * v) ** 2 > 1 - 1e-6 for u, v in images)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "BellLikeState":
        v = rng.normal(size=2) + 1j * rng.normal(size=2)
        v /= np.linalg.norm(v)
        return cls(v[0], v[1])


def bell_like(p: BellLikeState, pair: Sequence[str]) -> SparseState:
    pair = tuple(pair)
    if len(pair) != 2:
        raise RegisterError(f"Bell-like state needs two qubits, got {pair}")
    return state_from_amplitudes(pair, {"00": p.a0, "11": p.a1})


def x_ket(sign: str, q: str) -> SparseState:
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    return state_from_amplitudes((q,), {"0": _R, "1": _R if sign == "+" else -_R})


def ghz_decompose(state: SparseState, left: Sequence[str], right: Sequence[str]) -> np.ndarray:
    """Coefficient grid c[j, k] = <G_j(left) ⊗ G_k(right) | state>."""
    left, right = tuple(left), tuple(right)
    if len(left) != 3 or len(right) != 3 or sorted(left + right) != sorted(state.register):
        raise RegisterError(f"{left} + {right} does not partition register {state.register}")
    vec = to_dense(permute(state, left + right)).reshape(8, 8)
    return GHZ_MATRIX.T @ vec @ GHZ_MATRIX


def ghz_probabilities(state: SparseState, triple: Sequence[str]) -> tuple[np.ndarray, np.ndarray, tuple[str, ...]]:
    """Per-outcome probabilities and unnormalized remainders for a GHZ measurement."""
    triple = tuple(triple)
    if len(triple) != 3 or len(set(triple)) != 3:
        raise RegisterError(f"GHZ measurement needs three distinct qubits, got {triple}")
    rest = tuple(q for q in state.register if q not in triple)
    vec = to_dense(permute(state, triple + rest)).reshape(8, -1)
    remainders = GHZ_MATRIX.T @ vec
    probs = np.sum(np.abs(remainders) ** 2, axis=1)
    return probs, remainders, rest


def ghz_measure(
    state: SparseState,
    triple: Sequence[str],
    forced: int | None = None,
    rng: np.random.Generator | None = None,
) -> tuple[int, float, SparseState]:
    """Project ``triple`` onto the GHZ-like basis; the triple leaves the register.

    Without ``forced`` the outcome is drawn from ``rng``, which callers should
    seed for reproducible runs.
    """
    probs, remainders, rest = ghz_probabilities(state, triple)
    if forced is None:
        if rng is None:
            raise ValueError("an rng is required when the outcome is not forced")
        k = int(rng.choice(8, p=probs / probs.sum()))
    else:
        k = _check_index(forced)
        if probs[k] < PRUNE:
            raise ImpossibleOutcomeError(f"GHZ outcome {k} has probability {probs[k]:.3g}")
    prob = float(probs[k])
    vec = remainders[k] / math.sqrt(prob)
    if not rest:
        # global phase of the scalar remainder is irrelevant
        return k, prob, empty_state()
    terms = {i: complex(a) for i, a in enumerate(vec) if abs(a) >= PRUNE}
    return k, prob, SparseState(rest, terms)


def grid_csv(grid: np.ndarray) -> str:
    """8x8 grid as CSV: one row per left index j, (re, im) column pairs per k."""
    buf = io.StringIO()
    buf.write("j," + ",".join(f"k{k}_re,k{k}_im" for k in range(8)) + "\n")
    for j in range(8):
        cells = ",".join(f"{c.real:.17g},{c.imag:.17g}" for c in grid[j])
        buf.write(f"{j},{cells}\n")
    return buf.getvalue()
