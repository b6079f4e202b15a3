"""Entanglement swapping between two GHZ-like triples.

|G_left>_{123} ⊗ |G_right>_{456} is regrouped into a measured triple and a
remainder triple and expanded in the GHZ-like basis on both. The (j, k)
pairing is computed, never assumed.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .basis import ImpossibleOutcomeError, ghz_decompose, ghz_measure, ghz_state
from .engine import PRUNE, fidelity, permute, schmidt_coefficients, tensor

POSITIONS = ("1", "2", "3", "4", "5", "6")
DEFAULT_REGROUP = ("1", "5", "6", "2", "3", "4")

# pairing printed for |G_0>|G_0> as (index on 156, index on 234)
PRINTED_PAIRS = frozenset({(0, 0), (1, 1), (6, 2), (7, 3)})


@dataclass(frozen=True)
class SwapScenario:
    left_input: int
    right_input: int
    regroup: tuple[str, ...] = DEFAULT_REGROUP

    def __post_init__(self):
        object.__setattr__(self, "regroup", tuple(str(p) for p in self.regroup))
        if sorted(self.regroup) != sorted(POSITIONS):
            raise ValueError(f"regroup {self.regroup} is not a permutation of 1..6")
        for k in (self.left_input, self.right_input):
            if not 0 <= k <= 7:
                raise ValueError(f"GHZ index must be in 0..7, got {k}")

    @property
    def measured(self) -> tuple[str, ...]:
        return self.regroup[:3]

    @property
    def remainder(self) -> tuple[str, ...]:
        return self.regroup[3:]


@dataclass(frozen=True)
class SwapEntry:
    j: int
    k: int
    c: complex


@dataclass(frozen=True)
class SwapTable:
    scenario: SwapScenario
    grid: np.ndarray
    entries: tuple[SwapEntry, ...]

    @property
    def pairs(self) -> frozenset[tuple[int, int]]:
        return frozenset((e.j, e.k) for e in self.entries)

    def to_json(self) -> dict:
        return {
            "left": self.scenario.left_input,
            "right": self.scenario.right_input,
            "regroup": list(self.scenario.regroup),
            "entries": [{"j": e.j, "k": e.k, "re": e.c.real, "im": e.c.imag} for e in self.entries],
        }


def input_state(scenario: SwapScenario):
    return tensor(
        ghz_state(scenario.left_input, POSITIONS[:3]),
        ghz_state(scenario.right_input, POSITIONS[3:]),
    )


def regrouped_state(scenario: SwapScenario):
    return permute(input_state(scenario), scenario.regroup)


def swap_table(scenario: SwapScenario) -> SwapTable:
    grid = ghz_decompose(regrouped_state(scenario), scenario.measured, scenario.remainder)
    entries = tuple(
        SwapEntry(j, k, complex(grid[j, k]))
        for j in range(8)
        for k in range(8)
        if abs(grid[j, k]) > PRUNE
    )
    return SwapTable(scenario, grid, entries)


def all_swap_tables(regroup=DEFAULT_REGROUP) -> list[SwapTable]:
    return [swap_table(SwapScenario(l, r, regroup)) for l, r in product(range(8), repeat=2)]


def swap_roundtrip(scenario: SwapScenario, forced: int) -> tuple[int, float]:
    """GHZ-measure the first regrouped triple and identify the remainder.

    Raises ImpossibleOutcomeError for an inadmissible outcome and
    AssertionError if the remainder is not a single GHZ-like basis state.
    """
    _, prob, rest = ghz_measure(regrouped_state(scenario), scenario.measured, forced=forced)
    fids = [fidelity(rest, ghz_state(k, scenario.remainder)) for k in range(8)]
    best = int(np.argmax(fids))
    if abs(fids[best] - 1) > 1e-12:
        raise AssertionError(f"remainder is not a GHZ-like basis state (best fidelity {fids[best]})")
    return best, prob


def remainder_schmidt(scenario: SwapScenario, forced: int) -> list[np.ndarray]:
    """Schmidt coefficients of the post-measurement remainder across each 1|2 cut."""
    _, _, rest = ghz_measure(regrouped_state(scenario), scenario.measured, forced=forced)
    return [schmidt_coefficients(rest, [q]) for q in rest.register]


def pairing_report(table: SwapTable, printed=PRINTED_PAIRS) -> str:
    """Classify the computed (j, k) pairs against a printed pairing."""
    if table.pairs == printed:
        return "as-printed"
    if table.pairs == frozenset((k, j) for j, k in printed):
        return "transposed"
    return "different"


__all__ = [
    "DEFAULT_REGROUP",
    "ImpossibleOutcomeError",
    "PRINTED_PAIRS",
    "SwapEntry",
    "SwapScenario",
    "SwapTable",
    "all_swap_tables",
    "pairing_report",
    "regrouped_state",
    "remainder_schmidt",
    "swap_roundtrip",
    "swap_table",
]
