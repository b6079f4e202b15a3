"""Symmetric-cyclic bidirectional teleportation of six Bell-like payloads.

Alice, Bob and Charlie each hold two Bell-like payloads and share an
18-qubit channel made of six |G_0> triples. After local CNOTs, Z/X-basis
measurements and Pauli corrections, every payload lands on a qubit pair of
another party:

    alpha (A1,A2)   Alice   -> Bob     (b2,b3)
    mu    (B1,B2)   Bob     -> Alice   (a2,a3)
    nu    (B'1,B'2) Bob     -> Charlie (c2,c3)
    gamma (C1,C2)   Charlie -> Bob     (b'2,b'3)
    lambda(C'1,C'2) Charlie -> Alice   (a'2,a'3)
    beta  (A'1,A'2) Alice   -> Charlie (c'2,c'3)

The 30-qubit state factorizes into three independent 10-qubit blocks, one
per row pair above, which is what makes exhaustive branch checks cheap.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import product
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .basis import BellLikeState, ImpossibleOutcomeError, bell_like, ghz_state
from .engine import (
    CANONICAL_ORDER,
    PRUNE,
    TOL,
    PauliString,
    SparseState,
    apply_cnot,
    apply_pauli,
    collapse,
    fidelity,
    permute,
    reduced_fidelity,
    split_outcomes,
    tensor_all,
    try_factor,
)

PAYLOAD_NAMES = ("alpha", "mu", "nu", "gamma", "lambda", "beta")

PAYLOAD_QUBITS = {
    "alpha": ("A1", "A2"),
    "beta": ("A'1", "A'2"),
    "mu": ("B1", "B2"),
    "nu": ("B'1", "B'2"),
    "gamma": ("C1", "C2"),
    "lambda": ("C'1", "C'2"),
}

SENDER = {
    "alpha": "Alice", "beta": "Alice",
    "mu": "Bob", "nu": "Bob",
    "gamma": "Charlie", "lambda": "Charlie",
}

CHANNEL_TRIPLES = (
    ("a1", "b2", "b3"),
    ("a2", "a3", "b1"),
    ("b'1", "c2", "c3"),
    ("b'2", "b'3", "c1"),
    ("c'1", "a'2", "a'3"),
    ("c'2", "c'3", "a'1"),
)

STEP1_CNOTS = (
    ("A1", "a1"), ("B1", "b1"), ("B'1", "b'1"),
    ("C1", "c1"), ("C'1", "c'1"), ("A'1", "a'1"),
)

STEP2_PLAN = (
    ("a1", "Z"), ("A1", "X"), ("b1", "Z"), ("B1", "X"),
    ("b'1", "Z"), ("B'1", "X"), ("c1", "Z"), ("C1", "X"),
    ("c'1", "Z"), ("C'1", "X"), ("a'1", "Z"), ("A'1", "X"),
)
STEP3_PLAN = (("A2", "X"), ("B2", "X"), ("B'2", "X"), ("C2", "X"), ("C'2", "X"), ("A'2", "X"))
MEASUREMENT_ORDER = tuple(q for q, _ in STEP2_PLAN + STEP3_PLAN)

# probability of one complete 18-outcome branch
BRANCH_PROBABILITY = 2.0 ** -18


class ProtocolViolation(RuntimeError):
    """A branch failed to deliver a payload (no Pauli fixes it, or entanglement persists)."""


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class ChannelSpec:
    triples: tuple[tuple[str, str, str], ...] = CHANNEL_TRIPLES

    def __post_init__(self):
        qubits = [q for t in self.triples for q in t]
        if len(self.triples) != 6 or any(len(t) != 3 for t in self.triples):
            raise ValueError("channel needs six qubit triples")
        if len(set(qubits)) != 18 or set(qubits) != set(CANONICAL_ORDER[12:]):
            raise ValueError("channel triples must cover the 18 channel qubits exactly once")


@dataclass(frozen=True)
class RecipientMap:
    pairs: tuple[tuple[str, tuple[str, str]], ...] = (
        ("alpha", ("b2", "b3")),
        ("mu", ("a2", "a3")),
        ("nu", ("c2", "c3")),
        ("gamma", ("b'2", "b'3")),
        ("lambda", ("a'2", "a'3")),
        ("beta", ("c'2", "c'3")),
    )

    def __post_init__(self):
        qubits = [q for _, pair in self.pairs for q in pair]
        if len(set(qubits)) != len(qubits):
            raise ValueError("receiver pairs overlap")

    def __getitem__(self, name: str) -> tuple[str, str]:
        return dict(self.pairs)[name]

    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.pairs)


RECIPIENTS = RecipientMap()


@dataclass(frozen=True)
class ProtocolInputs:
    alpha: BellLikeState
    beta: BellLikeState
    mu: BellLikeState
    nu: BellLikeState
    gamma: BellLikeState
    lam: BellLikeState

    def payload(self, name: str) -> BellLikeState:
        return getattr(self, "lam" if name == "lambda" else name)

    def payloads(self) -> dict[str, BellLikeState]:
        return {name: self.payload(name) for name in PAYLOAD_NAMES}

    @property
    def generic(self) -> bool:
        return not any(p.degenerate for p in self.payloads().values())

    @classmethod
    def uniform(cls, p: BellLikeState) -> "ProtocolInputs":
        return cls(p, p, p, p, p, p)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "ProtocolInputs":
        return cls(*(BellLikeState.random(rng) for _ in range(6)))

    @classmethod
    def default(cls) -> "ProtocolInputs":
        r = 1 / math.sqrt(2)
        return cls(
            alpha=BellLikeState(0.6, 0.8),
            beta=BellLikeState(0.8, 0.6),
            mu=BellLikeState(r, r),
            nu=BellLikeState(0.28, 0.96),
            gamma=BellLikeState(0.96, 0.28),
            lam=BellLikeState(0.6, -0.8),
        )

    # JSON layout: {"alice": [alpha, beta], "bob": [mu, nu], "charlie": [gamma, lambda]}
    # with each payload written as [[re, im], [re, im]].
    _PARTY_SLOTS = {"alice": ("alpha", "beta"), "bob": ("mu", "nu"), "charlie": ("gamma", "lambda")}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ProtocolInputs":
        found = {}
        for party, names in cls._PARTY_SLOTS.items():
            entry = obj.get(party)
            if not isinstance(entry, list) or len(entry) != 2:
                raise InputError(f"{party}: expected a list of two payloads")
            for slot, (name, raw) in enumerate(zip(names, entry)):
                where = f"{party}[{slot}] ({name})"
                try:
                    (r0, i0), (r1, i1) = raw
                    amps = complex(float(r0), float(i0)), complex(float(r1), float(i1))
                except (TypeError, ValueError):
                    raise InputError(f"{where}: expected [[re, im], [re, im]], got {raw!r}") from None
                try:
                    found[name] = BellLikeState(*amps)
                except ValueError as exc:
                    raise InputError(f"{where}: {exc}") from None
        return cls(**{("lam" if k == "lambda" else k): v for k, v in found.items()})

    def to_json(self) -> dict:
        def amp(p):
            return [[p.a0.real, p.a0.imag], [p.a1.real, p.a1.imag]]

        return {party: [amp(self.payload(n)) for n in names] for party, names in self._PARTY_SLOTS.items()}


class MeasurementRecord(NamedTuple):
    qubit: str
    basis: str
    outcome: int
    step: int
    probability: float


@dataclass(frozen=True)
class Block:
    """One of the three mutually unentangled 10-qubit subsystems."""

    number: int
    payloads: tuple[str, str]
    triples: tuple[tuple[str, str, str], tuple[str, str, str]]
    cnots: tuple[tuple[str, str], tuple[str, str]]
    step2: tuple[tuple[str, str], ...]
    step3: tuple[tuple[str, str], ...]
    # register order of the collapsed 6-qubit state after Step 2, as printed
    golden_order: tuple[str, ...]

    @property
    def qubits(self) -> tuple[str, ...]:
        return tuple(q for n in self.payloads for q in PAYLOAD_QUBITS[n]) + tuple(
            q for t in self.triples for q in t
        )

    @property
    def plan(self) -> tuple[tuple[str, str], ...]:
        return self.step2 + self.step3

    def receivers(self, recipients: RecipientMap = RECIPIENTS) -> tuple[str, ...]:
        return tuple(q for n in self.payloads for q in recipients[n])


BLOCKS = (
    Block(1, ("alpha", "mu"), CHANNEL_TRIPLES[0:2], STEP1_CNOTS[0:2], STEP2_PLAN[0:4], STEP3_PLAN[0:2],
          ("b2", "b3", "a2", "a3", "A2", "B2")),
    Block(2, ("nu", "gamma"), CHANNEL_TRIPLES[2:4], STEP1_CNOTS[2:4], STEP2_PLAN[4:8], STEP3_PLAN[2:4],
          ("c2", "c3", "b'2", "b'3", "B'2", "C2")),
    Block(3, ("lambda", "beta"), CHANNEL_TRIPLES[4:6], STEP1_CNOTS[4:6], STEP2_PLAN[8:12], STEP3_PLAN[4:6],
          ("a'2", "a'3", "c'2", "c'3", "C'2", "A'2")),
)


def get_block(number: int) -> Block:
    if number not in (1, 2, 3):
        raise ValueError(f"block must be 1, 2 or 3, got {number!r}")
    return BLOCKS[number - 1]


@dataclass(frozen=True)
class BranchOutcome:
    records: tuple[MeasurementRecord, ...]
    probability: float
    corrections: Mapping[str, PauliString]
    fidelities: tuple[float, ...]
    payload_names: tuple[str, ...] = PAYLOAD_NAMES
    block: int | None = None

    @property
    def bits(self) -> str:
        return "".join(str(r.outcome) for r in self.records)

    @property
    def min_fidelity(self) -> float:
        return min(self.fidelities)

    def to_json(self) -> dict:
        return {
            "bits": self.bits,
            "probability": self.probability,
            "corrections": {n: self.corrections[n].label for n in self.payload_names},
            "fidelities": list(self.fidelities),
        }


def _parse_bits(bits, count: int) -> tuple[int, ...]:
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    bits = tuple(int(b) for b in bits)
    if len(bits) != count or any(b not in (0, 1) for b in bits):
        raise ValueError(f"expected {count} outcome bits, got {bits}")
    return bits


def build_channel(spec: ChannelSpec = ChannelSpec()) -> SparseState:
    return tensor_all(ghz_state(0, t) for t in spec.triples)


def payload_states(inputs: ProtocolInputs, names: Sequence[str] = PAYLOAD_NAMES) -> list[SparseState]:
    return [bell_like(inputs.payload(n), PAYLOAD_QUBITS[n]) for n in names]


def assemble_global(inputs: ProtocolInputs, channel: SparseState) -> SparseState:
    """Payloads ⊗ channel, reordered to the canonical 30-qubit register."""
    state = tensor_all(payload_states(inputs) + [channel])
    return permute(state, CANONICAL_ORDER)


def step1_cnots(state: SparseState, cnots: Sequence[tuple[str, str]] = STEP1_CNOTS) -> SparseState:
    for control, target in cnots:
        state = apply_cnot(state, control, target)
    return state


def measure_sequence(
    state: SparseState,
    plan: Sequence[tuple[str, str]],
    step: int,
    forced=None,
    rng: np.random.Generator | None = None,
) -> tuple[SparseState, list[MeasurementRecord]]:
    """Measure ``plan`` qubits in order; each record carries its conditional probability."""
    if forced is not None:
        forced = _parse_bits(forced, len(plan))
    elif rng is None:
        raise ValueError("an rng is required when outcomes are not forced")
    records = []
    for i, (q, basis) in enumerate(plan):
        parts = split_outcomes(state, q, basis)
        bit = forced[i] if forced is not None else int(rng.random() >= parts[0][0])
        prob = parts[bit][0]
        if prob < PRUNE:
            raise ImpossibleOutcomeError(f"outcome {bit} on {q} ({basis}) has probability {prob:.3g}")
        state = collapse(state, q, parts[bit])
        records.append(MeasurementRecord(q, basis, bit, step, prob))
    return state, records


def step2_measure(state, forced=None, rng=None, plan=STEP2_PLAN):
    return measure_sequence(state, plan, 2, forced, rng)


def step3_measure(state, forced=None, rng=None, plan=STEP3_PLAN):
    return measure_sequence(state, plan, 3, forced, rng)


_PAULI_SEARCH = tuple(a + b for a, b in product("IXYZ", repeat=2))


def find_correction(received: SparseState, target: SparseState) -> PauliString | None:
    """First two-qubit Pauli (I<X<Y<Z per qubit) mapping ``received`` onto ``target``."""
    pair = target.register
    for label in _PAULI_SEARCH:
        p = PauliString.from_label(pair, label)
        if abs(fidelity(apply_pauli(received, p), target) - 1) <= TOL:
            return p
    return None


def derive_corrections(
    remainder: SparseState,
    inputs: ProtocolInputs,
    recipients: RecipientMap = RECIPIENTS,
    names: Sequence[str] | None = None,
) -> dict[str, PauliString]:
    if names is None:
        names = recipients.names()
    corrections = {}
    for name in names:
        pair = recipients[name]
        split = try_factor(remainder, pair)
        if split is None:
            raise ProtocolViolation(f"{name}: receiver pair {pair} is still entangled")
        target = bell_like(inputs.payload(name), pair)
        p = find_correction(split[0], target)
        if p is None:
            raise ProtocolViolation(f"{name}: no Pauli correction reaches fidelity 1")
        corrections[name] = p
    return corrections


def apply_corrections(state: SparseState, corrections: Mapping[str, PauliString]) -> SparseState:
    for p in corrections.values():
        state = apply_pauli(state, p)
    return state


def delivered_fidelities(
    state: SparseState,
    inputs: ProtocolInputs,
    names: Sequence[str],
    recipients: RecipientMap = RECIPIENTS,
) -> tuple[float, ...]:
    return tuple(
        reduced_fidelity(state, bell_like(inputs.payload(n), recipients[n])) for n in names
    )


def run_branch(inputs: ProtocolInputs, forced18, channel: ChannelSpec = ChannelSpec()) -> BranchOutcome:
    """Full 30-qubit simulation of one measurement branch."""
    bits = _parse_bits(forced18, 18)
    state = step1_cnots(assemble_global(inputs, build_channel(channel)))
    state, rec2 = step2_measure(state, bits[:12])
    state, rec3 = step3_measure(state, bits[12:])
    corrections = derive_corrections(state, inputs)
    state = apply_corrections(state, corrections)
    records = tuple(rec2 + rec3)
    return BranchOutcome(
        records=records,
        probability=math.prod(r.probability for r in records),
        corrections=corrections,
        fidelities=delivered_fidelities(state, inputs, PAYLOAD_NAMES),
    )


def block_state(inputs: ProtocolInputs, block: Block) -> SparseState:
    """The block's 10-qubit factor right after the Step-1 CNOTs."""
    parts = payload_states(inputs, block.payloads) + [ghz_state(0, t) for t in block.triples]
    return step1_cnots(tensor_all(parts), block.cnots)


def run_block_branch(inputs: ProtocolInputs, block: Block, bits6, prepared: SparseState | None = None) -> BranchOutcome:
    bits = _parse_bits(bits6, 6)
    state = prepared if prepared is not None else block_state(inputs, block)
    state, rec2 = measure_sequence(state, block.step2, 2, bits[:4])
    state, rec3 = measure_sequence(state, block.step3, 3, bits[4:])
    corrections = derive_corrections(state, inputs, names=block.payloads)
    state = apply_corrections(state, corrections)
    records = tuple(rec2 + rec3)
    return BranchOutcome(
        records=records,
        probability=math.prod(r.probability for r in records),
        corrections=corrections,
        fidelities=delivered_fidelities(state, inputs, block.payloads),
        payload_names=block.payloads,
        block=block.number,
    )


def block_outcomes(inputs: ProtocolInputs, block: Block) -> list[BranchOutcome]:
    prepared = block_state(inputs, block)
    return [run_block_branch(inputs, block, bits, prepared) for bits in product((0, 1), repeat=6)]


def combine(outcomes: Sequence[BranchOutcome]) -> BranchOutcome:
    """Join one outcome per block into a full 18-outcome branch."""
    step2 = tuple(r for o in outcomes for r in o.records[:4])
    step3 = tuple(r for o in outcomes for r in o.records[4:])
    corrections = {}
    for o in outcomes:
        corrections.update(o.corrections)
    return BranchOutcome(
        records=step2 + step3,
        probability=math.prod(o.probability for o in outcomes),
        corrections=corrections,
        fidelities=tuple(f for o in outcomes for f in o.fidelities),
    )


def enumerate_branches(inputs: ProtocolInputs, scope: int | str = "full") -> Iterator[BranchOutcome]:
    """Stream branch outcomes for one block (64) or for the full protocol (2**18).

    Full-scope branches are synthesized from the three per-block results.
    """
    if scope == "full":
        per_block = [block_outcomes(inputs, b) for b in BLOCKS]
        for trio in product(*per_block):
            yield combine(trio)
    else:
        yield from block_outcomes(inputs, get_block(int(scope)))


@dataclass(frozen=True)
class CorrectionTable:
    block: Block
    rows: tuple[tuple[str, PauliString, PauliString], ...]

    def lookup(self, bits: str) -> tuple[PauliString, PauliString]:
        row = self._index[bits]
        return row[1], row[2]

    @cached_property
    def _index(self) -> dict[str, tuple]:
        return {r[0]: r for r in self.rows}

    def labels(self) -> list[tuple[str, str, str]]:
        return [(bits, p1.label, p2.label) for bits, p1, p2 in self.rows]

    @cached_property
    def dependencies(self) -> tuple[frozenset[int], frozenset[int]]:
        """Bit positions (0-5 in block order) each payload's correction depends on."""
        index = self._index
        deps: tuple[set, set] = (set(), set())
        for bits, p1, p2 in self.rows:
            for pos in range(6):
                flipped = bits[:pos] + str(1 - int(bits[pos])) + bits[pos + 1:]
                other = index[flipped]
                if other[1].label != p1.label:
                    deps[0].add(pos)
                if other[2].label != p2.label:
                    deps[1].add(pos)
        return frozenset(deps[0]), frozenset(deps[1])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["bits", "payload_1_correction", "payload_2_correction"])
        writer.writerows(self.labels())
        return buf.getvalue()


def correction_table(inputs: ProtocolInputs, block: int) -> CorrectionTable:
    b = get_block(block)
    for name in b.payloads:
        if inputs.payload(name).degenerate:
            raise InputError(f"{name}: degenerate payload leaves corrections undetermined")
    rows = []
    for o in block_outcomes(inputs, b):
        if o.min_fidelity < 1 - TOL:
            raise ProtocolViolation(f"block {block} branch {o.bits} delivered fidelity {o.min_fidelity}")
        rows.append((o.bits, o.corrections[b.payloads[0]], o.corrections[b.payloads[1]]))
    return CorrectionTable(b, tuple(rows))


@lru_cache(maxsize=None)
def reference_tables() -> tuple[CorrectionTable, ...]:
    """Correction tables derived once from a fixed generic payload set.

    Corrections do not depend on payload amplitudes, so receivers can use
    these without knowing what was sent.
    """
    inputs = ProtocolInputs.random(np.random.default_rng(20240101))
    return tuple(correction_table(inputs, n) for n in (1, 2, 3))


@dataclass
class AuditReport:
    scope: str
    branches: int
    min_fidelity: float
    max_probability_deviation: float
    expected_probability: float
    probability_total: float
    failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "scope": self.scope,
            "branches": self.branches,
            "min_fidelity": self.min_fidelity,
            "max_probability_deviation": self.max_probability_deviation,
            "expected_probability": self.expected_probability,
            "probability_total": self.probability_total,
            "ok": self.ok,
            "failures": self.failures,
        }


def audit(inputs: ProtocolInputs, scope: str = "block", tolerance: float = TOL, prob_tolerance: float = 1e-12) -> AuditReport:
    """Check fidelity and outcome uniformity on every branch.

    ``block`` covers 3 x 64 block branches (each expected at 2**-6);
    ``full`` covers all 2**18 synthesized branches (each at 2**-18).
    """
    if scope == "block":
        streams = [(f"block{b.number}:", enumerate_branches(inputs, b.number)) for b in BLOCKS]
        expected = 2.0 ** -6
    elif scope == "full":
        streams = [("", enumerate_branches(inputs, "full"))]
        expected = BRANCH_PROBABILITY
    else:
        raise ValueError(f"scope must be 'block' or 'full', got {scope!r}")
    count, min_fid, max_dev, total, failures = 0, math.inf, 0.0, 0.0, []
    for prefix, stream in streams:
        for o in stream:
            count += 1
            fid = min(o.fidelities)
            dev = abs(o.probability - expected)
            min_fid = min(min_fid, fid)
            max_dev = max(max_dev, dev)
            total += o.probability
            if fid < 1 - tolerance or dev > prob_tolerance:
                failures.append(prefix + o.bits)
    # per stream, i.e. per block in block scope
    return AuditReport(scope, count, min_fid, max_dev, expected, total / len(streams), failures)
