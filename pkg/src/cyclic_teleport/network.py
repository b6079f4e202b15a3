"""Three-party classical messaging harness.

Alice, Bob and Charlie are isolated state machines. They touch the shared
quantum state only through local operations on qubits they own and talk only
through a broadcast channel that counts every bit once per message. Each
receiver looks its correction up in a payload-independent table and refuses
to correct before the messages that correction depends on have arrived.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .basis import ImpossibleOutcomeError, bell_like, ghz_state
from .engine import (
    PRUNE,
    PauliString,
    SparseState,
    apply_cnot,
    apply_pauli,
    collapse,
    dump,
    reduced_fidelity,
    split_outcomes,
    tensor,
    try_factor,
)
from .protocol import (
    BLOCKS,
    CHANNEL_TRIPLES,
    MEASUREMENT_ORDER,
    PAYLOAD_NAMES,
    PAYLOAD_QUBITS,
    RECIPIENTS,
    STEP1_CNOTS,
    STEP2_PLAN,
    STEP3_PLAN,
    BranchOutcome,
    MeasurementRecord,
    ProtocolInputs,
    ProtocolViolation,
    _parse_bits,
    reference_tables,
)

PARTIES = ("Alice", "Bob", "Charlie")
MESSAGES_PER_RUN = 6
BITS_PER_RUN = 18


def owner(qubit: str) -> str:
    return {"a": "Alice", "b": "Bob", "c": "Charlie"}[qubit[0].lower()]


@dataclass(frozen=True)
class ClassicalMessage:
    sender: str
    step: int
    payload: tuple[tuple[str, int], ...]

    @property
    def nbits(self) -> int:
        return len(self.payload)

    def to_json(self) -> dict:
        return {"sender": self.sender, "step": self.step, "bits": [[q, b] for q, b in self.payload]}


class QuantumWorld:
    """Global quantum state kept as a list of unentangled factors.

    Two-qubit gates merge the factors they touch; measured qubits leave
    their factor.
    """

    def __init__(self, factors: Iterable[SparseState]):
        self.factors = list(factors)

    def _locate(self, q: str) -> int:
        for i, f in enumerate(self.factors):
            if q in f.register:
                return i
        raise KeyError(f"qubit {q!r} is not in the world")

    def cnot(self, control: str, target: str) -> None:
        i, j = self._locate(control), self._locate(target)
        if i != j:
            merged = tensor(self.factors[i], self.factors[j])
            self.factors[i] = merged
            del self.factors[j]
            i = self._locate(control)
        self.factors[i] = apply_cnot(self.factors[i], control, target)

    def measure(self, q: str, basis: str, rng: np.random.Generator, forced: int | None = None) -> tuple[int, float]:
        i = self._locate(q)
        parts = split_outcomes(self.factors[i], q, basis)
        bit = forced if forced is not None else int(rng.random() >= parts[0][0])
        prob = parts[bit][0]
        if prob < PRUNE:
            raise ImpossibleOutcomeError(f"outcome {bit} on {q} has probability {prob:.3g}")
        rest = collapse(self.factors[i], q, parts[bit])
        if rest.width:
            self.factors[i] = rest
        else:
            del self.factors[i]
        return bit, prob

    def apply(self, p: PauliString) -> None:
        for q, op in p.ops:
            i = self._locate(q)
            self.factors[i] = apply_pauli(self.factors[i], PauliString(((q, op),)))

    def fidelity(self, target: SparseState) -> float:
        idx = sorted({self._locate(q) for q in target.register})
        state = self.factors[idx[0]]
        for i in idx[1:]:
            state = tensor(state, self.factors[i])
        return reduced_fidelity(state, target)


class BroadcastChannel:
    """Delivers each message to both other parties; bits are counted once per message."""

    def __init__(self, parties: Sequence["Party"]):
        self.parties = list(parties)
        self.log: list[ClassicalMessage] = []

    def send(self, msg: ClassicalMessage) -> None:
        sender = next(p for p in self.parties if p.name == msg.sender)
        allowed = {q for q, _ in sender.plan(msg.step)}
        if {q for q, _ in msg.payload} - allowed:
            raise ProtocolViolation(f"{msg.sender} sent bits it did not measure in step {msg.step}")
        self.log.append(msg)
        for p in self.parties:
            if p is not sender:
                p.receive(msg)

    @property
    def total_bits(self) -> int:
        return sum(m.nbits for m in self.log)


class Party:
    def __init__(self, name: str, recipients=RECIPIENTS):
        if name not in PARTIES:
            raise ValueError(f"unknown party {name!r}")
        self.name = name
        self.cnots = [(c, t) for c, t in STEP1_CNOTS if owner(c) == name]
        self._plans = {
            2: [(q, b) for q, b in STEP2_PLAN if owner(q) == name],
            3: [(q, b) for q, b in STEP3_PLAN if owner(q) == name],
        }
        self.incoming = [n for n in recipients.names() if owner(recipients[n][0]) == name]
        self.recipients = recipients
        self.known: dict[str, int] = {}
        self.records: list[MeasurementRecord] = []
        self.inbox: list[ClassicalMessage] = []

    def plan(self, step: int) -> list[tuple[str, str]]:
        return self._plans[step]

    def step1(self, world: QuantumWorld) -> None:
        for c, t in self.cnots:
            world.cnot(c, t)

    def measure(self, world: QuantumWorld, step: int, rng, forced: Mapping[str, int] | None = None) -> ClassicalMessage:
        payload = []
        for q, basis in self.plan(step):
            bit, prob = world.measure(q, basis, rng, None if forced is None else forced[q])
            self.known[q] = bit
            self.records.append(MeasurementRecord(q, basis, bit, step, prob))
            payload.append((q, bit))
        return ClassicalMessage(self.name, step, tuple(payload))

    def receive(self, msg: ClassicalMessage) -> None:
        self.inbox.append(msg)
        self.known.update(msg.payload)

    def correct(self, world: QuantumWorld, strict: bool = True) -> dict[str, PauliString]:
        """Apply table corrections for every payload this party receives.

        With ``strict`` a missing dependency raises ProtocolViolation;
        otherwise the missing bits are taken as 0.
        """
        tables = reference_tables()
        applied = {}
        for name in self.incoming:
            block = next(b for b in BLOCKS if name in b.payloads)
            table = tables[block.number - 1]
            slot = block.payloads.index(name)
            needed = [block.plan[pos][0] for pos in sorted(table.dependencies[slot])]
            missing = [q for q in needed if q not in self.known]
            if missing and strict:
                raise ProtocolViolation(f"{self.name} cannot correct {name} before receiving {missing}")
            bits = "".join(str(self.known.get(q, 0)) for q, _ in block.plan)
            generic = table.lookup(bits)[slot]
            pauli = PauliString(tuple(zip(self.recipients[name], (op for _, op in generic.ops))))
            world.apply(pauli)
            applied[name] = pauli
        return applied


@dataclass(frozen=True)
class Transcript:
    seed: int | None
    messages: tuple[ClassicalMessage, ...]
    total_bits: int
    branch: BranchOutcome
    receivers: Mapping[str, SparseState] = field(default_factory=dict, compare=False)

    @property
    def complete(self) -> bool:
        return (
            len(self.messages) == MESSAGES_PER_RUN
            and self.total_bits == sum(m.nbits for m in self.messages)
            and self.total_bits == BITS_PER_RUN
        )

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "messages": [m.to_json() for m in self.messages],
            "total_bits": self.total_bits,
            "fidelities": list(self.branch.fidelities),
            "branch": self.branch.to_json(),
            "receivers": {n: [list(row) for row in dump(s)] for n, s in self.receivers.items()},
        }


def initial_world(inputs: ProtocolInputs) -> QuantumWorld:
    factors = [bell_like(inputs.payload(n), PAYLOAD_QUBITS[n]) for n in PAYLOAD_NAMES]
    factors += [ghz_state(0, t) for t in CHANNEL_TRIPLES]
    return QuantumWorld(factors)


def run_protocol(
    inputs: ProtocolInputs,
    seed: int | None = 0,
    forced=None,
    drop: tuple[str, int] | None = None,
    strict: bool = True,
) -> Transcript:
    """Execute the protocol once with seeded (or forced) measurement outcomes.

    ``drop=(sender, step)`` suppresses one message; combine with
    ``strict=False`` to let receivers guess the missing bits.
    """
    rng = np.random.default_rng(seed)
    forced_map = None
    if forced is not None:
        forced_map = dict(zip(MEASUREMENT_ORDER, _parse_bits(forced, 18)))
    world = initial_world(inputs)
    parties = [Party(n) for n in PARTIES]
    channel = BroadcastChannel(parties)

    for p in parties:
        p.step1(world)
    for step in (2, 3):
        # all parties finish a step before anyone starts the next one
        for p in parties:
            msg = p.measure(world, step, rng, forced_map)
            if drop != (p.name, step):
                channel.send(msg)

    corrections: dict[str, PauliString] = {}
    for p in parties:
        corrections.update(p.correct(world, strict=strict))

    targets = {n: bell_like(inputs.payload(n), RECIPIENTS[n]) for n in PAYLOAD_NAMES}
    by_qubit = {r.qubit: r for p in parties for r in p.records}
    records = tuple(by_qubit[q] for q in MEASUREMENT_ORDER)
    branch = BranchOutcome(
        records=records,
        probability=math.prod(r.probability for r in records),
        corrections={n: corrections[n] for n in PAYLOAD_NAMES},
        fidelities=tuple(world.fidelity(targets[n]) for n in PAYLOAD_NAMES),
    )
    receivers = {}
    for n in PAYLOAD_NAMES:
        pair = RECIPIENTS[n]
        f = world.factors[world._locate(pair[0])]
        split = try_factor(f, pair)
        if split is not None:
            receivers[n] = split[0]
    return Transcript(seed, tuple(channel.log), channel.total_bits, branch, receivers)


@dataclass
class RunSummary:
    runs: int
    min_fidelity: float
    per_seed_min: dict[int, float]
    ones: dict[str, int]
    bit_totals: Counter
    message_counts: Counter

    def frequencies(self) -> dict[str, float]:
        return {q: c / self.runs for q, c in self.ones.items()}

    def uniform(self, sigmas: float = 3.0) -> bool:
        bound = sigmas * math.sqrt(0.25 / self.runs)
        return all(abs(f - 0.5) <= bound for f in self.frequencies().values())

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "min_fidelity": self.min_fidelity,
            "frequencies": self.frequencies(),
            "total_bits": dict(sorted(self.bit_totals.items())),
            "messages": dict(sorted(self.message_counts.items())),
        }


def run_many(inputs: ProtocolInputs, seeds: Sequence[int]) -> RunSummary:
    if not len(seeds):
        raise ValueError("need at least one seed")
    per_seed = {}
    ones = {q: 0 for q in MEASUREMENT_ORDER}
    bit_totals: Counter = Counter()
    message_counts: Counter = Counter()
    for seed in seeds:
        t = run_protocol(inputs, seed)
        per_seed[seed] = t.branch.min_fidelity
        for r in t.branch.records:
            ones[r.qubit] += r.outcome
        bit_totals[t.total_bits] += 1
        message_counts[len(t.messages)] += 1
    return RunSummary(len(seeds), min(per_seed.values()), per_seed, ones, bit_totals, message_counts)


def message_necessity(inputs: ProtocolInputs) -> dict[tuple[str, int], bool]:
    """For each of the six messages: does dropping it break some branch?

    Every block is driven through all 64 rows of its correction table with
    the message suppressed and receivers guessing 0 for the missing bits.
    """
    out = {}
    for sender in PARTIES:
        for step in (2, 3):
            broken = False
            for row in range(64):
                bits6 = format(row, "06b")
                forced = bits6[:4] * 3 + bits6[4:] * 3
                t = run_protocol(inputs, None, forced=forced, drop=(sender, step), strict=False)
                if t.branch.min_fidelity < 1 - 1e-9:
                    broken = True
                    break
            out[(sender, step)] = broken
    return out
