"""Sparse statevector engine over registers of named qubits.

A ket is stored as an ``int`` whose most significant bit belongs to the
qubit at register index 0, so ``format(ket, "0{n}b")`` prints the ket
left-to-right in register order and integer order equals bitstring order.
States are immutable values: every operation returns a new state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

PRUNE = 1e-12
TOL = 1e-9
_SQRT1_2 = 1 / math.sqrt(2)

# Payload qubits first, channel qubits second, primed after unprimed.
CANONICAL_ORDER: tuple[str, ...] = (
    "A1", "A2", "A'1", "A'2", "B1", "B2", "B'1", "B'2", "C1", "C2", "C'1", "C'2",
    "a1", "a2", "a3", "a'1", "a'2", "a'3",
    "b1", "b2", "b3", "b'1", "b'2", "b'3",
    "c1", "c2", "c3", "c'1", "c'2", "c'3",
)
MAX_QUBITS = len(CANONICAL_ORDER)


class RegisterError(ValueError):
    """Raised for unknown, duplicated or mismatched qubit labels."""


class SparseState:
    """Pure state as a map from basis kets to complex amplitudes."""

    __slots__ = ("_register", "_terms", "_index")

    def __init__(self, register: Sequence[str], terms: Mapping[int, complex]):
        register = tuple(register)
        if len(set(register)) != len(register):
            raise RegisterError(f"duplicate qubits in register {register}")
        if len(register) > MAX_QUBITS:
            raise RegisterError(f"register wider than {MAX_QUBITS} qubits")
        self._register = register
        self._terms = dict(terms)
        self._index = {q: i for i, q in enumerate(register)}

    @property
    def register(self) -> tuple[str, ...]:
        return self._register

    @property
    def width(self) -> int:
        return len(self._register)

    @property
    def terms(self) -> Mapping[int, complex]:
        return MappingProxyType(self._terms)

    def index(self, q: str) -> int:
        try:
            return self._index[q]
        except KeyError:
            raise RegisterError(f"qubit {q!r} not in register {self._register}") from None

    def shift(self, q: str) -> int:
        """Bit shift of qubit ``q`` inside the integer ket encoding."""
        return self.width - 1 - self.index(q)

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self._terms.values())

    def amplitude(self, ket: str | int) -> complex:
        if isinstance(ket, str):
            ket = int(ket, 2) if ket else 0
        return self._terms.get(ket, 0j)

    def ket_string(self, ket: int) -> str:
        return format(ket, f"0{self.width}b") if self.width else ""

    def items(self):
        """(bitstring, amplitude) pairs sorted by ket."""
        return [(self.ket_string(k), self._terms[k]) for k in sorted(self._terms)]

    def __len__(self) -> int:
        return len(self._terms)

    def __repr__(self) -> str:
        body = ", ".join(f"|{k}⟩: {a:.6g}" for k, a in self.items()[:8])
        more = ", ..." if len(self._terms) > 8 else ""
        return f"SparseState({list(self._register)}, {{{body}{more}}})"


def _pruned(terms: Mapping[int, complex]) -> dict[int, complex]:
    return {k: a for k, a in terms.items() if abs(a) >= PRUNE}


def state_from_amplitudes(register: Sequence[str], amplitudes: Mapping[str, complex]) -> SparseState:
    """Build a state from ``{"bitstring": amplitude}``; the input must be normalized."""
    register = tuple(register)
    terms: dict[int, complex] = {}
    for bits, amp in amplitudes.items():
        if len(bits) != len(register) or set(bits) - {"0", "1"}:
            raise RegisterError(f"ket {bits!r} does not fit register of width {len(register)}")
        key = int(bits, 2) if bits else 0
        terms[key] = terms.get(key, 0j) + complex(amp)
    state = SparseState(register, _pruned(terms))
    if abs(state.norm2() - 1) > TOL:
        raise ValueError(f"amplitudes are not normalized (norm^2 = {state.norm2():.12g})")
    return state


def basis_state(register: Sequence[str], ket: str | Sequence[int]) -> SparseState:
    bits = ket if isinstance(ket, str) else "".join(str(int(b)) for b in ket)
    if len(bits) != len(register):
        raise RegisterError(f"ket width {len(bits)} does not match register width {len(register)}")
    return state_from_amplitudes(register, {bits: 1.0})


def empty_state() -> SparseState:
    """Unit state on the empty register, what remains after measuring everything."""
    return SparseState((), {0: 1 + 0j})


def apply_h(state: SparseState, q: str) -> SparseState:
    bit = 1 << state.shift(q)
    out: dict[int, complex] = {}
    for k, a in state.terms.items():
        a = a * _SQRT1_2
        lo = k & ~bit
        out[lo] = out.get(lo, 0j) + a
        out[lo | bit] = out.get(lo | bit, 0j) + (-a if k & bit else a)
    return SparseState(state.register, _pruned(out))


def apply_x(state: SparseState, q: str) -> SparseState:
    bit = 1 << state.shift(q)
    return SparseState(state.register, {k ^ bit: a for k, a in state.terms.items()})


def apply_z(state: SparseState, q: str) -> SparseState:
    bit = 1 << state.shift(q)
    return SparseState(state.register, {k: (-a if k & bit else a) for k, a in state.terms.items()})


def apply_y(state: SparseState, q: str) -> SparseState:
    # Y|0> = i|1>, Y|1> = -i|0>
    bit = 1 << state.shift(q)
    return SparseState(
        state.register, {k ^ bit: (-1j * a if k & bit else 1j * a) for k, a in state.terms.items()}
    )


def apply_cnot(state: SparseState, control: str, target: str) -> SparseState:
    if control == target:
        raise RegisterError("CNOT control and target must differ")
    c = 1 << state.shift(control)
    t = 1 << state.shift(target)
    return SparseState(state.register, {(k ^ t if k & c else k): a for k, a in state.terms.items()})


_PHASES = (1, -1, 1j, -1j)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit Paulis with a global phase in {±1, ±i}."""

    ops: tuple[tuple[str, str], ...]
    phase: complex = 1

    def __post_init__(self):
        if isinstance(self.ops, Mapping):
            object.__setattr__(self, "ops", tuple(self.ops.items()))
        for q, op in self.ops:
            if op not in "IXYZ" or len(op) != 1:
                raise ValueError(f"unknown Pauli {op!r} on {q}")
        if len({q for q, _ in self.ops}) != len(self.ops):
            raise RegisterError("duplicate qubit in Pauli string")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of ±1, ±i, got {self.phase}")

    @classmethod
    def from_label(cls, qubits: Sequence[str], label: str, phase: complex = 1) -> "PauliString":
        letters = label.split(".") if "." in label else list(label)
        if len(letters) != len(qubits):
            raise ValueError(f"label {label!r} does not cover qubits {list(qubits)}")
        return cls(tuple(zip(qubits, letters)), phase)

    @property
    def qubits(self) -> tuple[str, ...]:
        return tuple(q for q, _ in self.ops)

    @property
    def label(self) -> str:
        """Dot-joined operator letters, e.g. ``"X.Z"``."""
        return ".".join(op for _, op in self.ops)

    def is_identity(self) -> bool:
        return all(op == "I" for _, op in self.ops)

    def __str__(self) -> str:
        return self.label


_SINGLE = {"I": None, "X": apply_x, "Y": apply_y, "Z": apply_z}


def apply_pauli(state: SparseState, p: PauliString) -> SparseState:
    for q, op in p.ops:
        state.index(q)
        gate = _SINGLE[op]
        if gate is not None:
            state = gate(state, q)
    if p.phase != 1:
        state = SparseState(state.register, {k: p.phase * a for k, a in state.terms.items()})
    return state


def tensor(s1: SparseState, s2: SparseState) -> SparseState:
    overlap = set(s1.register) & set(s2.register)
    if overlap:
        raise RegisterError(f"registers overlap on {sorted(overlap)}")
    n2 = s2.width
    terms = {(k1 << n2) | k2: a1 * a2 for k1, a1 in s1.terms.items() for k2, a2 in s2.terms.items()}
    return SparseState(s1.register + s2.register, _pruned(terms))


def tensor_all(states: Iterable[SparseState]) -> SparseState:
    out = empty_state()
    for s in states:
        out = tensor(out, s)
    return out


def permute(state: SparseState, new_order: Sequence[str]) -> SparseState:
    new_order = tuple(new_order)
    if sorted(new_order) != sorted(state.register) or len(set(new_order)) != len(new_order):
        raise RegisterError(f"{list(new_order)} is not a permutation of {list(state.register)}")
    if new_order == state.register:
        return state
    n = state.width
    # (source shift, destination shift) for every qubit
    moves = [(state.shift(q), n - 1 - j) for j, q in enumerate(new_order)]
    terms = {}
    for k, a in state.terms.items():
        key = 0
        for src, dst in moves:
            key |= ((k >> src) & 1) << dst
        terms[key] = a
    return SparseState(new_order, terms)


def _remove_bit(k: int, shift: int) -> int:
    return ((k >> (shift + 1)) << shift) | (k & ((1 << shift) - 1))


def split_outcomes(state: SparseState, q: str, basis: str = "Z") -> tuple[tuple[float, dict], tuple[float, dict]]:
    """Unnormalized projections of ``q`` onto outcome 0 and 1, with ``q`` removed."""
    if basis not in ("Z", "X"):
        raise ValueError(f"basis must be 'Z' or 'X', got {basis!r}")
    if basis == "X":
        state = apply_h(state, q)
    shift = state.shift(q)
    parts: tuple[dict, dict] = ({}, {})
    for k, a in state.terms.items():
        parts[(k >> shift) & 1][_remove_bit(k, shift)] = a
    return tuple((sum(abs(a) ** 2 for a in p.values()), p) for p in parts)


def collapse(state: SparseState, q: str, part: tuple[float, dict]) -> SparseState:
    prob, terms = part
    scale = 1 / math.sqrt(prob)
    register = tuple(x for x in state.register if x != q)
    return SparseState(register, _pruned({k: a * scale for k, a in terms.items()}))


def project(state: SparseState, q: str, basis: str, outcome: int) -> tuple[float, SparseState | None]:
    """Measure ``q`` in the Z or X basis and post-select ``outcome``.

    X-basis outcome 0 is |+> and 1 is |->. The measured qubit leaves the
    register. An outcome with probability below the prune threshold gives
    ``(0.0, None)`` instead of a state.
    """
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    part = split_outcomes(state, q, basis)[outcome]
    if part[0] < PRUNE:
        return 0.0, None
    return part[0], collapse(state, q, part)


def inner(s1: SparseState, s2: SparseState) -> complex:
    """<s1|s2>, with ``s2`` reordered to ``s1``'s register."""
    if set(s1.register) != set(s2.register):
        raise RegisterError(f"register mismatch: {list(s1.register)} vs {list(s2.register)}")
    s2 = permute(s2, s1.register)
    small, big = (s1, s2) if len(s1) <= len(s2) else (s2, s1)
    total = sum(a.conjugate() * big.terms.get(k, 0j) for k, a in small.terms.items())
    return total if small is s1 else total.conjugate()


def fidelity(s1: SparseState, s2: SparseState) -> float:
    return abs(inner(s1, s2)) ** 2


def reduced_fidelity(state: SparseState, target: SparseState) -> float:
    """<t|rho|t> where rho is ``state`` reduced to ``target``'s qubits."""
    ordered, n_rest = _split_keys(state, target.register)
    mask = (1 << n_rest) - 1
    overlaps: dict[int, complex] = {}
    for k, a in ordered.terms.items():
        t = target.terms.get(k >> n_rest)
        if t is not None:
            c = k & mask
            overlaps[c] = overlaps.get(c, 0j) + t.conjugate() * a
    return sum(abs(v) ** 2 for v in overlaps.values())


def canonical_phase(state: SparseState) -> SparseState:
    """Rotate the global phase so the first nonzero amplitude is real-positive."""
    if not len(state):
        return state
    key = min(state.terms)
    first = state.terms[key]
    rot = abs(first) / first
    terms = {k: a * rot for k, a in state.terms.items()}
    terms[key] = complex(abs(first))
    return SparseState(state.register, terms)


def normalized(state: SparseState) -> SparseState:
    scale = 1 / math.sqrt(state.norm2())
    return SparseState(state.register, {k: a * scale for k, a in state.terms.items()})


def _split_keys(state: SparseState, subset: Sequence[str]) -> tuple[SparseState, int]:
    subset = tuple(subset)
    if len(set(subset)) != len(subset):
        raise RegisterError("duplicate qubits in subset")
    for q in subset:
        state.index(q)
    rest = tuple(q for q in state.register if q not in subset)
    return permute(state, subset + rest), len(rest)


def try_factor(state: SparseState, subset: Sequence[str]) -> tuple[SparseState, SparseState] | None:
    """Split ``state`` into (subset part) ⊗ (complement part) if it is a product.

    Factors are normalized and phase-canonical; the subset factor keeps the
    order of ``subset`` and the complement keeps register order. Returns
    ``None`` when the two parts are entangled.
    """
    ordered, n_rest = _split_keys(state, subset)
    mask = (1 << n_rest) - 1
    pivot = max(ordered.terms, key=lambda k: (abs(ordered.terms[k]), -k))
    p = ordered.terms[pivot]
    s0, c0 = pivot >> n_rest, pivot & mask
    left: dict[int, complex] = {}
    right: dict[int, complex] = {}
    for k, a in ordered.terms.items():
        s, c = k >> n_rest, k & mask
        if c == c0:
            left[s] = a
        if s == s0:
            right[c] = a / p
    matched = 0
    for k, a in ordered.terms.items():
        s, c = k >> n_rest, k & mask
        if s not in left or c not in right or abs(a - left[s] * right[c]) > TOL:
            return None
        matched += 1
    if matched != len(left) * len(right):
        # products predicted by the factors but absent from the state
        for s, u in left.items():
            for c, v in right.items():
                if ((s << n_rest) | c) not in ordered.terms and abs(u * v) > TOL:
                    return None
    sub = ordered.register[: ordered.width - n_rest]
    rest = ordered.register[ordered.width - n_rest:]
    return (
        canonical_phase(normalized(SparseState(sub, left))),
        canonical_phase(normalized(SparseState(rest, right))),
    )


def to_dense(state: SparseState) -> np.ndarray:
    vec = np.zeros(2 ** state.width, dtype=complex)
    for k, a in state.terms.items():
        vec[k] = a
    return vec


def from_dense(register: Sequence[str], vec: np.ndarray) -> SparseState:
    return SparseState(register, _pruned({int(k): complex(vec[k]) for k in np.flatnonzero(vec)}))


def schmidt_coefficients(state: SparseState, subset: Sequence[str]) -> np.ndarray:
    """Schmidt coefficients across the cut ``subset | rest``, descending, zeros dropped."""
    ordered, n_rest = _split_keys(state, subset)
    mat = to_dense(ordered).reshape(2 ** (ordered.width - n_rest), 2 ** n_rest)
    sv = np.linalg.svd(mat, compute_uv=False)
    return sv[sv > 1e-10]


def dump(state: SparseState) -> list[tuple[str, str, str]]:
    """Golden/debug rendering: (ket, re, im) sorted by ket, 17 significant digits."""
    return [(ket, f"{a.real:.17g}", f"{a.imag:.17g}") for ket, a in state.items()]


def dump_text(state: SparseState) -> str:
    return "\n".join(" ".join(row) for row in dump(state)) + "\n"
