import dataclasses
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cyclic_teleport.basis import BellLikeState, ImpossibleOutcomeError, ghz_state
from cyclic_teleport.engine import (
    canonical_phase,
    fidelity,
    permute,
    state_from_amplitudes,
    to_dense,
    try_factor,
)
from cyclic_teleport.protocol import (
    BLOCKS,
    MEASUREMENT_ORDER,
    PAYLOAD_NAMES,
    RECIPIENTS,
    ChannelSpec,
    InputError,
    ProtocolInputs,
    assemble_global,
    block_outcomes,
    block_state,
    build_channel,
    combine,
    correction_table,
    enumerate_branches,
    get_block,
    measure_sequence,
    reference_tables,
    run_block_branch,
    run_branch,
    step1_cnots,
    step2_measure,
    step3_measure,
)
from dense_oracle import DenseState

R = 1 / math.sqrt(2)
ONE = BellLikeState(1, 0)
GOLDEN_KETS = ("000000", "001101", "110010", "111111")


def generic(seed):
    return ProtocolInputs.random(np.random.default_rng(seed))


def block_qubit_sets():
    return [set(b.qubits) for b in BLOCKS]


# --- channel and assembly ---------------------------------------------------

def test_channel_terms():
    ch = build_channel()
    assert len(ch) == 64
    assert all(abs(a - 1 / 8) < 1e-15 for _, a in ch.items())


def test_channel_factors_into_ghz_triples():
    ch = build_channel()
    for triple in ChannelSpec().triples:
        split = try_factor(ch, triple)
        assert split is not None
        assert abs(fidelity(split[0], ghz_state(0, triple)) - 1) < 1e-12


def test_channel_spec_validation():
    with pytest.raises(ValueError):
        ChannelSpec((("a1", "b2", "b3"),) * 6)


def test_assemble_term_counts():
    assert len(assemble_global(ProtocolInputs.uniform(ONE), build_channel())) == 64
    assert len(assemble_global(generic(1), build_channel())) == 4096


def test_assemble_factors_into_three_blocks():
    s = assemble_global(generic(2), build_channel())
    for qubits in block_qubit_sets():
        assert try_factor(s, sorted(qubits)) is not None
    assert abs(s.norm2() - 1) < 1e-9


def test_step1_trivial_and_involution():
    s = assemble_global(ProtocolInputs.uniform(ONE), build_channel())
    assert step1_cnots(s).items() == s.items()
    g = assemble_global(generic(3), build_channel())
    twice = step1_cnots(step1_cnots(g))
    assert abs(fidelity(twice, g) - 1) < 1e-12


def test_step1_block1_coefficient_families():
    inputs = generic(4)
    a, m = inputs.alpha, inputs.mu
    s = block_state(inputs, BLOCKS[0])
    # after the CNOTs, each payload ket pattern on (A1 A2 B1 B2) carries the product coefficient
    for (i, p), (j, q) in itertools.product(enumerate((a.a0, a.a1)), enumerate((m.a0, m.a1))):
        weight = sum(abs(amp) ** 2 for ket, amp in s.items()
                     if ket[0:2] == str(i) * 2 and ket[2:4] == str(j) * 2)
        assert abs(weight - abs(p * q) ** 2) < 1e-12


# --- measurement steps ------------------------------------------------------

def test_step2_step3_probabilities():
    inputs = generic(5)
    s = step1_cnots(assemble_global(inputs, build_channel()))
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, 12)
    s2, rec2 = step2_measure(s, bits)
    assert len(s2.register) == 18
    assert abs(math.prod(r.probability for r in rec2) - 2.0 ** -12) < 1e-12
    s3, rec3 = step3_measure(s2, rng.integers(0, 2, 6))
    assert len(s3.register) == 12
    assert abs(math.prod(r.probability for r in rec3) - 2.0 ** -6) < 1e-12


def test_record_bases_per_step():
    o = run_branch(generic(6), "0" * 18)
    z = {"a1", "b1", "b'1", "c1", "c'1", "a'1"}
    for r in o.records:
        if r.step == 2 and r.basis == "Z":
            assert r.qubit in z
        elif r.step == 2:
            assert r.qubit in {"A1", "B1", "B'1", "C1", "C'1", "A'1"}
        else:
            assert r.qubit in {"A2", "B2", "B'2", "C2", "C'2", "A'2"} and r.basis == "X"
    assert tuple(r.qubit for r in o.records) == MEASUREMENT_ORDER


def test_step2_with_trivial_payloads_gives_basis_state():
    s = step1_cnots(assemble_global(ProtocolInputs.uniform(ONE), build_channel()))
    s2, _ = step2_measure(s, "0" * 12)
    # X outcomes on payload qubits leave only signs, the Z side is a single ket
    assert len(s2) == 1


def test_forced_inputs_validated():
    s = block_state(generic(7), BLOCKS[0])
    with pytest.raises(ValueError):
        measure_sequence(s, BLOCKS[0].step2, 2, "01")
    with pytest.raises(ValueError):
        measure_sequence(s, BLOCKS[0].step2, 2)


def test_impossible_outcome_signalled():
    s = step1_cnots(assemble_global(ProtocolInputs.uniform(ONE), build_channel()))
    s2, _ = step2_measure(s, "0" * 12)
    # payloads (1,0) leave A2 in |0>, so its Z outcome 1 is impossible
    with pytest.raises(ImpossibleOutcomeError):
        measure_sequence(s2, (("A2", "Z"),), 3, "1")


# --- golden all-(0,+) trace -------------------------------------------------

@pytest.mark.parametrize("block", BLOCKS, ids=lambda b: f"block{b.number}")
def test_golden_step2_term_lists(block):
    inputs = generic(8)
    p, q = (inputs.payload(n) for n in block.payloads)
    s, rec = measure_sequence(block_state(inputs, block), block.step2, 2, "0000")
    assert abs(math.prod(r.probability for r in rec) - 1 / 16) < 1e-12
    s = permute(s, block.golden_order)
    expected = dict(zip(GOLDEN_KETS, (p.a0 * q.a0, p.a0 * q.a1, p.a1 * q.a0, p.a1 * q.a1)))
    assert len(s) == 4
    s, ref = canonical_phase(s), canonical_phase(state_from_amplitudes(block.golden_order, expected))
    for ket, amp in ref.items():
        assert abs(s.amplitude(ket) - amp) < 1e-10


def test_golden_step2_full_register_factors():
    inputs = generic(9)
    s = step1_cnots(assemble_global(inputs, build_channel()))
    s2, _ = step2_measure(s, "0" * 12)
    for block in BLOCKS:
        split = try_factor(s2, block.golden_order)
        assert split is not None
        p, q = (inputs.payload(n) for n in block.payloads)
        ref = state_from_amplitudes(block.golden_order, dict(zip(GOLDEN_KETS, (
            p.a0 * q.a0, p.a0 * q.a1, p.a1 * q.a0, p.a1 * q.a1))))
        assert abs(fidelity(split[0], ref) - 1) < 1e-10


def test_golden_step3_six_factor_product():
    inputs = generic(10)
    s = step1_cnots(assemble_global(inputs, build_channel()))
    s, _ = step2_measure(s, "0" * 12)
    s, _ = step3_measure(s, "0" * 6)
    for name in PAYLOAD_NAMES:
        pair = RECIPIENTS[name]
        split = try_factor(s, pair)
        assert split is not None
        p = inputs.payload(name)
        got = permute(split[0], pair)
        ref = canonical_phase(state_from_amplitudes(pair, {"00": p.a0, "11": p.a1}))
        assert len(got) == 2
        for ket, amp in ref.items():
            assert abs(got.amplitude(ket) - amp) < 1e-10


def test_golden_branch_identity_corrections():
    o = run_branch(generic(11), "0" * 18)
    assert all(p.is_identity() for p in o.corrections.values())
    assert all(abs(f - 1) < 1e-9 for f in o.fidelities)
    assert abs(o.probability - 2.0 ** -18) < 1e-12


# --- corrections ------------------------------------------------------------

def test_single_bit_corrections():
    inputs = generic(12)
    block = BLOCKS[0]
    # bit order within block 1: a1, A1, b1, B1, A2, B2
    assert run_block_branch(inputs, block, "100000").corrections["alpha"].label == "X.X"
    assert run_block_branch(inputs, block, "010000").corrections["alpha"].label == "I.Z"


def test_full_run_matches_block_run():
    inputs = generic(13)
    full = run_branch(inputs, "1" + "0" * 17)
    assert full.corrections["alpha"].label == "X.X"
    assert {n: p.label for n, p in full.corrections.items() if n != "alpha"} == {
        n: "I.I" for n in PAYLOAD_NAMES if n != "alpha"}


def test_run_branch_matches_synthesized_branches():
    inputs = generic(14)
    per_block = [block_outcomes(inputs, b) for b in BLOCKS]
    rng = np.random.default_rng(1)
    for _ in range(12):
        idx = rng.integers(0, 64, 3)
        synth = combine([per_block[i][j] for i, j in enumerate(idx)])
        real = run_branch(inputs, synth.bits)
        assert real.bits == synth.bits
        assert {n: p.label for n, p in real.corrections.items()} == {
            n: p.label for n, p in synth.corrections.items()}
        assert abs(real.probability - synth.probability) < 1e-15
        assert min(real.fidelities) > 1 - 1e-9


def test_trivial_payloads_receivers_end_in_00():
    inputs = ProtocolInputs.uniform(ONE)
    rng = np.random.default_rng(2)
    for _ in range(5):
        o = run_branch(inputs, rng.integers(0, 2, 18))
        assert min(o.fidelities) > 1 - 1e-9


# --- dense oracle cross-check -----------------------------------------------

def dense_block(inputs, block, bits):
    """Independent dense 10-qubit simulation of one block branch."""
    labels = []
    vec = np.array([1.0 + 0j])
    for name in block.payloads:
        p = inputs.payload(name)
        labels += list(PAYLOADS_OF[name])
        vec = np.kron(vec, np.array([p.a0, 0, 0, p.a1]))
    for t in block.triples:
        labels += list(t)
        vec = np.kron(vec, np.array([R, 0, 0, 0, 0, 0, 0, R]))
    d = DenseState(labels, vec)
    for c, t in block.cnots:
        d = d.cnot(c, t)
    prob = 1.0
    for (q, basis), b in zip(block.plan, bits):
        p, d = d.project(q, basis, b)
        prob *= p
    return prob, d


PAYLOADS_OF = {"alpha": ("A1", "A2"), "mu": ("B1", "B2"), "nu": ("B'1", "B'2"),
               "gamma": ("C1", "C2"), "lambda": ("C'1", "C'2"), "beta": ("A'1", "A'2")}


@pytest.mark.parametrize("block", BLOCKS, ids=lambda b: f"block{b.number}")
def test_block_matches_dense_oracle(block):
    inputs = generic(15)
    prepared = block_state(inputs, block)
    for bits in itertools.product((0, 1), repeat=6):
        prob, d = dense_block(inputs, block, bits)
        s, rec = measure_sequence(prepared, block.step2, 2, bits[:4])
        s, rec3 = measure_sequence(s, block.step3, 3, bits[4:])
        assert abs(prob - math.prod(r.probability for r in rec + rec3)) < 1e-12
        assert abs(prob - 2.0 ** -6) < 1e-12
        ref = d.permute(list(s.register)).vec
        assert abs(abs(np.vdot(ref, to_dense(s))) - 1) < 1e-10


# --- enumeration / tables ---------------------------------------------------

def test_block_scope_enumeration():
    outs = list(enumerate_branches(generic(16), 2))
    assert len(outs) == 64
    assert abs(sum(o.probability for o in outs) - 1) < 1e-9
    assert len({o.bits for o in outs}) == 64


def test_get_block_validation():
    with pytest.raises(ValueError):
        get_block(4)


def test_correction_table_shape_and_golden_row():
    for n, t in enumerate(reference_tables(), 1):
        assert len(t.rows) == 64 and t.block.number == n
        assert [p.label for p in t.lookup("000000")] == ["I.I", "I.I"]
        for _, p1, p2 in t.rows:
            assert p1.phase == 1 and p2.phase == 1
        assert t.to_csv().splitlines()[0] == "bits,payload_1_correction,payload_2_correction"


def test_correction_table_payload_independent():
    for block in (1, 2, 3):
        assert correction_table(generic(17), block).labels() == correction_table(generic(18), block).labels()


def test_correction_dependencies():
    t = reference_tables()[0]
    # alpha on (b2,b3) depends on a1, A1, A2; mu on (a2,a3) on b1, B1, B2
    assert t.dependencies == (frozenset({0, 1, 4}), frozenset({2, 3, 5}))


@pytest.mark.parametrize("p", [BellLikeState(1, 0), BellLikeState(0, 1), BellLikeState(R, R)])
def test_correction_table_rejects_degenerate(p):
    inputs = dataclasses.replace(generic(19), alpha=p)
    with pytest.raises(InputError):
        correction_table(inputs, 1)


# --- JSON inputs ------------------------------------------------------------

def test_inputs_json_roundtrip():
    inputs = generic(20)
    back = ProtocolInputs.from_json(inputs.to_json())
    for name in PAYLOAD_NAMES:
        assert back.payload(name) == inputs.payload(name)


def test_inputs_json_errors_name_payload():
    obj = ProtocolInputs.default().to_json()
    obj["bob"][1] = [[1, 0], [1, 0]]
    with pytest.raises(InputError, match=r"bob\[1\] \(nu\)"):
        ProtocolInputs.from_json(obj)
    obj["bob"][1] = "junk"
    with pytest.raises(InputError, match="nu"):
        ProtocolInputs.from_json(obj)
    with pytest.raises(InputError, match="charlie"):
        ProtocolInputs.from_json({k: v for k, v in ProtocolInputs.default().to_json().items() if k != "charlie"})


def test_default_inputs_match_listed_values():
    d = ProtocolInputs.default()
    assert (d.alpha.a0, d.alpha.a1) == (0.6, 0.8)
    assert d.mu.degenerate and not d.generic


# --- invariants -------------------------------------------------------------

payload_seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=100, deadline=None)
@given(payload_seeds, st.integers(0, 63))
def test_every_measurement_is_fair(seed, idx):
    inputs = generic(seed)
    bits = format(idx, "06b")
    for block in BLOCKS:
        o = run_block_branch(inputs, block, bits)
        assert all(abs(r.probability - 0.5) < 1e-12 for r in o.records)


@settings(max_examples=25, deadline=None)
@given(payload_seeds, st.integers(0, 63))
def test_block_independence_through_steps(seed, idx):
    inputs = generic(seed)
    bits = format(idx, "06b") * 3
    s = step1_cnots(assemble_global(inputs, build_channel()))
    for qubits in block_qubit_sets():
        assert try_factor(s, sorted(qubits)) is not None
    s, _ = step2_measure(s, bits[:4] + bits[6:10] + bits[12:16])
    for block in BLOCKS:
        assert try_factor(s, block.golden_order) is not None
    s, _ = step3_measure(s, bits[4:6] + bits[10:12] + bits[16:18])
    for block in BLOCKS:
        assert try_factor(s, block.receivers()) is not None


@settings(max_examples=40, deadline=None)
@given(payload_seeds, st.integers(0, 63), st.sampled_from(BLOCKS))
def test_amplitude_transport(seed, idx, block):
    from cyclic_teleport.protocol import apply_corrections, derive_corrections

    inputs = generic(seed)
    s, _ = measure_sequence(block_state(inputs, block), block.plan, 2, format(idx, "06b"))
    s = apply_corrections(s, derive_corrections(s, inputs, names=block.payloads))
    for name in block.payloads:
        pair = RECIPIENTS[name]
        got = permute(try_factor(s, pair)[0], pair)
        p = inputs.payload(name)
        ref = canonical_phase(state_from_amplitudes(pair, {"00": p.a0, "11": p.a1}))
        for ket, amp in ref.items():
            assert abs(got.amplitude(ket) - amp) < 1e-9


@settings(max_examples=10, deadline=None)
@given(payload_seeds)
def test_corrections_payload_independent_property(seed):
    inputs = generic(seed)
    if not inputs.generic:
        return
    for n, ref in enumerate(reference_tables(), 1):
        assert correction_table(inputs, n).labels() == ref.labels()


@settings(max_examples=10, deadline=None)
@given(payload_seeds, st.sampled_from(BLOCKS))
def test_faithful_on_every_block_branch(seed, block):
    for o in block_outcomes(generic(seed), block):
        assert min(o.fidelities) > 1 - 1e-9
        assert abs(o.probability - 2.0 ** -6) < 1e-12
