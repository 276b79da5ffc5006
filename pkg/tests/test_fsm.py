import math
import pytest
from collections import Counter

from finsec.exc import FinsecBudgetError, FinsecUsageError, FinsecValidationError
from finsec.fsm.builders import build_dk_discriminator, build_shift_register_fsm
from finsec.fsm.builders import build_toggle_fsm, dk_capacity, shift_register_order
from finsec.fsm.builders import single_state_fsm
from finsec.fsm.counts import CountKind, collect_block_counts, collect_counts
from finsec.fsm.counts import cyclic_start
from finsec.fsm.loader import dump_fsm, load_fsm, parse_fsm
from finsec.fsm.machine import FsmSpec, accepts, count_accepted, run_discriminator
from finsec.fsm.machine import unroll_periodic
from finsec.fsm.sequence import BINARY, BYTE_ALPHABET, SymbolSequence, parse_alphabet
from finsec.fsm.sequence import all_sequences

from .conftest import FIXTURES_PATH, all_binary, random_fsm, seq


def test_alphabets():
    assert parse_alphabet("01") == BINARY
    assert parse_alphabet("bytes") == BYTE_ALPHABET
    with pytest.raises(FinsecValidationError):
        parse_alphabet("")
    with pytest.raises(FinsecValidationError):
        parse_alphabet("00")


def test_sequence_ingestion():
    x = seq("0110")
    assert x.symbols == (0, 1, 1, 0)
    assert x.text == "0110"
    assert SymbolSequence.from_text("01\n10", BINARY, keep_newlines=False).text == "0110"
    with pytest.raises(FinsecValidationError) as exc:
        SymbolSequence.from_text("0120", BINARY)
    assert exc.value.path == "byte[2]"
    raw = SymbolSequence.from_bytes(b"\x00\xff", "bytes")
    assert raw.symbols == (0, 255)
    assert raw.to_bytes() == b"\x00\xff"


def test_all_sequences_shards():
    full = list(all_sequences(BINARY, 4))
    assert len(full) == 16
    assert full[0] == (0, 0, 0, 0)
    assert full[-1] == (1, 1, 1, 1)
    shards = list(all_sequences(BINARY, 4, 0, 7)) + list(all_sequences(BINARY, 4, 7))
    assert shards == full


def test_dk_discriminator_example():
    fsm = build_dk_discriminator(0, 2)
    assert fsm.states == 3
    trace = run_discriminator(fsm, seq("1000"))
    assert not trace.accepted
    assert trace.stop == 3
    assert trace.states == (0, 0, 1, 2)
    trace = run_discriminator(fsm, seq("1111"))
    assert trace.accepted
    assert trace.stop is None
    assert accepts(fsm, (0, 0, 1, 0))
    assert not accepts(fsm, (1, 0, 0, 0))


def test_dk_acceptance_counts():
    fsm = build_dk_discriminator(0, 2)
    assert [count_accepted(fsm, n) for n in range(1, 5)] == [2, 4, 7, 13]
    for d, k in [(0, 1), (1, 3), (0, 2), (2, 4)]:
        fsm = build_dk_discriminator(d, k)
        for n in range(0, 9):
            found = sum(1 for x in all_sequences(BINARY, n) if accepts(fsm, x))
            assert found == count_accepted(fsm, n), (d, k, n)


def test_dk_capacity():
    assert dk_capacity(0, 1) == pytest.approx(0.694242, abs=1e-6)
    assert dk_capacity(0, 2) == pytest.approx(0.879146, abs=1e-6)
    assert dk_capacity(0, 0) == 0.0
    assert dk_capacity(1, 1) == 0.0
    for d, k in [(0, 1), (0, 2)]:
        count = count_accepted(build_dk_discriminator(d, k), 24)
        assert abs(math.log2(count) / 24 - dk_capacity(d, k)) < 0.02
    with pytest.raises(FinsecValidationError):
        dk_capacity(3, 1)


def test_shift_register():
    fsm = build_shift_register_fsm(2, 2)
    assert fsm.states == 4
    assert fsm.walk((0, 1, 1)) == [0, 0, 1, 3]
    assert shift_register_order(fsm) == 2
    assert shift_register_order(build_shift_register_fsm(3, 3)) == 3
    assert shift_register_order(build_toggle_fsm()) is None
    with pytest.raises(FinsecBudgetError):
        build_shift_register_fsm(30, 2)


def test_fsm_validation():
    with pytest.raises(ValueError):
        FsmSpec(alphabet=BINARY, states=2, next_table=(0, 1, 2, 0))
    with pytest.raises(ValueError):
        FsmSpec(alphabet=BINARY, states=2, next_table=(0, 1, 1))
    with pytest.raises(ValueError):
        FsmSpec(
            alphabet=BINARY,
            states=1,
            next_table=(0, 0),
            output_table=(0, 2),
        )


def test_unroll_periodic(rng):
    for period in (2, 3):
        fsm = random_fsm(rng, 3, period=period)
        flat = unroll_periodic(fsm)
        assert flat.is_time_invariant
        assert flat.states == 3 * period
        for n in range(13):
            phases = [i % period for i in range(n + 1)]
            for x in all_binary(n):
                states = fsm.walk(x.symbols)
                unrolled = flat.walk(x.symbols)
                assert [u % fsm.states for u in unrolled] == states
                assert [u // fsm.states for u in unrolled] == phases


def test_symbol_state_counts():
    counts = collect_counts(single_state_fsm(BINARY), seq("0110"))
    assert counts.kind == CountKind.SYMBOL_STATE
    assert counts.counts == {(0, 0): 2, (1, 0): 2}
    assert counts.total == 4
    assert counts.domain_size() == 2
    counts = collect_counts(build_toggle_fsm(), seq("0110"))
    assert counts.counts == {(0, 0): 1, (1, 1): 1, (1, 0): 1, (0, 1): 1}
    assert counts.state_marginal() == {0: 2, 1: 2}


def test_cyclic_counts():
    fsm = build_shift_register_fsm(1, 2)
    counts = collect_counts(fsm, seq("0110"), cyclic=True)
    assert counts.counts == {(0, 0): 1, (1, 0): 1, (1, 1): 1, (0, 1): 1}
    assert counts.laps == 1
    assert cyclic_start(fsm, seq("0111")) == (1, 1)
    toggle = build_toggle_fsm()
    counts = collect_counts(toggle, seq("010"), cyclic=True)
    assert counts.laps == 2
    assert counts.total == 6


def test_block_counts():
    fsm = build_toggle_fsm()
    counts = collect_block_counts(fsm, seq("011011"), 3)
    assert counts.kind == CountKind.BLOCK
    assert counts.counts == {(0, 1, (0, 1, 1)): 1, (1, 0, (0, 1, 1)): 1}
    assert counts.is_consistent(fsm)
    assert counts.block_marginal() == {(0, 1, 1): 2}
    with pytest.raises(FinsecValidationError):
        collect_block_counts(fsm, seq("01101"), 3)


def test_si_counts():
    fsm = load_fsm(FIXTURES_PATH / "si_fsm.yml")
    assert fsm.beta == 2
    x = seq("0110")
    y = SymbolSequence.from_text("abba", fsm.si_alphabet)
    counts = collect_counts(fsm, x, y)
    assert counts.kind == CountKind.SI_SYMBOL_STATE
    assert counts.total == 4
    with pytest.raises(FinsecValidationError):
        collect_counts(fsm, x)


def test_load_fsm():
    fsm = load_fsm(FIXTURES_PATH / "dk02.yml")
    ref = build_dk_discriminator(0, 2)
    assert fsm.next_table == ref.next_table
    assert fsm.output_table == ref.output_table
    toggle = load_fsm(FIXTURES_PATH / "toggle.json")
    assert toggle.next_table == build_toggle_fsm().next_table
    with pytest.raises(FinsecValidationError) as exc:
        load_fsm(FIXTURES_PATH / "bad_fsm.json")
    assert exc.value.path == "next[1][0]"
    with pytest.raises(FinsecValidationError):
        load_fsm(FIXTURES_PATH / "missing.json")


def test_dump_fsm(rng):
    for fsm in [
        build_dk_discriminator(1, 3),
        load_fsm(FIXTURES_PATH / "si_fsm.yml"),
        random_fsm(rng, 3, period=3),
        random_fsm(rng, 2, alphabet="abc", output=True),
    ]:
        assert parse_fsm(dump_fsm(fsm)) == fsm


def test_symbol_count_conservation(rng):
    for s in (2, 3, 4):
        fsm = random_fsm(rng, s)
        for n in range(1, 9):
            for x in all_binary(n):
                states = fsm.walk(x.symbols)
                counts = collect_counts(fsm, x)
                assert counts.total == n == counts.expected_total
                assert counts.state_marginal() == dict(Counter(states[:-1]))
                assert counts.symbol_marginal() == dict(Counter(x.symbols))
                cyclic = collect_counts(fsm, x, cyclic=True)
                assert cyclic.total == cyclic.laps * n == cyclic.expected_total
                assert 1 <= cyclic.laps <= s


def test_block_count_conservation(rng):
    for s in (2, 3):
        fsm = random_fsm(rng, s)
        for block in (1, 2, 3):
            for x in all_binary(6):
                states = fsm.walk(x.symbols)
                counts = collect_block_counts(fsm, x, block)
                assert counts.total == 6 // block == counts.expected_total
                pairs = [(states[i], states[i + block]) for i in range(0, 6, block)]
                assert counts.pair_marginal() == dict(Counter(pairs))
                blocks = [x.symbols[i : i + block] for i in range(0, 6, block)]
                assert counts.block_marginal() == dict(Counter(blocks))
                assert counts.is_consistent(fsm)


def test_walk_and_counts_are_deterministic(rng):
    fsm = random_fsm(rng, 4)
    for x in all_binary(8):
        states = fsm.walk(x.symbols)
        assert fsm.walk(x.symbols) == states
        head, tail = x.symbols[:3], x.symbols[3:]
        joined = fsm.walk(head) + fsm.walk(tail, start=fsm.walk(head)[-1])[1:]
        assert joined == states
        assert collect_counts(fsm, x) == collect_counts(fsm, x)
        assert collect_counts(fsm, x, cyclic=True) == collect_counts(fsm, x, cyclic=True)


def test_count_tables_merge(rng):
    for s in (1, 2, 3):
        fsm = random_fsm(rng, s)
        for x in all_binary(8):
            head = SymbolSequence(BINARY, x.symbols[:5])
            tail = SymbolSequence(BINARY, x.symbols[5:])
            first = collect_counts(fsm, head)
            end = fsm.walk(head.symbols)[-1]
            second = collect_counts(fsm, tail, start=end)
            merged = first.merge(second)
            assert merged == collect_counts(fsm, x)
            assert merged.n == 8
            assert second.merge(first).counts == merged.counts


def test_count_tables_merge_errors():
    fsm = build_toggle_fsm()
    table = collect_counts(fsm, seq("0110"))
    with pytest.raises(FinsecUsageError):
        table.merge(collect_counts(single_state_fsm(BINARY), seq("0110")))
    with pytest.raises(FinsecUsageError):
        table.merge(collect_block_counts(fsm, seq("0110"), 2))
    with pytest.raises(FinsecUsageError):
        table.merge(collect_counts(fsm, seq("010"), cyclic=True))
    with pytest.raises(FinsecUsageError):
        collect_counts(fsm, seq("010"), cyclic=True, start=1)
    with pytest.raises(FinsecValidationError):
        collect_counts(fsm, seq("010"), start=2)


def test_cyclic_laps_merge():
    toggle = build_toggle_fsm()
    x = seq("010")
    counts = collect_counts(toggle, x, cyclic=True)
    first, laps = cyclic_start(toggle, x)
    assert laps == 2
    end = toggle.walk(x.symbols, start=first)[-1]
    laps_sum = collect_counts(toggle, x, start=first).merge(
        collect_counts(toggle, x, start=end)
    )
    assert counts.counts == laps_sum.counts
    assert counts.n == 3
    assert counts.cyclic
