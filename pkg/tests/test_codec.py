import pytest

from finsec.codec import CodeKind, decode_header, header_length, split_codeword
from finsec.codec import two_part_decode, two_part_encode, two_part_length_estimate
from finsec.codec import TwoPartCodeword, describe_for, rank_in_type_class
from finsec.codec import unrank_in_type_class
from finsec.exc import FinsecIntegrityError, FinsecUsageError
from finsec.fsm.builders import build_shift_register_fsm, build_toggle_fsm
from finsec.fsm.builders import single_state_fsm
from finsec.fsm.loader import load_fsm
from finsec.fsm.sequence import BINARY, SymbolSequence
from finsec.typeclass import class_index, describe
from finsec.util import ceil_log2

from .conftest import FIXTURES_PATH, all_binary, random_fsm, seq


def test_memoryless_codeword():
    fsm = single_state_fsm(BINARY)
    cw = two_part_encode(fsm, CodeKind.SYMBOL_STATE, seq("0110"))
    assert cw.header == "010"
    assert cw.payload == "010"
    assert cw.rank == 2
    assert cw.size == 6
    assert cw.declared_length == 6
    assert cw.to_hex() == "6:48"
    assert header_length(fsm, CodeKind.SYMBOL_STATE, 4) == 3
    assert two_part_decode(fsm, CodeKind.SYMBOL_STATE, cw) == seq("0110")


def test_split_codeword():
    fsm = single_state_fsm(BINARY)
    cw = split_codeword(fsm, CodeKind.SYMBOL_STATE, 4, "010010")
    assert cw.header == "010"
    assert cw.rank == 2
    assert cw.size == 6
    with pytest.raises(FinsecIntegrityError):
        split_codeword(fsm, CodeKind.SYMBOL_STATE, 4, "01")


def test_decode_header():
    fsm = single_state_fsm(BINARY)
    counts = decode_header(fsm, CodeKind.SYMBOL_STATE, 4, "011")
    assert counts.counts == {(0, 0): 3, (1, 0): 1}
    with pytest.raises(FinsecIntegrityError):
        decode_header(fsm, CodeKind.SYMBOL_STATE, 4, "101")
    with pytest.raises(FinsecIntegrityError):
        decode_header(fsm, CodeKind.SYMBOL_STATE, 4, "0101")


def test_corrupt_payload():
    fsm = single_state_fsm(BINARY)
    kind = CodeKind.SYMBOL_STATE
    bad_rank = TwoPartCodeword(kind, 4, "010", "111", 7, 6)
    with pytest.raises(FinsecIntegrityError):
        two_part_decode(fsm, kind, bad_rank)
    short = TwoPartCodeword(kind, 4, "010", "01", 1, 6)
    with pytest.raises(FinsecIntegrityError):
        two_part_decode(fsm, kind, short)


def test_kind_checks():
    x = seq("0110")
    with pytest.raises(FinsecUsageError):
        two_part_encode(build_toggle_fsm(), CodeKind.MARKOV, x)
    with pytest.raises(FinsecUsageError):
        two_part_encode(build_toggle_fsm(), CodeKind.SI_SYMBOL_STATE, x)
    with pytest.raises(FinsecUsageError):
        two_part_encode(build_toggle_fsm(), CodeKind.SYMBOL_STATE, x, x)
    with pytest.raises(FinsecUsageError):
        two_part_encode(build_toggle_fsm(), CodeKind.SYMBOL_STATE, x, block=2)


def test_roundtrip_kinds(rng):
    x = seq("0110100110010110")
    cases = [
        (build_toggle_fsm(), CodeKind.SYMBOL_STATE, None, 1),
        (random_fsm(rng, 3), CodeKind.SYMBOL_STATE, None, 1),
        (build_toggle_fsm(), CodeKind.BLOCK, None, 4),
        (random_fsm(rng, 2, period=2), CodeKind.BLOCK, None, 2),
        (build_shift_register_fsm(2, 2), CodeKind.MARKOV, None, 1),
    ]
    for fsm, kind, y, block in cases:
        cw = two_part_encode(fsm, kind, x, y, block)
        assert len(cw.header) == header_length(fsm, kind, len(x), block)
        assert len(cw.payload) == ceil_log2(cw.size)
        assert two_part_decode(fsm, kind, cw, y) == x
        again = split_codeword(fsm, kind, len(x), cw.bits, y, block)
        assert again.rank == cw.rank


def test_roundtrip_side_information():
    fsm = load_fsm(FIXTURES_PATH / "si_fsm.yml")
    x = seq("01101001")
    y = SymbolSequence.from_text("aabbabab", fsm.si_alphabet)
    for kind, block in [(CodeKind.SI_SYMBOL_STATE, 1), (CodeKind.SI_BLOCK, 4)]:
        cw = two_part_encode(fsm, kind, x, y, block)
        assert two_part_decode(fsm, kind, cw, y) == x
    with pytest.raises(FinsecUsageError):
        two_part_decode(fsm, CodeKind.SI_SYMBOL_STATE, cw)


def test_length_estimate():
    x = seq("0110")
    assert two_part_length_estimate(x) == pytest.approx(5.0)
    assert two_part_length_estimate(seq("")) == 0.0
    toggle = two_part_length_estimate(x, fsm=build_toggle_fsm())
    assert toggle == pytest.approx(4.0 + 2.0)
    block = two_part_length_estimate(x, CodeKind.BLOCK, block=2)
    assert block == pytest.approx(2 * 1.0 + 1.5)
    markov = two_part_length_estimate(x, CodeKind.MARKOV, order=1)
    assert markov == pytest.approx(4.0 + 1.0)
    with pytest.raises(FinsecUsageError):
        two_part_length_estimate(x, CodeKind.SI_BLOCK, block=2)


def test_rank_wrappers():
    x = seq("01101001")
    desc = describe(build_toggle_fsm(), x)
    rank = rank_in_type_class(desc, x)
    assert unrank_in_type_class(desc, rank) == x
    assert unrank_in_type_class(desc, 0).symbols < x.symbols or rank == 0


def _exhaustive_cases():
    si_fsm = load_fsm(FIXTURES_PATH / "si_fsm.yml")
    for n in range(1, 13):
        si = tuple((i * 5 // 3) % 2 for i in range(n))
        y = SymbolSequence(si_fsm.si_alphabet, si)
        yield n, single_state_fsm(BINARY), CodeKind.SYMBOL_STATE, None, 1
        yield n, build_toggle_fsm(), CodeKind.SYMBOL_STATE, None, 1
        yield n, build_shift_register_fsm(1, 2), CodeKind.MARKOV, None, 1
        yield n, si_fsm, CodeKind.SI_SYMBOL_STATE, y, 1
        for block in (2, 3):
            if n % block == 0:
                yield n, build_toggle_fsm(), CodeKind.BLOCK, None, block
                yield n, si_fsm, CodeKind.SI_BLOCK, y, block


def test_rank_unrank_bijection_exhaustive():
    for n, fsm, kind, y, block in _exhaustive_cases():
        classes = {}
        for x in all_binary(n):
            desc = describe_for(fsm, kind, x, y, block)
            key = (tuple(sorted(desc.counts.counts.items())), desc.counts.laps)
            classes.setdefault(key, (desc, []))[1].append(x)
        for desc, members in classes.values():
            index = class_index(desc)
            assert index.size == len(members)
            ranks = [index.rank(x.symbols) for x in members]
            assert sorted(ranks) == list(range(index.size)), (kind, n)
            for x, rank in zip(members, ranks):
                assert index.unrank(rank) == x.symbols
            x = members[-1]
            rank = rank_in_type_class(desc, x)
            assert unrank_in_type_class(desc, rank) == x


def test_two_part_roundtrip_exhaustive():
    for n, fsm, kind, y, block in _exhaustive_cases():
        for x in all_binary(n):
            cw = two_part_encode(fsm, kind, x, y, block)
            assert len(cw.header) == header_length(fsm, kind, n, block)
            assert len(cw.payload) == ceil_log2(cw.size)
            assert two_part_decode(fsm, kind, cw, y) == x, (kind, x.text)
