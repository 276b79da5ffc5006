import pytest

from finsec.exc import FinsecIntegrityError
from finsec.util import bits_to_hex, bits_to_int, ceil_log2, entropy_of_counts
from finsec.util import hex_to_bits, int_to_bits, xlog2x, xor_bits


def test_ceil_log2():
    assert [ceil_log2(v) for v in range(7)] == [0, 0, 1, 2, 2, 3, 3]
    assert ceil_log2(2**20) == 20
    assert ceil_log2(2**20 + 1) == 21


def test_int_bits():
    assert int_to_bits(5, 4) == "0101"
    assert int_to_bits(0, 0) == ""
    assert bits_to_int("0101") == 5
    assert bits_to_int("") == 0
    with pytest.raises(FinsecIntegrityError):
        int_to_bits(16, 4)
    with pytest.raises(FinsecIntegrityError):
        int_to_bits(-1, 4)


def test_xor_bits():
    assert xor_bits("1111", "1111") == "0000"
    assert xor_bits("1010", "0000") == "1010"
    assert xor_bits("", "") == ""
    with pytest.raises(FinsecIntegrityError):
        xor_bits("10", "1")


def test_hex_rendering():
    assert bits_to_hex("") == "0:"
    assert bits_to_hex("1") == "1:80"
    assert bits_to_hex("0000") == "4:00"
    assert bits_to_hex("111100001") == "9:f080"
    assert hex_to_bits("9:f080") == "111100001"
    with pytest.raises(FinsecIntegrityError):
        hex_to_bits("1:c0")
    with pytest.raises(FinsecIntegrityError):
        hex_to_bits("16:ff")
    with pytest.raises(FinsecIntegrityError):
        hex_to_bits("banana")


def test_entropy_helpers():
    assert xlog2x(0) == 0.0
    assert xlog2x(4) == 8.0
    assert entropy_of_counts([1, 1]) == pytest.approx(1.0)
    assert entropy_of_counts([4]) == 0.0
    assert entropy_of_counts([]) == 0.0
    assert entropy_of_counts([1, 3]) == pytest.approx(0.811278, abs=1e-6)
