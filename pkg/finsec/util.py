import math
import numpy as np
from typing import Iterable

from finsec.exc import FinsecIntegrityError

# Bit strings are plain strings over "0" and "1", most significant bit first.
Bits = str


def ceil_log2(value: int) -> int:
    """Width in bits needed to address `value` distinct items (0 for 0 or 1)."""
    if value <= 1:
        return 0
    return (value - 1).bit_length()


def int_to_bits(value: int, width: int) -> Bits:
    if value < 0 or value >= (1 << width):
        raise FinsecIntegrityError(f"Value {value} does not fit in {width} bits")
    if width == 0:
        return ""
    return format(value, f"0{width}b")


def bits_to_int(bits: Bits) -> int:
    if not len(bits):
        return 0
    return int(bits, 2)


def check_bits(bits: Bits) -> Bits:
    if any(b not in "01" for b in bits):
        raise FinsecIntegrityError("Bit string contains symbols other than 0/1")
    return bits


def xor_bits(bits: Bits, key: Bits) -> Bits:
    if len(bits) != len(key):
        raise FinsecIntegrityError(
            f"Pad length mismatch: {len(bits)} payload bits, {len(key)} key bits"
        )
    if not len(bits):
        return ""
    return int_to_bits(bits_to_int(bits) ^ bits_to_int(key), len(bits))


def bits_to_hex(bits: Bits) -> str:
    """Length-prefixed hex rendering: `<bit length>:<hex>`, the bits padded
    with zeroes on the right to whole bytes."""
    check_bits(bits)
    if not len(bits):
        return "0:"
    pad = (-len(bits)) % 8
    padded = bits + "0" * pad
    data = int(padded, 2).to_bytes(len(padded) // 8, "big")
    return f"{len(bits)}:{data.hex()}"


def hex_to_bits(text: str) -> Bits:
    try:
        length_str, hex_str = text.strip().split(":", 1)
        length = int(length_str)
        data = bytes.fromhex(hex_str)
    except ValueError as exc:
        raise FinsecIntegrityError(f"Invalid length-prefixed hex: {text!r}") from exc
    if length < 0 or len(data) != (length + 7) // 8:
        raise FinsecIntegrityError(f"Hex payload does not hold {length} bits")
    if length == 0:
        return ""
    bits = format(int.from_bytes(data, "big"), f"0{len(data) * 8}b")
    if "1" in bits[length:]:
        raise FinsecIntegrityError("Non-zero padding after the declared bit length")
    return bits[:length]


def xlog2x(count: float) -> float:
    """c·log₂c with the convention 0·log 0 = 0."""
    if count <= 0:
        return 0.0
    return count * math.log2(count)


def entropy_of_counts(counts: Iterable[int]) -> float:
    """Empirical entropy in bits of a histogram, log₂N − Σ c log₂ c / N."""
    values = np.fromiter((c for c in counts if c > 0), dtype=np.float64)
    if not values.size:
        return 0.0
    total = values.sum()
    value = math.log2(total) - float((values * np.log2(values)).sum()) / total
    return max(value, 0.0)
