from typing import List, Tuple

from finsec.exc import FinsecIntegrityError, FinsecValidationError
from finsec.util import Bits, bits_to_int, ceil_log2, check_bits, int_to_bits
from finsec.fsm.sequence import AlphabetLike, SymbolSequence, parse_alphabet
from finsec.lz.parse import TrieNode, lz78_parse


def symbol_width(alpha: int) -> int:
    """Bits per literal symbol; at least one so the unary alphabet stays
    decodable."""
    return max(1, ceil_log2(alpha))


def lz78_encode(x: SymbolSequence) -> Bits:
    """LZ78 bitstream: for the j-th phrase a ⌈log₂ j⌉-bit pointer to its
    prefix and the new symbol; then a flag bit, followed by a pointer when
    the input ends inside an existing phrase."""
    parsed = lz78_parse(x)
    width = symbol_width(x.alpha)
    parts: List[str] = []
    for idx in range(parsed.c):
        start, length = parsed.phrases[idx]
        parts.append(int_to_bits(parsed.pointers[idx], ceil_log2(idx + 1)))
        parts.append(int_to_bits(x.symbols[start + length - 1], width))
    if parsed.last_incomplete:
        parts.append("1")
        parts.append(int_to_bits(parsed.pointers[-1], ceil_log2(parsed.c + 1)))
    else:
        parts.append("0")
    return "".join(parts)


def lz78_length(x: SymbolSequence) -> int:
    """LZ(x): the length in bits of the LZ78 code of x."""
    return len(lz78_encode(x))


def lz78_decode(bits: Bits, alphabet: AlphabetLike) -> SymbolSequence:
    labels = parse_alphabet(alphabet)
    check_bits(bits)
    width = symbol_width(len(labels))
    entries: List[Tuple[int, ...]] = [()]
    out: List[int] = []
    pos = 0
    while True:
        remaining = len(bits) - pos
        pw = ceil_log2(len(entries))
        if remaining <= 0:
            raise FinsecIntegrityError("Truncated LZ78 stream: missing end flag")
        if remaining == 1:
            if bits[pos] != "0":
                raise FinsecIntegrityError("Truncated LZ78 stream after end flag")
            break
        if remaining == 1 + pw and bits[pos] == "1":
            ptr = bits_to_int(bits[pos + 1 : pos + 1 + pw])
            if not 1 <= ptr < len(entries):
                raise FinsecIntegrityError(f"Invalid tail pointer {ptr}")
            out.extend(entries[ptr])
            break
        if remaining < pw + width + 1:
            raise FinsecIntegrityError(f"Malformed LZ78 stream at bit {pos}")
        ptr = bits_to_int(bits[pos : pos + pw])
        sym = bits_to_int(bits[pos + pw : pos + pw + width])
        pos += pw + width
        if ptr >= len(entries):
            raise FinsecIntegrityError(f"Pointer {ptr} beyond dictionary at bit {pos}")
        if sym >= len(labels):
            raise FinsecIntegrityError(f"Symbol {sym} outside alphabet at bit {pos}")
        phrase = entries[ptr] + (sym,)
        entries.append(phrase)
        out.extend(phrase)
    return SymbolSequence(labels, tuple(out))


def _candidates(
    root: TrieNode, si: Tuple[int, ...], pos: int, remaining: int
) -> List[TrieNode]:
    """Dictionary phrases whose side-information projection matches y from
    `pos` on, no longer than `remaining`, ordered by index."""
    found: List[TrieNode] = []
    stack = [root]
    while stack:
        node = stack.pop()
        found.append(node)
        if node.depth >= remaining:
            continue
        b = si[pos + node.depth]
        for (_, cb), child in node.children.items():
            if cb == b:
                stack.append(child)
    found.sort(key=lambda n: n.index)
    return found


def conditional_lz_encode(x: SymbolSequence, y: SymbolSequence) -> Bits:
    """Conditional LZ78 code of x given y: the joint sequence of pairs is
    parsed incrementally and each phrase pointer is coded among the
    dictionary phrases whose y-part agrees with y at the current position
    (the decoder knows y, so it can list them). A pointer to a phrase that
    covers the whole remainder ends the stream."""
    if len(x) != len(y):
        raise FinsecValidationError(f"Length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    width = ceil_log2(x.alpha)
    root = TrieNode(0, 0)
    count = 0
    parts: List[str] = []
    pos = 0
    while pos < n:
        remaining = n - pos
        cands = _candidates(root, y.symbols, pos, remaining)
        node = root
        while node.depth < remaining:
            pair = (x.symbols[pos + node.depth], y.symbols[pos + node.depth])
            child = node.children.get(pair)
            if child is None:
                break
            node = child
        rank = cands.index(node)
        parts.append(int_to_bits(rank, ceil_log2(len(cands))))
        if node.depth == remaining:
            break
        sym = x.symbols[pos + node.depth]
        parts.append(int_to_bits(sym, width))
        count += 1
        node.children[(sym, y.symbols[pos + node.depth])] = TrieNode(
            count, node.depth + 1
        )
        pos += node.depth + 1
    return "".join(parts)


def conditional_lz_decode(
    bits: Bits, y: SymbolSequence, alphabet: AlphabetLike
) -> SymbolSequence:
    labels = parse_alphabet(alphabet)
    check_bits(bits)
    width = ceil_log2(len(labels))
    n = len(y)
    root = TrieNode(0, 0)
    phrases: List[Tuple[int, ...]] = [()]
    out: List[int] = []
    pos = 0
    cursor = 0
    while pos < n:
        remaining = n - pos
        cands = _candidates(root, y.symbols, pos, remaining)
        pw = ceil_log2(len(cands))
        if cursor + pw > len(bits):
            raise FinsecIntegrityError("Truncated conditional LZ stream")
        rank = bits_to_int(bits[cursor : cursor + pw])
        cursor += pw
        if rank >= len(cands):
            raise FinsecIntegrityError(f"Pointer {rank} beyond candidate list")
        node = cands[rank]
        if node.depth == remaining:
            out.extend(phrases[node.index])
            pos = n
            break
        if cursor + width > len(bits):
            raise FinsecIntegrityError("Truncated conditional LZ stream")
        sym = bits_to_int(bits[cursor : cursor + width])
        cursor += width
        if sym >= len(labels):
            raise FinsecIntegrityError(f"Symbol {sym} outside alphabet")
        key = (sym, y.symbols[pos + node.depth])
        if key in node.children:
            raise FinsecIntegrityError("Conditional LZ stream repeats a phrase")
        node.children[key] = TrieNode(len(phrases), node.depth + 1)
        phrase = phrases[node.index] + (sym,)
        phrases.append(phrase)
        out.extend(phrase)
        pos += len(phrase)
    if cursor != len(bits):
        raise FinsecIntegrityError("Trailing bits after conditional LZ stream")
    return SymbolSequence(labels, tuple(out))
