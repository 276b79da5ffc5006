import math
from enum import Enum
from dataclasses import dataclass
from typing import Dict, Optional

from finsec.exc import FinsecIntegrityError, FinsecUsageError
from finsec.exc import FinsecValidationError
from finsec.logs import get_logger
from finsec.util import Bits, bits_to_hex, bits_to_int, ceil_log2, check_bits
from finsec.util import int_to_bits
from finsec.entropy import block_entropy, cond_entropy, conditional_block_entropy
from finsec.entropy import empirical_entropy, markov_cond_entropy
from finsec.fsm.builders import shift_register_order
from finsec.fsm.counts import CountKind, CountTable, collect_counts
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence
from finsec.typeclass import TypeClassDescriptor, class_index, describe

log = get_logger(__name__)


class CodeKind(str, Enum):
    """Which type class the two-part code indexes into."""

    SYMBOL_STATE = "symbol-state"
    SI_SYMBOL_STATE = "si-symbol-state"
    BLOCK = "block"
    SI_BLOCK = "si-block"
    MARKOV = "markov"

    @property
    def count_kind(self) -> CountKind:
        if self == CodeKind.MARKOV:
            return CountKind.SYMBOL_STATE
        return CountKind(self.value)

    @property
    def uses_si(self) -> bool:
        return self.count_kind.uses_si


@dataclass(frozen=True)
class TwoPartCodeword:
    """Type class header followed by the fixed-width rank of x inside the
    class. `n` and `block` travel outside the bit budget."""

    kind: CodeKind
    n: int
    header: Bits
    payload: Bits
    rank: int
    size: int
    block: int = 1

    @property
    def declared_length(self) -> int:
        return len(self.header) + len(self.payload)

    @property
    def bits(self) -> Bits:
        return self.header + self.payload

    def to_hex(self) -> str:
        return bits_to_hex(self.bits)


def rank_in_type_class(desc: TypeClassDescriptor, x: SymbolSequence) -> int:
    return class_index(desc).rank(x.symbols)


def unrank_in_type_class(desc: TypeClassDescriptor, rank: int) -> SymbolSequence:
    symbols = class_index(desc).unrank(rank)
    return SymbolSequence(desc.fsm.alphabet, symbols)


def _check_kind(
    fsm: FsmSpec, kind: CodeKind, y: Optional[SymbolSequence], block: int
) -> None:
    if kind.uses_si and y is None:
        raise FinsecUsageError(f"The {kind.value} code needs side information")
    if not kind.uses_si and y is not None:
        raise FinsecUsageError(f"The {kind.value} code takes no side information")
    if kind == CodeKind.MARKOV and shift_register_order(fsm) is None:
        raise FinsecUsageError("The markov code needs a shift-register machine")
    if not kind.count_kind.is_block and block != 1:
        raise FinsecUsageError(f"The {kind.value} code has no block length")


def describe_for(
    fsm: FsmSpec,
    kind: CodeKind,
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    block: int = 1,
) -> TypeClassDescriptor:
    _check_kind(fsm, kind, y, block)
    if kind.count_kind.is_block:
        return describe(fsm, x, y, block=block)
    return describe(fsm, x, y, cyclic=kind == CodeKind.MARKOV)


def _template(
    fsm: FsmSpec, kind: CodeKind, n: int, block: int
) -> CountTable:
    return CountTable(
        kind=kind.count_kind,
        alpha=fsm.alpha,
        states=fsm.states,
        n=n,
        counts={},
        beta=fsm.beta,
        block=block,
        cyclic=kind == CodeKind.MARKOV,
    )


def header_width(kind: CodeKind, n: int, block: int = 1) -> int:
    """Bits per stored count: enough for any value up to the table total."""
    total = n // block if kind.count_kind.is_block else n
    return ceil_log2(total + 1)


def header_length(fsm: FsmSpec, kind: CodeKind, n: int, block: int = 1) -> int:
    size = _template(fsm, kind, n, block).domain_size()
    return (size - 1) * header_width(kind, n, block)


def encode_header(counts: CountTable, kind: CodeKind) -> Bits:
    """Every count of the row-major domain but the last, which the decoder
    recovers from the total."""
    width = header_width(kind, counts.n, counts.block)
    keys = list(counts.domain())[:-1]
    return "".join(int_to_bits(counts.get(key), width) for key in keys)


def decode_header(
    fsm: FsmSpec, kind: CodeKind, n: int, header: Bits, block: int = 1
) -> CountTable:
    check_bits(header)
    template = _template(fsm, kind, n, block)
    width = header_width(kind, n, block)
    keys = list(template.domain())
    if len(header) != (len(keys) - 1) * width:
        raise FinsecIntegrityError(
            f"Header has {len(header)} bits, expected {(len(keys) - 1) * width}"
        )
    total = template.expected_total
    counts: Dict = {}
    used = 0
    for idx, key in enumerate(keys[:-1]):
        value = bits_to_int(header[idx * width : (idx + 1) * width])
        used += value
        if value:
            counts[key] = value
    last = total - used
    if last < 0:
        raise FinsecIntegrityError("Header counts exceed the sequence length")
    if last:
        counts[keys[-1]] = last
    return CountTable(
        kind=template.kind,
        alpha=template.alpha,
        states=template.states,
        n=n,
        counts=counts,
        beta=template.beta,
        block=block,
        cyclic=template.cyclic,
    )


def two_part_encode(
    fsm: FsmSpec,
    kind: CodeKind,
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    block: int = 1,
) -> TwoPartCodeword:
    desc = describe_for(fsm, kind, x, y, block)
    index = class_index(desc)
    rank = index.rank(x.symbols)
    payload = int_to_bits(rank, ceil_log2(index.size))
    header = encode_header(desc.counts, kind)
    log.debug(
        "Two-part codeword",
        kind=kind.value,
        n=len(x),
        header=len(header),
        payload=len(payload),
    )
    return TwoPartCodeword(
        kind=kind,
        n=len(x),
        header=header,
        payload=payload,
        rank=rank,
        size=index.size,
        block=block,
    )


def split_codeword(
    fsm: FsmSpec,
    kind: CodeKind,
    n: int,
    bits: Bits,
    y: Optional[SymbolSequence] = None,
    block: int = 1,
) -> TwoPartCodeword:
    """Rebuild a codeword from its concatenated bits; the decoder knows
    where the header ends from (fsm, kind, n)."""
    _check_kind(fsm, kind, y, block)
    check_bits(bits)
    cut = header_length(fsm, kind, n, block)
    if len(bits) < cut:
        raise FinsecIntegrityError("Codeword is shorter than its header")
    header, payload = bits[:cut], bits[cut:]
    desc = _decoded_class(fsm, kind, n, header, y, block)
    size = class_index(desc).size
    return TwoPartCodeword(
        kind=kind,
        n=n,
        header=header,
        payload=payload,
        rank=bits_to_int(payload),
        size=size,
        block=block,
    )


def _decoded_class(
    fsm: FsmSpec,
    kind: CodeKind,
    n: int,
    header: Bits,
    y: Optional[SymbolSequence],
    block: int,
) -> TypeClassDescriptor:
    if kind.count_kind.is_block and (block < 1 or n % block):
        raise FinsecIntegrityError(f"Block length {block} does not divide {n}")
    if y is not None and len(y) != n:
        raise FinsecValidationError(f"Side information length {len(y)} differs from {n}")
    counts = decode_header(fsm, kind, n, header, block)
    return TypeClassDescriptor(fsm=fsm, counts=counts, y=y)


def two_part_decode(
    fsm: FsmSpec,
    kind: CodeKind,
    cw: TwoPartCodeword,
    y: Optional[SymbolSequence] = None,
) -> SymbolSequence:
    _check_kind(fsm, kind, y, cw.block)
    desc = _decoded_class(fsm, kind, cw.n, cw.header, y, cw.block)
    index = class_index(desc)
    if index.size == 0:
        raise FinsecIntegrityError("Header describes an empty type class")
    check_bits(cw.payload)
    if len(cw.payload) != ceil_log2(index.size):
        raise FinsecIntegrityError(
            f"Payload has {len(cw.payload)} bits, the class needs "
            f"{ceil_log2(index.size)}"
        )
    rank = bits_to_int(cw.payload)
    if rank >= index.size:
        raise FinsecIntegrityError(f"Rank {rank} outside class of size {index.size}")
    return SymbolSequence(fsm.alphabet, index.unrank(rank))


def two_part_length_estimate(
    x: SymbolSequence,
    kind: CodeKind = CodeKind.SYMBOL_STATE,
    fsm: Optional[FsmSpec] = None,
    y: Optional[SymbolSequence] = None,
    block: int = 1,
    order: int = 1,
) -> float:
    """Asymptotic codeword length in bits: n times the matching empirical
    entropy plus the parameter cost of the class."""
    n = len(x)
    if n == 0:
        return 0.0
    alpha = x.alpha
    log_n = math.log2(n)
    if kind == CodeKind.MARKOV:
        cost = alpha ** max(order - 1, 0) * (alpha - 1) / 2
        return n * markov_cond_entropy(x, order) + cost * log_n
    if kind.count_kind.is_block:
        m = n // block
        if kind == CodeKind.SI_BLOCK:
            if y is None:
                raise FinsecUsageError("The si-block estimate needs side information")
            beta = y.alpha
            rate = conditional_block_entropy(x, y, block) * block
            cost = beta**block * (alpha**block - 1) / 2
        else:
            rate = block_entropy(x, block) * block
            cost = (alpha**block - 1) / 2
        return m * rate + cost * math.log2(m)
    if fsm is None:
        return n * empirical_entropy(x) + (alpha - 1) / 2 * log_n
    counts = collect_counts(fsm, x, y)
    params: float = fsm.states * (alpha - 1) / 2
    if kind == CodeKind.SI_SYMBOL_STATE:
        params *= max(fsm.beta, 1)
    return n * cond_entropy(counts) + params * log_n
