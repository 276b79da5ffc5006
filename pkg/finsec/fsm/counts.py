from enum import Enum
from itertools import product
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, List, Optional, Tuple

from finsec.exc import FinsecUsageError, FinsecValidationError
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence

CountKey = Tuple
Counts = Dict[CountKey, int]


class CountKind(str, Enum):
    SYMBOL_STATE = "symbol-state"
    SI_SYMBOL_STATE = "si-symbol-state"
    BLOCK = "block"
    SI_BLOCK = "si-block"

    @property
    def is_block(self) -> bool:
        return self in (CountKind.BLOCK, CountKind.SI_BLOCK)

    @property
    def uses_si(self) -> bool:
        return self in (CountKind.SI_SYMBOL_STATE, CountKind.SI_BLOCK)


@dataclass(frozen=True)
class CountTable:
    """Occurrence counts gathered by a machine with counters. Only non-zero
    entries are stored. Keys by kind:

    * symbol-state: `(x, z)`
    * si-symbol-state: `(x, y, z)`
    * block: `(z, z', x-block)`
    * si-block: `(z, z', x-block, y-block)`

    Cyclic symbol counts may run over several laps of the sequence when the
    machine has no cyclically consistent start state (see `cyclic_start`);
    `total` is then `laps * n`."""

    kind: CountKind
    alpha: int
    states: int
    n: int
    counts: Counts = field(hash=False)
    beta: int = 0
    block: int = 1
    laps: int = 1
    cyclic: bool = False

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def expected_total(self) -> int:
        if self.kind.is_block:
            return self.n // self.block
        return self.n * self.laps

    def get(self, key: CountKey) -> int:
        return self.counts.get(key, 0)

    def items(self) -> List[Tuple[CountKey, int]]:
        return sorted(self.counts.items())

    def state_marginal(self) -> Dict[int, int]:
        """n(z) for symbol kinds."""
        out: Dict[int, int] = {}
        for key, count in self.counts.items():
            out[key[-1]] = out.get(key[-1], 0) + count
        return out

    def symbol_marginal(self) -> Dict[int, int]:
        """n(x) for symbol kinds."""
        out: Dict[int, int] = {}
        for key, count in self.counts.items():
            out[key[0]] = out.get(key[0], 0) + count
        return out

    def pair_marginal(self) -> Dict[Tuple[int, int], int]:
        """m(z, z') for block kinds."""
        out: Dict[Tuple[int, int], int] = {}
        for key, count in self.counts.items():
            pair = (key[0], key[1])
            out[pair] = out.get(pair, 0) + count
        return out

    def block_marginal(self) -> Dict[Tuple[int, ...], int]:
        """m(x^ℓ) for block kinds."""
        out: Dict[Tuple[int, ...], int] = {}
        for key, count in self.counts.items():
            out[key[2]] = out.get(key[2], 0) + count
        return out

    def domain(self) -> Iterator[CountKey]:
        """Every key of the full table in row-major order."""
        alpha, s, beta, ell = self.alpha, self.states, max(self.beta, 1), self.block
        if self.kind == CountKind.SYMBOL_STATE:
            yield from product(range(alpha), range(s))
        elif self.kind == CountKind.SI_SYMBOL_STATE:
            yield from product(range(alpha), range(beta), range(s))
        elif self.kind == CountKind.BLOCK:
            blocks = list(product(range(alpha), repeat=ell))
            yield from product(range(s), range(s), blocks)
        else:
            xblocks = list(product(range(alpha), repeat=ell))
            yblocks = list(product(range(beta), repeat=ell))
            yield from product(range(s), range(s), xblocks, yblocks)

    def domain_size(self) -> int:
        beta = max(self.beta, 1)
        if self.kind == CountKind.SYMBOL_STATE:
            return self.alpha * self.states
        if self.kind == CountKind.SI_SYMBOL_STATE:
            return self.alpha * beta * self.states
        size = self.states * self.states * self.alpha**self.block
        if self.kind == CountKind.SI_BLOCK:
            size *= beta**self.block
        return size

    def is_consistent(self, fsm: FsmSpec) -> bool:
        """Block counts vanish wherever z' is not the state reached from z on
        the block."""
        if not self.kind.is_block:
            return True
        for key in self.counts:
            z, end, xb = key[0], key[1], key[2]
            yb = key[3] if self.kind == CountKind.SI_BLOCK else None
            if fsm.walk(xb, yb, start=z)[-1] != end:
                return False
        return True

    def merge(self, other: "CountTable") -> "CountTable":
        """Entrywise sum of tables collected over disjoint shards."""
        if self.cyclic or other.cyclic:
            raise FinsecUsageError("Cyclic count tables cannot be merged")
        if (self.kind, self.alpha, self.states, self.beta, self.block) != (
            other.kind,
            other.alpha,
            other.states,
            other.beta,
            other.block,
        ):
            raise FinsecUsageError("Count tables have different shapes")
        merged = dict(self.counts)
        for key, count in other.counts.items():
            merged[key] = merged.get(key, 0) + count
        return CountTable(
            kind=self.kind,
            alpha=self.alpha,
            states=self.states,
            n=self.n + other.n,
            counts=merged,
            beta=self.beta,
            block=self.block,
        )


def cyclic_start(
    fsm: FsmSpec, x: SymbolSequence, y: Optional[SymbolSequence] = None
) -> Tuple[int, int]:
    """Start state and number of laps for the periodic extension of x.

    Reading x from z defines a map on states; iterating it from the initial
    state ends in a cycle. A fixed point (cycle length 1) is a state with
    z_0 = g(z_{n-1}, x_{n-1}); a longer cycle means the extension only
    closes after that many laps."""
    si = None if y is None else y.symbols
    seen: Dict[int, int] = {}
    order: List[int] = []
    state = fsm.initial
    while state not in seen:
        seen[state] = len(order)
        order.append(state)
        state = fsm.walk(x.symbols, si, start=state)[-1]
    cycle = order[seen[state] :]
    return cycle[0], len(cycle)


def collect_counts(
    fsm: FsmSpec,
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    cyclic: bool = False,
    start: Optional[int] = None,
) -> CountTable:
    """Counts n(x, z) (or n(x, y, z)) over i = 0..n-1, reading x from the
    initial state or from `start`. Cyclic counts add up every lap of the
    periodic extension with `CountTable.merge`."""
    if not fsm.is_time_invariant:
        raise FinsecValidationError(
            "Symbol-state counts need a time-invariant machine; "
            "use block counts for periodic machines"
        )
    fsm.check_inputs(x, y)
    if cyclic:
        if start is not None:
            raise FinsecUsageError("Cyclic counts choose their own start state")
        first, laps = cyclic_start(fsm, x, y)
        table = collect_counts(fsm, x, y, start=first)
        state = first
        si = None if y is None else y.symbols
        for _ in range(laps - 1):
            state = fsm.walk(x.symbols, si, start=state)[-1]
            table = table.merge(collect_counts(fsm, x, y, start=state))
        return replace(table, n=len(x), laps=laps, cyclic=True)
    if start is None:
        start = fsm.initial
    if not 0 <= start < fsm.states:
        raise FinsecValidationError(f"Start state {start} outside 0..{fsm.states - 1}")
    si = None if y is None else y.symbols
    states = fsm.walk(x.symbols, si, start=start)
    counts: Counts = {}
    if si is None:
        for sym, state in zip(x.symbols, states):
            key: CountKey = (sym, state)
            counts[key] = counts.get(key, 0) + 1
    else:
        for sym, b, state in zip(x.symbols, si, states):
            key = (sym, b, state)
            counts[key] = counts.get(key, 0) + 1
    return CountTable(
        kind=CountKind.SYMBOL_STATE if y is None else CountKind.SI_SYMBOL_STATE,
        alpha=fsm.alpha,
        states=fsm.states,
        n=len(x),
        counts=counts,
        beta=fsm.beta,
    )


def collect_block_counts(
    fsm: FsmSpec,
    x: SymbolSequence,
    block: int,
    y: Optional[SymbolSequence] = None,
) -> CountTable:
    """Counts m(z, z', x^ℓ) over the non-overlapping ℓ-blocks of x."""
    if block < 1:
        raise FinsecValidationError(f"Block length must be positive, got {block}")
    if len(x) % block != 0:
        raise FinsecValidationError(
            f"Block length {block} does not divide sequence length {len(x)}"
        )
    if block % fsm.period != 0:
        raise FinsecValidationError(
            f"Block length {block} is not a multiple of the period {fsm.period}"
        )
    fsm.check_inputs(x, y)
    si = None if y is None else y.symbols
    states = fsm.walk(x.symbols, si)
    counts: Counts = {}
    for i in range(0, len(x), block):
        xb = x.symbols[i : i + block]
        if si is None:
            key: CountKey = (states[i], states[i + block], xb)
        else:
            key = (states[i], states[i + block], xb, si[i : i + block])
        counts[key] = counts.get(key, 0) + 1
    return CountTable(
        kind=CountKind.BLOCK if y is None else CountKind.SI_BLOCK,
        alpha=fsm.alpha,
        states=fsm.states,
        n=len(x),
        counts=counts,
        beta=fsm.beta,
        block=block,
    )
