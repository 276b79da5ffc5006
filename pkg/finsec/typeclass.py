"""Finite-state type classes: the set of sequences that leave the same count
table as x under a given machine.

Exact sizes, lexicographic ranks and unranks come from one of three class
indexes, picked by `class_index`:

* a multiset index for single-state machines, where the class is the set of
  permutations of the symbols (or blocks) of x;
* a lattice over (position, state, residual counts) for every other
  non-cyclic table, and for cyclic shift-register tables with n >= ℓ, where
  every closing state gets its own track;
* plain enumeration of all α^n sequences for the remaining cyclic tables.
"""

import math
from itertools import product
from bisect import bisect_left
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from finsec import settings
from finsec.exc import FinsecBudgetError, FinsecValidationError
from finsec.logs import get_logger
from finsec.util import entropy_of_counts
from finsec.entropy import cond_entropy
from finsec.fsm.builders import build_shift_register_fsm, shift_register_order
from finsec.fsm.counts import CountKind, CountTable
from finsec.fsm.counts import collect_block_counts, collect_counts
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence, all_sequences

log = get_logger(__name__)

Unit = Tuple[int, ...]
Node = Tuple[Optional[int], int, Tuple[int, ...]]


@dataclass(frozen=True)
class TypeClassDescriptor:
    """A count table together with the machine and parameters that produced
    it; identifies T_g(x)."""

    fsm: FsmSpec
    counts: CountTable
    y: Optional[SymbolSequence] = None
    exact_size: Optional[int] = None

    @property
    def kind(self) -> CountKind:
        return self.counts.kind

    @property
    def n(self) -> int:
        return self.counts.n

    @property
    def block(self) -> int:
        return self.counts.block

    @property
    def cyclic(self) -> bool:
        return self.counts.cyclic

    def with_size(self, size: int) -> "TypeClassDescriptor":
        return replace(self, exact_size=size)


def describe(
    fsm: FsmSpec,
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    block: Optional[int] = None,
    cyclic: bool = False,
) -> TypeClassDescriptor:
    if block is not None:
        if cyclic:
            raise FinsecValidationError("Block counts are never cyclic")
        counts = collect_block_counts(fsm, x, block, y)
    else:
        counts = collect_counts(fsm, x, y, cyclic=cyclic)
    return TypeClassDescriptor(fsm=fsm, counts=counts, y=y)


def describe_markov(
    x: SymbolSequence, order: int, budget: Optional[int] = None
) -> TypeClassDescriptor:
    """The ℓ-th order Markov type of x: cyclic counts under the
    shift-register machine of that order."""
    fsm = build_shift_register_fsm(order, x.alpha, x.alphabet, budget=budget)
    return describe(fsm, x, cyclic=True)


def counts_for(desc: TypeClassDescriptor, symbols: Sequence[int]) -> CountTable:
    """The count table a candidate sequence leaves under the class's
    machine and parameters."""
    x = SymbolSequence(desc.fsm.alphabet, tuple(symbols))
    if desc.kind.is_block:
        return collect_block_counts(desc.fsm, x, desc.block, desc.y)
    return collect_counts(desc.fsm, x, desc.y, cyclic=desc.cyclic)


def is_member(desc: TypeClassDescriptor, symbols: Sequence[int]) -> bool:
    if len(symbols) != desc.n:
        return False
    table = counts_for(desc, symbols)
    return table.counts == desc.counts.counts and table.laps == desc.counts.laps


def multinomial(counts: Iterable[int]) -> int:
    """(Σ c)! / Π c!, built up one binomial at a time."""
    total = 0
    value = 1
    for count in counts:
        total += count
        value *= math.comb(total, count)
    return value


def count_budget(counts: CountTable) -> int:
    """Π (count + 1) over the table: a cap on the residual-count states a
    lattice over this table can visit."""
    value = 1
    for count in counts.counts.values():
        value *= count + 1
    return value


class ClassIndex(object):
    """Exact size and lexicographic rank/unrank within one type class. The
    order is the one induced by alphabet index order."""

    strategy = "abstract"

    def __init__(self, desc: TypeClassDescriptor) -> None:
        self.desc = desc

    @property
    def size(self) -> int:
        raise NotImplementedError()

    def rank(self, symbols: Sequence[int]) -> int:
        raise NotImplementedError()

    def unrank(self, rank: int) -> Tuple[int, ...]:
        raise NotImplementedError()

    def _check_member(self, symbols: Sequence[int]) -> None:
        if not is_member(self.desc, symbols):
            raise FinsecValidationError("Sequence is not a member of the type class")

    def _check_rank(self, rank: int) -> None:
        if not 0 <= rank < self.size:
            raise FinsecValidationError(
                f"Rank {rank} outside the type class of size {self.size}"
            )

    def _units(self, symbols: Sequence[int]) -> List[Unit]:
        ell = self.desc.block
        return [tuple(symbols[i : i + ell]) for i in range(0, len(symbols), ell)]


class MultisetIndex(ClassIndex):
    """Single-state machines without side information: the class is every
    arrangement of the multiset of units (symbols or blocks) of x."""

    strategy = "multiset"

    def __init__(self, desc: TypeClassDescriptor) -> None:
        super().__init__(desc)
        tally: Dict[Unit, int] = {}
        for key, count in desc.counts.counts.items():
            unit = key[2] if desc.kind.is_block else (key[0],)
            tally[unit] = tally.get(unit, 0) + count
        self.units = sorted(tally)
        self.tally = [tally[u] for u in self.units]
        self._size = multinomial(self.tally)

    @property
    def size(self) -> int:
        return self._size

    def rank(self, symbols: Sequence[int]) -> int:
        self._check_member(symbols)
        remaining = list(self.tally)
        left = sum(remaining)
        arrangements = self._size
        rank = 0
        for unit in self._units(symbols):
            pos = self.units.index(unit)
            for smaller in range(pos):
                if remaining[smaller]:
                    rank += arrangements * remaining[smaller] // left
            arrangements = arrangements * remaining[pos] // left
            remaining[pos] -= 1
            left -= 1
        return rank

    def unrank(self, rank: int) -> Tuple[int, ...]:
        self._check_rank(rank)
        remaining = list(self.tally)
        left = sum(remaining)
        arrangements = self._size
        out: List[int] = []
        while left:
            for pos, count in enumerate(remaining):
                if not count:
                    continue
                branch = arrangements * count // left
                if rank < branch:
                    out.extend(self.units[pos])
                    arrangements = branch
                    remaining[pos] -= 1
                    left -= 1
                    break
                rank -= branch
        return tuple(out)


class LatticeIndex(ClassIndex):
    """Dynamic programme over nodes (closing state, state, residual counts).

    Each track starts from a state and may require the walk to end in a
    given closing state. A forward sweep collects the reachable nodes per
    step, a backward sweep stores how many completions each node has; sizes,
    ranks and unranks read those tables."""

    strategy = "lattice"

    def __init__(
        self,
        desc: TypeClassDescriptor,
        tracks: Sequence[Tuple[int, Optional[int]]],
        budget: Optional[int] = None,
    ) -> None:
        super().__init__(desc)
        budget = settings.COUNT_BUDGET if budget is None else budget
        required = count_budget(desc.counts)
        if required > budget:
            raise FinsecBudgetError(
                "Type class is too large to count exactly",
                budget=budget,
                required=required,
            )
        fsm = desc.fsm
        self.keys = sorted(desc.counts.counts)
        self.slots = {key: idx for idx, key in enumerate(self.keys)}
        self.target = tuple(desc.counts.counts[k] for k in self.keys)
        ell = desc.block
        self.steps = desc.n // ell
        if desc.kind.is_block:
            self.unit_list: List[Unit] = list(product(range(fsm.alpha), repeat=ell))
        else:
            self.unit_list = [(a,) for a in range(fsm.alpha)]
        self.si = None if desc.y is None else desc.y.symbols
        self._moves: Dict[Tuple[int, Unit, Unit], Tuple[Tuple, int]] = {}
        self.roots: List[Node] = [(end, start, self.target) for start, end in tracks]
        self.layers = self._build()

    def _move(self, step: int, state: int, unit: Unit) -> Tuple[Tuple, int]:
        """(count key, next state) for reading `unit` at `step` from `state`."""
        fsm = self.desc.fsm
        ell = self.desc.block
        yb: Unit = ()
        if self.si is not None:
            yb = tuple(self.si[step * ell : (step + 1) * ell])
        memo = (state, yb, unit)
        cached = self._moves.get(memo)
        if cached is not None:
            return cached
        if self.desc.kind.is_block:
            end = fsm.walk(unit, yb or None, start=state)[-1]
            key: Tuple = (state, end, unit) if self.si is None else (state, end, unit, yb)
            result = (key, end)
        else:
            b = yb[0] if yb else 0
            key = (unit[0], state) if self.si is None else (unit[0], b, state)
            result = (key, fsm.step(state, unit[0], b))
        self._moves[memo] = result
        return result

    def _successor(self, step: int, node: Node, unit: Unit) -> Optional[Node]:
        end, state, residual = node
        key, nxt = self._move(step, state, unit)
        slot = self.slots.get(key)
        if slot is None or residual[slot] == 0:
            return None
        left = residual[:slot] + (residual[slot] - 1,) + residual[slot + 1 :]
        return (end, nxt, left)

    def _build(self) -> List[Dict[Node, int]]:
        levels: List[List[Node]] = [list(dict.fromkeys(self.roots))]
        for step in range(self.steps):
            found: Dict[Node, None] = {}
            for node in levels[-1]:
                for unit in self.unit_list:
                    succ = self._successor(step, node, unit)
                    if succ is not None:
                        found[succ] = None
            levels.append(list(found))
        layers: List[Dict[Node, int]] = [{} for _ in levels]
        for end, state, residual in levels[-1]:
            done = end is None or state == end
            layers[-1][(end, state, residual)] = 1 if done else 0
        for step in range(self.steps - 1, -1, -1):
            below = layers[step + 1]
            layer = layers[step]
            for node in levels[step]:
                total = 0
                for unit in self.unit_list:
                    succ = self._successor(step, node, unit)
                    if succ is not None:
                        total += below.get(succ, 0)
                layer[node] = total
        log.debug(
            "Built type class lattice",
            steps=self.steps,
            nodes=sum(len(level) for level in levels),
        )
        return layers

    @property
    def size(self) -> int:
        return sum(self.layers[0].get(root, 0) for root in set(self.roots))

    def _branch(self, step: int, alive: Sequence[Node], unit: Unit) -> List[Node]:
        out: List[Node] = []
        for node in alive:
            succ = self._successor(step, node, unit)
            if succ is not None:
                out.append(succ)
        return out

    def _weight(self, step: int, nodes: Sequence[Node]) -> int:
        layer = self.layers[step]
        return sum(layer.get(node, 0) for node in nodes)

    def rank(self, symbols: Sequence[int]) -> int:
        self._check_member(symbols)
        alive = list(dict.fromkeys(self.roots))
        rank = 0
        for step, unit in enumerate(self._units(symbols)):
            for other in self.unit_list:
                if other == unit:
                    break
                rank += self._weight(step + 1, self._branch(step, alive, other))
            alive = self._branch(step, alive, unit)
        return rank

    def unrank(self, rank: int) -> Tuple[int, ...]:
        self._check_rank(rank)
        alive = list(dict.fromkeys(self.roots))
        out: List[int] = []
        for step in range(self.steps):
            for unit in self.unit_list:
                nodes = self._branch(step, alive, unit)
                weight = self._weight(step + 1, nodes)
                if rank < weight:
                    out.extend(unit)
                    alive = nodes
                    break
                rank -= weight
        return tuple(out)


class EnumeratedIndex(ClassIndex):
    """Brute force: every sequence of length n, kept if it leaves the same
    table. Also serves as the oracle for the other indexes."""

    strategy = "enumeration"

    def __init__(self, desc: TypeClassDescriptor, budget: Optional[int] = None):
        super().__init__(desc)
        self.members = enumerate_type_class(desc, budget=budget)

    @property
    def size(self) -> int:
        return len(self.members)

    def rank(self, symbols: Sequence[int]) -> int:
        key = tuple(symbols)
        pos = bisect_left(self.members, key)
        if pos == len(self.members) or self.members[pos] != key:
            raise FinsecValidationError("Sequence is not a member of the type class")
        return pos

    def unrank(self, rank: int) -> Tuple[int, ...]:
        self._check_rank(rank)
        return self.members[rank]


def enumerate_type_class(
    desc: TypeClassDescriptor, budget: Optional[int] = None
) -> List[Tuple[int, ...]]:
    """All members in lexicographic order, by visiting all α^n sequences."""
    budget = settings.SEQUENCE_BUDGET if budget is None else budget
    alpha = desc.fsm.alpha
    required = alpha**desc.n
    if required > budget:
        raise FinsecBudgetError(
            f"Enumerating {alpha}^{desc.n} sequences exceeds the budget",
            budget=budget,
            required=required,
        )
    return [c for c in all_sequences(desc.fsm.alphabet, desc.n) if is_member(desc, c)]


def class_index(
    desc: TypeClassDescriptor, budget: Optional[int] = None
) -> ClassIndex:
    fsm = desc.fsm
    if fsm.states == 1 and desc.y is None:
        return MultisetIndex(desc)
    if not desc.cyclic:
        return LatticeIndex(desc, [(fsm.initial, None)], budget=budget)
    order = shift_register_order(fsm)
    if order is not None and desc.n >= order:
        tracks = [(z, z) for z in sorted(desc.counts.state_marginal())]
        return LatticeIndex(desc, tracks, budget=budget)
    log.info("Counting cyclic type class by enumeration", n=desc.n, states=fsm.states)
    return EnumeratedIndex(desc)


def type_class_size_exact(
    desc: TypeClassDescriptor, budget: Optional[int] = None
) -> int:
    index = class_index(desc, budget=budget)
    log.debug("Exact type class size", strategy=index.strategy, size=index.size)
    return index.size


def type_class_size_lower_bound(counts: CountTable) -> Tuple[float, bool]:
    """n·Ĥ(X|Z) − (s(α−1)/2)·log₂(2πn) in bits, with a flag telling whether
    every n(x, z) is at least one."""
    if counts.kind != CountKind.SYMBOL_STATE:
        raise FinsecValidationError(
            "The closed-form type class bound needs symbol-state counts"
        )
    n = counts.n
    if n == 0:
        return 0.0, False
    entropy = cond_entropy(counts)
    penalty = counts.states * (counts.alpha - 1) / 2 * math.log2(2 * math.pi * n)
    condition = all(counts.get(key) >= 1 for key in counts.domain())
    return n * entropy - penalty, condition


def block_type_size_lower_bound(
    counts: CountTable, states: int, alpha: int, block: int, n: int
) -> float:
    """n·[Ĥ(X^ℓ)/ℓ − 2 log₂ s/ℓ − (ℓ s² α^ℓ / n)·log₂(n/ℓ + 1)] in bits."""
    if not counts.kind.is_block:
        raise FinsecValidationError("The block type bound needs block counts")
    if n == 0:
        return 0.0
    entropy = entropy_of_counts(counts.block_marginal().values())
    penalty = block * states**2 * alpha**block * math.log2(n / block + 1)
    return n * (entropy / block - 2 * math.log2(states) / block) - penalty


def block_class_log_size(counts: CountTable) -> float:
    """log₂ of the blocks' arrangements that keep every (z, z') group: a
    lower bound on the block type class size."""
    if not counts.kind.is_block:
        raise FinsecValidationError("Block arrangements need block counts")
    groups: Dict[Tuple, List[int]] = {}
    for key, count in counts.counts.items():
        group = (key[0], key[1]) + tuple(key[3:])
        groups.setdefault(group, []).append(count)
    return sum(math.log2(multinomial(values)) for values in groups.values())
