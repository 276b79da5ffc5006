"""Empirical laws and entropies of individual sequences. All logarithms
are base 2 and 0·log 0 = 0."""

from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, Mapping, Optional, Tuple

from finsec.exc import FinsecValidationError
from finsec.util import entropy_of_counts, xlog2x
from finsec.fsm.counts import CountTable
from finsec.fsm.sequence import SymbolSequence


@dataclass(frozen=True)
class EmpiricalLaw:
    """A count table normalised to a distribution."""

    probs: Dict[Hashable, float]
    normalizer: int

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int]) -> "EmpiricalLaw":
        total = sum(counts.values())
        if total == 0:
            raise FinsecValidationError("Cannot normalise an empty count table")
        probs = {key: count / total for key, count in counts.items() if count > 0}
        return cls(probs=probs, normalizer=total)

    @classmethod
    def from_table(cls, table: CountTable) -> "EmpiricalLaw":
        return cls.from_counts(table.counts)

    def entropy(self) -> float:
        return entropy_of_counts(
            round(p * self.normalizer) for p in self.probs.values()
        )

    def marginal(self, positions: Tuple[int, ...]) -> "EmpiricalLaw":
        out: Dict[Hashable, float] = {}
        for key, prob in self.probs.items():
            sub = tuple(key[p] for p in positions)  # type: ignore[index]
            out[sub] = out.get(sub, 0.0) + prob
        return EmpiricalLaw(probs=out, normalizer=self.normalizer)


def _conditional(pairs: Iterable[Tuple[Hashable, int]], total: int) -> float:
    """Ĥ(X|C) from counts keyed by (condition, symbol) groups:
    [Σ_c n(c) log n(c) − Σ n(c,x) log n(c,x)] / N."""
    joint = 0.0
    margins: Dict[Hashable, int] = {}
    for cond, count in pairs:
        joint += xlog2x(count)
        margins[cond] = margins.get(cond, 0) + count
    value = (sum(xlog2x(c) for c in margins.values()) - joint) / total
    return max(value, 0.0)


def cond_entropy(counts: CountTable) -> float:
    """Ĥ(X|Z), or Ĥ(X|Y,Z) for side-information counts, in bits/symbol."""
    if counts.kind.is_block:
        raise FinsecValidationError("Conditional symbol entropy needs symbol counts")
    total = counts.total
    if total == 0:
        raise FinsecValidationError("Cannot take the entropy of an empty table")
    return _conditional(((key[1:], c) for key, c in counts.counts.items()), total)


def cyclic_grams(x: SymbolSequence, order: int) -> Dict[Tuple[int, ...], int]:
    """Counts of the (order+1)-grams of the periodic extension of x, one per
    starting position."""
    n = len(x)
    sym = x.symbols
    counts: Dict[Tuple[int, ...], int] = {}
    for i in range(n):
        gram = tuple(sym[(i + j) % n] for j in range(order + 1))
        counts[gram] = counts.get(gram, 0) + 1
    return counts


def markov_cond_entropy(x: SymbolSequence, order: int) -> float:
    """Ĥ(X_ℓ | X_0..X_{ℓ-1}) under the cyclic (ℓ+1)-gram law."""
    if order < 0:
        raise FinsecValidationError(f"Markov order must be >= 0, got {order}")
    if not len(x):
        return 0.0
    grams = cyclic_grams(x, order)
    return _conditional(((g[:-1], c) for g, c in grams.items()), len(x))


def _blocks(x: SymbolSequence, block: int) -> Iterable[Tuple[int, ...]]:
    if block < 1:
        raise FinsecValidationError(f"Block length must be positive, got {block}")
    if len(x) % block != 0:
        raise FinsecValidationError(
            f"Block length {block} does not divide sequence length {len(x)}"
        )
    for i in range(0, len(x), block):
        yield x.symbols[i : i + block]


def block_counts(x: SymbolSequence, block: int) -> Dict[Tuple[int, ...], int]:
    counts: Dict[Tuple[int, ...], int] = {}
    for blk in _blocks(x, block):
        counts[blk] = counts.get(blk, 0) + 1
    return counts


def block_entropy(x: SymbolSequence, block: int) -> float:
    """Ĥ(X^ℓ)/ℓ over the non-overlapping ℓ-blocks of x."""
    counts = block_counts(x, block)
    return entropy_of_counts(counts.values()) / block


def empirical_entropy(x: SymbolSequence) -> float:
    """Ĥ(x): the zeroth-order empirical entropy."""
    return block_entropy(x, 1)


def conditional_block_entropy(
    x: SymbolSequence, y: SymbolSequence, block: int
) -> float:
    """Ĥ(X^ℓ|Y^ℓ)/ℓ with the blocks of y aligned to the blocks of x."""
    if len(x) != len(y):
        raise FinsecValidationError(f"Length mismatch: {len(x)} vs {len(y)}")
    pairs: Dict[Tuple[Tuple[int, ...], Tuple[int, ...]], int] = {}
    for xb, yb in zip(_blocks(x, block), _blocks(y, block)):
        pairs[(yb, xb)] = pairs.get((yb, xb), 0) + 1
    if not pairs:
        return 0.0
    total = len(x) // block
    return _conditional(((k[0], c) for k, c in pairs.items()), total) / block


def mutual_information(
    joint: Mapping[Tuple[Hashable, Hashable], int],
) -> float:
    """Î(A;B) from joint counts keyed by (a, b)."""
    left: Dict[Hashable, int] = {}
    right: Dict[Hashable, int] = {}
    for (a, b), count in joint.items():
        left[a] = left.get(a, 0) + count
        right[b] = right.get(b, 0) + count
    value = (
        entropy_of_counts(left.values())
        + entropy_of_counts(right.values())
        - entropy_of_counts(joint.values())
    )
    return max(value, 0.0)


@dataclass(frozen=True)
class BlockStateEntropies:
    joint: float
    pairs: float
    blocks: float
    conditional: float
    information: float


def block_state_entropies(
    counts: CountTable, block: Optional[int] = None
) -> BlockStateEntropies:
    """Ĥ(Z,Z',X^ℓ), Ĥ(Z,Z'), Ĥ(X^ℓ), Ĥ(X^ℓ|Z,Z') and Î(Z,Z';X^ℓ) of a
    block count table, per block (not per symbol)."""
    if not counts.kind.is_block:
        raise FinsecValidationError("Block-state entropies need block counts")
    joint: Dict[Tuple[Hashable, Hashable], int] = {}
    for key, count in counts.counts.items():
        pair = (key[0], key[1])
        joint[(pair, key[2])] = joint.get((pair, key[2]), 0) + count
    h_joint = entropy_of_counts(joint.values())
    h_pairs = entropy_of_counts(counts.pair_marginal().values())
    h_blocks = entropy_of_counts(counts.block_marginal().values())
    return BlockStateEntropies(
        joint=h_joint,
        pairs=h_pairs,
        blocks=h_blocks,
        conditional=max(h_joint - h_pairs, 0.0),
        information=mutual_information(joint),
    )
