from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

from finsec.exc import FinsecValidationError
from finsec.util import entropy_of_counts, xlog2x
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence
from finsec.lz.parse import Phrase, ParseResult, TrieNode, incremental_parse

ClassKey = Tuple[int, int, int]


@dataclass(frozen=True)
class JointParseResult:
    """Incremental parse of the pair sequence (x, y). For every complete
    joint phrase, `y_phrase_index` names its y-projection among the distinct
    y-phrases (numbered by first appearance); `c_l[l]` counts the x-phrases
    that appear with y-phrase l."""

    x: SymbolSequence
    y: SymbolSequence
    joint_phrases: Tuple[Phrase, ...]
    c_xy: int
    last_incomplete: bool
    y_phrase_index: Tuple[int, ...]
    y_phrases: Tuple[Tuple[int, ...], ...]
    c_l: Tuple[int, ...]
    dictionary: TrieNode = field(compare=False, repr=False)

    @property
    def c_y(self) -> int:
        return len(self.y_phrases)


def joint_parse(x: SymbolSequence, y: SymbolSequence) -> JointParseResult:
    if len(x) != len(y):
        raise FinsecValidationError(
            f"Joint parsing needs equal lengths, got {len(x)} and {len(y)}"
        )
    pairs = list(zip(x.symbols, y.symbols))
    parsed = incremental_parse(pairs)
    c_xy = len(parsed.phrases) - (1 if parsed.last_incomplete else 0)
    ids: Dict[Tuple[int, ...], int] = {}
    index: List[int] = []
    counts: List[int] = []
    for start, length in parsed.phrases[:c_xy]:
        proj = y.window(start, length)
        if proj not in ids:
            ids[proj] = len(ids)
            counts.append(0)
        index.append(ids[proj])
        counts[ids[proj]] += 1
    return JointParseResult(
        x=x,
        y=y,
        joint_phrases=parsed.phrases,
        c_xy=c_xy,
        last_incomplete=parsed.last_incomplete,
        y_phrase_index=tuple(index),
        y_phrases=tuple(ids.keys()),
        c_l=tuple(counts),
        dictionary=parsed.dictionary,
    )


def conditional_lz_length(jp: JointParseResult) -> float:
    """u(x|y) = Σ_l c_l log₂ c_l, in bits."""
    return sum(xlog2x(c) for c in jp.c_l)


@dataclass(frozen=True)
class PhraseClassTable:
    """Complete phrases grouped by (length, start state, end state), or by
    (y-phrase id, start state, end state) for a joint parse."""

    counts: Dict[ClassKey, int]
    c: int
    states: int
    si: bool = False

    def law(self) -> Dict[ClassKey, float]:
        """Q(l, z, z') = c_lzz' / c."""
        if self.c == 0:
            return {}
        return {key: count / self.c for key, count in sorted(self.counts.items())}

    def class_sizes(self) -> Dict[int, int]:
        """c_l: phrases per length (or per y-phrase)."""
        out: Dict[int, int] = {}
        for (label, _, _), count in self.counts.items():
            out[label] = out.get(label, 0) + count
        return out

    def conditional_law(self, label: int) -> Dict[Tuple[int, int], float]:
        """Q_l(z, z') = c_lzz' / c_l."""
        total = self.class_sizes().get(label, 0)
        return {
            (z, end): count / total
            for (lab, z, end), count in sorted(self.counts.items())
            if lab == label
        }

    def joint_entropy(self) -> float:
        """H(L, Z, Z') under Q."""
        return entropy_of_counts(self.counts.values())


def classify_phrases(
    parse: Union[ParseResult, JointParseResult], fsm: FsmSpec
) -> PhraseClassTable:
    """Tag every complete phrase with its length (or y-phrase id) and the
    machine's states where the phrase starts and ends, under one left-to-right
    run over x (or over the pairs (x, y))."""
    if not fsm.is_time_invariant:
        raise FinsecValidationError("Phrase classification needs a time-invariant machine")
    counts: Dict[ClassKey, int] = {}
    if isinstance(parse, JointParseResult):
        si = parse.y.symbols if fsm.beta > 0 else None
        fsm.check_inputs(parse.x, parse.y if fsm.beta > 0 else None)
        states = fsm.walk(parse.x.symbols, si)
        for (start, length), label in zip(
            parse.joint_phrases[: parse.c_xy], parse.y_phrase_index
        ):
            key = (label, states[start], states[start + length])
            counts[key] = counts.get(key, 0) + 1
        return PhraseClassTable(counts, parse.c_xy, fsm.states, si=True)
    fsm.check_inputs(parse.x)
    states = fsm.walk(parse.x.symbols)
    for start, length in parse.complete_phrases:
        key = (length, states[start], states[start + length])
        counts[key] = counts.get(key, 0) + 1
    return PhraseClassTable(counts, parse.c, fsm.states)


def appendix_bound(table: PhraseClassTable) -> float:
    """Σ c_lzz' log₂ c_lzz': a lower bound on log₂|A_n| for every
    discriminator whose states the table was classified with."""
    return sum(xlog2x(c) for c in table.counts.values())
