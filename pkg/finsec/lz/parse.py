from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterator, List, Sequence, Tuple

from finsec.fsm.sequence import SymbolSequence

Phrase = Tuple[int, int]


class TrieNode(object):
    """A dictionary phrase: `index` 0 is the empty root, phrase j has index j."""

    __slots__ = ("index", "depth", "children")

    def __init__(self, index: int, depth: int) -> None:
        self.index = index
        self.depth = depth
        self.children: Dict[Hashable, "TrieNode"] = {}

    def walk(self) -> Iterator["TrieNode"]:
        yield self
        for child in self.children.values():
            yield from child.walk()

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())

    def __repr__(self) -> str:
        return f"<TrieNode {self.index} depth={self.depth}>"


@dataclass(frozen=True)
class ParsedPhrases:
    phrases: Tuple[Phrase, ...]
    pointers: Tuple[int, ...]
    last_incomplete: bool
    dictionary: TrieNode = field(compare=False, repr=False)


def incremental_parse(symbols: Sequence[Hashable]) -> ParsedPhrases:
    """Greedy incremental parsing: every phrase is the shortest prefix of
    the remaining input that is not yet a dictionary phrase. `pointers` holds
    the dictionary index of each phrase's longest proper prefix (for an
    incomplete last phrase, the index of the phrase it repeats)."""
    root = TrieNode(0, 0)
    phrases: List[Phrase] = []
    pointers: List[int] = []
    node = root
    start = 0
    for pos, sym in enumerate(symbols):
        child = node.children.get(sym)
        if child is not None:
            node = child
            continue
        index = len(phrases) + 1
        node.children[sym] = TrieNode(index, node.depth + 1)
        phrases.append((start, pos + 1 - start))
        pointers.append(node.index)
        node = root
        start = pos + 1
    last_incomplete = start < len(symbols)
    if last_incomplete:
        phrases.append((start, len(symbols) - start))
        pointers.append(node.index)
    return ParsedPhrases(
        phrases=tuple(phrases),
        pointers=tuple(pointers),
        last_incomplete=last_incomplete,
        dictionary=root,
    )


@dataclass(frozen=True)
class ParseResult:
    """Incremental parse of x. `c` counts the distinct complete phrases;
    `phrases` also lists a trailing incomplete phrase when there is one."""

    x: SymbolSequence
    phrases: Tuple[Phrase, ...]
    pointers: Tuple[int, ...]
    c: int
    last_incomplete: bool
    dictionary: TrieNode = field(compare=False, repr=False)

    @property
    def complete_phrases(self) -> Tuple[Phrase, ...]:
        return self.phrases[: self.c]

    def phrase_symbols(self, idx: int) -> Tuple[int, ...]:
        start, length = self.phrases[idx]
        return self.x.window(start, length)

    def phrase_texts(self) -> List[str]:
        return [
            "".join(self.x.alphabet[s] for s in self.phrase_symbols(i))
            for i in range(len(self.phrases))
        ]


def lz78_parse(x: SymbolSequence) -> ParseResult:
    parsed = incremental_parse(x.symbols)
    c = len(parsed.phrases) - (1 if parsed.last_incomplete else 0)
    return ParseResult(
        x=x,
        phrases=parsed.phrases,
        pointers=parsed.pointers,
        c=c,
        last_incomplete=parsed.last_incomplete,
        dictionary=parsed.dictionary,
    )
