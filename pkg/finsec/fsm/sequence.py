from itertools import product
from pathlib import Path
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple, Union

from finsec.exc import FinsecValidationError

BYTES = "bytes"
BYTE_ALPHABET: Tuple[str, ...] = tuple(f"{i:02x}" for i in range(256))
BINARY: Tuple[str, ...] = ("0", "1")
NEWLINES = ("\n", "\r")

AlphabetLike = Union[str, Sequence[str]]


def parse_alphabet(spec: AlphabetLike) -> Tuple[str, ...]:
    """Turn an alphabet declaration into an ordered tuple of symbol labels.
    A string declares one symbol per character (`"01"`), the word `bytes`
    declares the 256 byte values."""
    if isinstance(spec, str):
        if spec == BYTES:
            return BYTE_ALPHABET
        labels = tuple(spec)
    else:
        labels = tuple(spec)
    if not len(labels):
        raise FinsecValidationError("Alphabet must contain at least one symbol")
    if len(set(labels)) != len(labels):
        raise FinsecValidationError(f"Alphabet has repeated symbols: {labels!r}")
    return labels


@dataclass(frozen=True)
class SymbolSequence:
    """A finite plaintext (or side information) sequence, stored as indices
    into an ordered alphabet."""

    alphabet: Tuple[str, ...]
    symbols: Tuple[int, ...]

    def __post_init__(self) -> None:
        if not len(self.alphabet):
            raise FinsecValidationError("Alphabet must contain at least one symbol")
        size = len(self.alphabet)
        for idx, sym in enumerate(self.symbols):
            if sym < 0 or sym >= size:
                raise FinsecValidationError(
                    f"Symbol index {sym} outside alphabet of size {size}",
                    path=f"symbols[{idx}]",
                )

    @property
    def alpha(self) -> int:
        return len(self.alphabet)

    def __len__(self) -> int:
        return len(self.symbols)

    def __iter__(self) -> Iterator[int]:
        return iter(self.symbols)

    def window(self, start: int, length: int) -> Tuple[int, ...]:
        return self.symbols[start : start + length]

    def is_bytes(self) -> bool:
        return self.alphabet == BYTE_ALPHABET

    @property
    def text(self) -> str:
        return "".join(self.alphabet[s] for s in self.symbols)

    def to_bytes(self) -> bytes:
        if self.is_bytes():
            return bytes(self.symbols)
        return self.text.encode("utf-8")

    def with_symbols(self, symbols: Sequence[int]) -> "SymbolSequence":
        return SymbolSequence(self.alphabet, tuple(symbols))

    def __repr__(self) -> str:
        if len(self.symbols) > 32:
            return f"<SymbolSequence n={len(self)} alpha={self.alpha}>"
        return f"<SymbolSequence {self.text!r}>"

    @classmethod
    def from_text(
        cls, text: str, alphabet: AlphabetLike, keep_newlines: bool = True
    ) -> "SymbolSequence":
        labels = parse_alphabet(alphabet)
        index = {label: i for i, label in enumerate(labels)}
        symbols = []
        offset = 0
        for char in text:
            width = len(char.encode("utf-8"))
            if not keep_newlines and char in NEWLINES:
                offset += width
                continue
            sym = index.get(char)
            if sym is None:
                raise FinsecValidationError(
                    f"Symbol {char!r} at byte offset {offset} is not in the alphabet",
                    path=f"byte[{offset}]",
                )
            symbols.append(sym)
            offset += width
        return cls(labels, tuple(symbols))

    @classmethod
    def from_bytes(
        cls, data: bytes, alphabet: AlphabetLike, keep_newlines: bool = True
    ) -> "SymbolSequence":
        labels = parse_alphabet(alphabet)
        if labels == BYTE_ALPHABET:
            return cls(labels, tuple(data))
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FinsecValidationError(
                f"Input is not UTF-8 at byte offset {exc.start}",
                path=f"byte[{exc.start}]",
            ) from exc
        return cls.from_text(text, labels, keep_newlines=keep_newlines)

    @classmethod
    def binary(cls, text: str) -> "SymbolSequence":
        return cls.from_text(text, BINARY)


def read_sequence(
    path: Path, alphabet: AlphabetLike, keep_newlines: bool = False
) -> SymbolSequence:
    if not path.is_file():
        raise FinsecValidationError(f"File not found: {path}", path=str(path))
    return SymbolSequence.from_bytes(path.read_bytes(), alphabet, keep_newlines)


def all_sequences(
    alphabet: Tuple[str, ...], n: int, start: int = 0, stop: Optional[int] = None
) -> Iterator[Tuple[int, ...]]:
    """All symbol tuples of length n in lexicographic order, optionally only
    those with rank in [start, stop)."""
    alpha = len(alphabet)
    total = alpha**n
    stop = total if stop is None else min(stop, total)
    if start == 0 and stop == total:
        yield from product(range(alpha), repeat=n)
        return
    for rank in range(start, stop):
        yield rank_to_tuple(rank, alpha, n)


def rank_to_tuple(rank: int, alpha: int, n: int) -> Tuple[int, ...]:
    out = [0] * n
    for i in range(n - 1, -1, -1):
        rank, out[i] = divmod(rank, alpha)
    return tuple(out)
