"""Compress-then-pad encryption schemes.

Bitwise schemes (raw, LZ78, conditional LZ) XOR a compressed bitstream with
a key of the same length. Type schemes send the type class header in the
clear and hide the rank of x inside its class with a modular pad, so the
body is uniform over the class whatever x is."""

import math
import random
import struct
import orjson
from enum import Enum
from pathlib import Path
from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Tuple, Union
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from finsec import settings
from finsec.exc import FinsecBudgetError, FinsecIntegrityError, FinsecUsageError
from finsec.exc import FinsecValidationError
from finsec.logs import get_logger
from finsec.util import Bits, bits_to_hex, bits_to_int, ceil_log2, check_bits
from finsec.util import hex_to_bits, int_to_bits, xor_bits
from finsec.codec import CodeKind, decode_header, two_part_encode
from finsec.fsm.builders import build_shift_register_fsm
from finsec.fsm.loader import parse_fsm
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence, parse_alphabet
from finsec.lz.coding import conditional_lz_decode, conditional_lz_encode
from finsec.lz.coding import lz78_decode, lz78_encode
from finsec.typeclass import ClassIndex, TypeClassDescriptor, class_index

log = get_logger(__name__)

MAGIC = b"FSCG"
FORMAT_VERSION = "1"

Key = Union[str, int]


class SchemeKind(str, Enum):
    RAW_OTP = "raw-otp"
    LZ78_OTP = "lz78-otp"
    TYPE_OTP = "type-otp"
    BLOCK_TYPE_OTP = "block-type-otp"
    MARKOV_TYPE_OTP = "markov-type-otp"
    CONDLZ_OTP = "condlz-otp"

    @property
    def is_modular(self) -> bool:
        return self in (
            SchemeKind.TYPE_OTP,
            SchemeKind.BLOCK_TYPE_OTP,
            SchemeKind.MARKOV_TYPE_OTP,
        )


class SchemeSpec(BaseModel):
    """An encryption scheme with its parameters. `keys` restricts a bitwise
    scheme to an explicit key set instead of all keys of the pad length."""

    model_config = ConfigDict(frozen=True)

    scheme: SchemeKind
    alphabet: Optional[Tuple[str, ...]] = None
    fsm: Optional[FsmSpec] = None
    block: Optional[int] = None
    order: Optional[int] = None
    keys: Optional[Tuple[str, ...]] = None

    @model_validator(mode="after")
    def check_params(self) -> "SchemeSpec":
        if self.alphabet is None and self.fsm is None:
            raise ValueError("alphabet: required when no machine is given")
        if self.alphabet is not None and self.fsm is not None:
            if tuple(self.alphabet) != self.fsm.alphabet:
                raise ValueError("alphabet: does not match the machine")
        if self.scheme in (SchemeKind.TYPE_OTP, SchemeKind.BLOCK_TYPE_OTP):
            if self.fsm is None:
                raise ValueError(f"fsm: required by {self.scheme.value}")
        if self.scheme == SchemeKind.TYPE_OTP and not self.fsm.is_time_invariant:  # type: ignore[union-attr]
            raise ValueError("fsm: type-otp needs a time-invariant machine")
        if self.scheme == SchemeKind.BLOCK_TYPE_OTP:
            if self.block is None or self.block < 1:
                raise ValueError("block: a positive block length is required")
        if self.scheme == SchemeKind.MARKOV_TYPE_OTP:
            if self.order is None or self.order < 0:
                raise ValueError("order: a Markov order >= 0 is required")
        if self.keys is not None:
            if self.scheme.is_modular:
                raise ValueError("keys: explicit key sets apply to bitwise pads")
            for idx, key in enumerate(self.keys):
                if any(b not in "01" for b in key):
                    raise ValueError(f"keys[{idx}]: not a bit string")
        return self

    @property
    def labels(self) -> Tuple[str, ...]:
        if self.fsm is not None:
            return self.fsm.alphabet
        return tuple(self.alphabet or ())

    @property
    def needs_si(self) -> bool:
        if self.scheme == SchemeKind.CONDLZ_OTP:
            return True
        return self.scheme.is_modular and self.fsm is not None and self.fsm.beta > 0

    def machine(self) -> FsmSpec:
        """The machine whose type classes a modular scheme pads over."""
        if self.scheme == SchemeKind.MARKOV_TYPE_OTP:
            order = self.order or 0
            return build_shift_register_fsm(order, len(self.labels), self.labels)
        if self.fsm is None:
            raise FinsecUsageError(f"{self.scheme.value} has no machine")
        return self.fsm

    @property
    def code_kind(self) -> CodeKind:
        if self.scheme == SchemeKind.MARKOV_TYPE_OTP:
            return CodeKind.MARKOV
        if self.scheme == SchemeKind.BLOCK_TYPE_OTP:
            return CodeKind.SI_BLOCK if self.needs_si else CodeKind.BLOCK
        if self.scheme == SchemeKind.TYPE_OTP:
            return CodeKind.SI_SYMBOL_STATE if self.needs_si else CodeKind.SYMBOL_STATE
        raise FinsecUsageError(f"{self.scheme.value} is not a type scheme")

    @property
    def block_length(self) -> int:
        return self.block or 1


def parse_scheme(data: Dict[str, Any]) -> SchemeSpec:
    """Build a scheme from its file form; `fsm` uses the machine file
    layout and `alphabet` the usual alphabet declaration."""
    if not isinstance(data, dict):
        raise FinsecValidationError("A scheme must be a mapping", path="scheme")
    values = dict(data)
    if values.get("fsm") is not None:
        values["fsm"] = parse_fsm(values["fsm"])
    if values.get("alphabet") is not None:
        values["alphabet"] = parse_alphabet(values["alphabet"])
    try:
        return SchemeSpec.model_validate(values)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"])
        raise FinsecValidationError(f"Invalid scheme: {err['msg']}", path=path)


@dataclass(frozen=True)
class KeySpace:
    """All bit strings of one length, an explicit list of them, or the
    residues modulo a class size."""

    bits: int = 0
    modulus: Optional[int] = None
    keys: Optional[Tuple[str, ...]] = None

    @property
    def size(self) -> int:
        if self.keys is not None:
            return len(self.keys)
        if self.modulus is not None:
            return self.modulus
        return 1 << self.bits

    @property
    def log_size(self) -> float:
        if self.keys is None and self.modulus is None:
            return float(self.bits)
        if self.size <= 1:
            return 0.0
        return math.log2(self.size)

    def contains(self, key: Key) -> bool:
        if self.modulus is not None:
            return isinstance(key, int) and 0 <= key < self.modulus
        if not isinstance(key, str):
            return False
        if self.keys is not None:
            return key in self.keys
        return len(key) == self.bits and all(b in "01" for b in key)

    def enumerate(self, budget: Optional[int] = None) -> Iterator[Key]:
        budget = settings.KEY_BUDGET if budget is None else budget
        if self.size > budget:
            raise FinsecBudgetError(
                "Key space is too large to enumerate",
                budget=budget,
                required=self.size,
            )
        if self.keys is not None:
            yield from self.keys
        elif self.modulus is not None:
            yield from range(self.modulus)
        else:
            for value in range(1 << self.bits):
                yield int_to_bits(value, self.bits)


class Cryptogram(BaseModel):
    """What the eavesdropper sees: the clear header of a type scheme, the
    padded body and the plaintext length. Modular bodies hold the residue
    in ⌈log₂ M⌉ bits."""

    model_config = ConfigDict(frozen=True)

    scheme: SchemeKind
    n: int
    header: str = ""
    body: str
    modulus: Optional[int] = None

    @model_validator(mode="after")
    def check_bits(self) -> "Cryptogram":
        for name in ("header", "body"):
            if any(b not in "01" for b in getattr(self, name)):
                raise ValueError(f"{name}: not a bit string")
        if self.scheme.is_modular and self.modulus is None:
            raise ValueError("modulus: required by modular schemes")
        return self

    def to_bytes(self) -> bytes:
        fields = [
            FORMAT_VERSION,
            self.scheme.value,
            str(self.n),
            "" if self.modulus is None else str(self.modulus),
            bits_to_hex(self.header),
            bits_to_hex(self.body),
        ]
        out = [MAGIC]
        for field in fields:
            data = field.encode("ascii")
            out.append(struct.pack(">I", len(data)))
            out.append(data)
        return b"".join(out)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Cryptogram":
        if not data.startswith(MAGIC):
            raise FinsecIntegrityError("Not a cryptogram: bad magic tag")
        fields: List[str] = []
        pos = len(MAGIC)
        while pos < len(data):
            if pos + 4 > len(data):
                raise FinsecIntegrityError("Truncated cryptogram field length")
            (size,) = struct.unpack(">I", data[pos : pos + 4])
            pos += 4
            if pos + size > len(data):
                raise FinsecIntegrityError("Truncated cryptogram field")
            fields.append(data[pos : pos + size].decode("ascii", errors="replace"))
            pos += size
        if len(fields) != 6 or fields[0] != FORMAT_VERSION:
            raise FinsecIntegrityError("Unsupported cryptogram layout")
        _, scheme, n, modulus, header, body = fields
        try:
            return cls(
                scheme=SchemeKind(scheme),
                n=int(n),
                modulus=int(modulus) if len(modulus) else None,
                header=hex_to_bits(header),
                body=hex_to_bits(body),
            )
        except (ValueError, ValidationError) as exc:
            raise FinsecIntegrityError(f"Invalid cryptogram: {exc}") from exc


def write_cryptogram(path: Path, cryptogram: Cryptogram) -> None:
    path.write_bytes(cryptogram.to_bytes())


def read_cryptogram(path: Path) -> Cryptogram:
    if not path.is_file():
        raise FinsecValidationError(f"File not found: {path}", path=str(path))
    return Cryptogram.from_bytes(path.read_bytes())


def otp(bits: Bits, key: Bits) -> Bits:
    """Bitwise modulo-2 sum of payload and key."""
    check_bits(bits)
    check_bits(key)
    return xor_bits(bits, key)


def symbol_bits(x: SymbolSequence) -> Bits:
    """x written out with ⌈log₂ α⌉ bits per symbol."""
    width = ceil_log2(x.alpha)
    return "".join(int_to_bits(sym, width) for sym in x.symbols)


def bits_to_symbols(bits: Bits, alphabet: Tuple[str, ...], n: int) -> SymbolSequence:
    width = ceil_log2(len(alphabet))
    if len(bits) != n * width:
        raise FinsecIntegrityError(f"Expected {n * width} bits, got {len(bits)}")
    symbols = []
    for i in range(n):
        sym = bits_to_int(bits[i * width : (i + 1) * width])
        if sym >= len(alphabet):
            raise FinsecIntegrityError(f"Symbol {sym} at position {i} outside alphabet")
        symbols.append(sym)
    return SymbolSequence(alphabet, tuple(symbols))


def _check_inputs(
    spec: SchemeSpec, x: SymbolSequence, y: Optional[SymbolSequence]
) -> None:
    if x.alphabet != spec.labels:
        raise FinsecValidationError("Plaintext alphabet does not match the scheme")
    if spec.needs_si and y is None:
        raise FinsecUsageError(f"{spec.scheme.value} needs side information")
    if not spec.needs_si and y is not None:
        raise FinsecUsageError(f"{spec.scheme.value} takes no side information")
    if y is not None and len(y) != len(x):
        raise FinsecValidationError(f"Length mismatch: {len(x)} vs {len(y)}")


def _payload(spec: SchemeSpec, x: SymbolSequence, y: Optional[SymbolSequence]) -> Bits:
    if spec.scheme == SchemeKind.RAW_OTP:
        return symbol_bits(x)
    if spec.scheme == SchemeKind.LZ78_OTP:
        return lz78_encode(x)
    if spec.scheme == SchemeKind.CONDLZ_OTP and y is not None:
        return conditional_lz_encode(x, y)
    raise FinsecUsageError(f"{spec.scheme.value} is not a bitwise scheme")


def key_space(
    spec: SchemeSpec, x: SymbolSequence, y: Optional[SymbolSequence] = None
) -> KeySpace:
    """The keys the scheme consumes when encrypting x."""
    _check_inputs(spec, x, y)
    if spec.scheme.is_modular:
        cw = two_part_encode(spec.machine(), spec.code_kind, x, y, spec.block_length)
        return KeySpace(modulus=cw.size)
    payload = _payload(spec, x, y)
    return _bit_space(spec, len(payload))


def _bit_space(spec: SchemeSpec, bits: int) -> KeySpace:
    if spec.keys is not None:
        return KeySpace(bits=bits, keys=tuple(k for k in spec.keys if len(k) == bits))
    return KeySpace(bits=bits)


def cryptogram_key_space(spec: SchemeSpec, cryptogram: Cryptogram) -> KeySpace:
    """The keys an observer of the cryptogram must consider."""
    if spec.scheme.is_modular:
        return KeySpace(modulus=cryptogram.modulus)
    return _bit_space(spec, len(cryptogram.body))


def encrypt(
    spec: SchemeSpec,
    x: SymbolSequence,
    key: Key,
    y: Optional[SymbolSequence] = None,
) -> Cryptogram:
    _check_inputs(spec, x, y)
    if spec.scheme.is_modular:
        cw = two_part_encode(spec.machine(), spec.code_kind, x, y, spec.block_length)
        space = KeySpace(modulus=cw.size)
        if not space.contains(key):
            raise FinsecValidationError(f"Key {key!r} outside 0..{cw.size - 1}")
        residue = (cw.rank + int(key)) % cw.size
        return Cryptogram(
            scheme=spec.scheme,
            n=len(x),
            header=cw.header,
            body=int_to_bits(residue, ceil_log2(cw.size)),
            modulus=cw.size,
        )
    payload = _payload(spec, x, y)
    space = _bit_space(spec, len(payload))
    if not space.contains(key):
        raise FinsecValidationError(
            f"Key is not in the key space of {len(payload)}-bit pads"
        )
    return Cryptogram(scheme=spec.scheme, n=len(x), body=otp(payload, str(key)))


class _ModularOpening(object):
    """The decoded type class and residue of a modular cryptogram, shared by
    every key tried against it."""

    def __init__(
        self, spec: SchemeSpec, cryptogram: Cryptogram, y: Optional[SymbolSequence]
    ) -> None:
        fsm = spec.machine()
        kind = spec.code_kind
        block = spec.block_length
        if kind.count_kind.is_block and cryptogram.n % block:
            raise FinsecIntegrityError(
                f"Block length {block} does not divide {cryptogram.n}"
            )
        counts = decode_header(fsm, kind, cryptogram.n, cryptogram.header, block)
        desc = TypeClassDescriptor(fsm=fsm, counts=counts, y=y)
        self.index: ClassIndex = class_index(desc)
        self.modulus = self.index.size
        if self.modulus == 0 or cryptogram.modulus != self.modulus:
            raise FinsecIntegrityError("Cryptogram modulus does not match its header")
        if len(cryptogram.body) != ceil_log2(self.modulus):
            raise FinsecIntegrityError("Cryptogram body has the wrong width")
        self.residue = bits_to_int(cryptogram.body)
        if self.residue >= self.modulus:
            raise FinsecIntegrityError("Cryptogram residue exceeds its modulus")
        self.alphabet = fsm.alphabet

    def open(self, key: Key) -> SymbolSequence:
        if not isinstance(key, int) or not 0 <= key < self.modulus:
            raise FinsecValidationError(f"Key {key!r} outside 0..{self.modulus - 1}")
        rank = (self.residue - key) % self.modulus
        return SymbolSequence(self.alphabet, self.index.unrank(rank))


def _open_bitwise(
    spec: SchemeSpec,
    cryptogram: Cryptogram,
    key: Key,
    y: Optional[SymbolSequence],
) -> SymbolSequence:
    space = _bit_space(spec, len(cryptogram.body))
    if not space.contains(key):
        raise FinsecValidationError(
            f"Key is not in the key space of {len(cryptogram.body)}-bit pads"
        )
    payload = otp(cryptogram.body, str(key))
    labels = spec.labels
    if spec.scheme == SchemeKind.RAW_OTP:
        return bits_to_symbols(payload, labels, cryptogram.n)
    if spec.scheme == SchemeKind.LZ78_OTP:
        x = lz78_decode(payload, labels)
    elif y is not None:
        x = conditional_lz_decode(payload, y, labels)
    else:
        raise FinsecUsageError(f"{spec.scheme.value} needs side information")
    if len(x) != cryptogram.n:
        raise FinsecIntegrityError(
            f"Decrypted {len(x)} symbols, the cryptogram declares {cryptogram.n}"
        )
    return x


def _check_cryptogram(
    spec: SchemeSpec, cryptogram: Cryptogram, y: Optional[SymbolSequence]
) -> None:
    if cryptogram.scheme != spec.scheme:
        raise FinsecIntegrityError(
            f"Cryptogram was made by {cryptogram.scheme.value}, not {spec.scheme.value}"
        )
    if spec.needs_si and y is None:
        raise FinsecUsageError(f"{spec.scheme.value} needs side information")
    if y is not None and len(y) != cryptogram.n:
        raise FinsecValidationError(
            f"Side information length {len(y)} differs from {cryptogram.n}"
        )


def decrypt(
    spec: SchemeSpec,
    cryptogram: Cryptogram,
    key: Key,
    y: Optional[SymbolSequence] = None,
) -> SymbolSequence:
    _check_cryptogram(spec, cryptogram, y)
    if spec.scheme.is_modular:
        return _ModularOpening(spec, cryptogram, y).open(key)
    return _open_bitwise(spec, cryptogram, key, y)


@dataclass(frozen=True)
class Preimage:
    """T⁻¹(W): the plaintexts some key maps to the cryptogram. `invalid`
    counts keys under which the cryptogram does not decrypt."""

    members: FrozenSet[SymbolSequence]
    keys: int
    invalid: int

    @property
    def size(self) -> int:
        return len(self.members)


def iter_decryptions(
    spec: SchemeSpec,
    cryptogram: Cryptogram,
    y: Optional[SymbolSequence] = None,
    budget: Optional[int] = None,
) -> Iterator[Tuple[Key, Optional[SymbolSequence]]]:
    """Every key of the cryptogram's key space in order, with its plaintext
    or None where decryption is undefined."""
    _check_cryptogram(spec, cryptogram, y)
    space = cryptogram_key_space(spec, cryptogram)
    if spec.scheme.is_modular:
        opening = _ModularOpening(spec, cryptogram, y)
        for key in space.enumerate(budget):
            yield key, opening.open(key)
        return
    for key in space.enumerate(budget):
        try:
            yield key, _open_bitwise(spec, cryptogram, key, y)
        except FinsecIntegrityError:
            yield key, None


def preimage_set(
    spec: SchemeSpec,
    cryptogram: Cryptogram,
    y: Optional[SymbolSequence] = None,
    budget: Optional[int] = None,
) -> Preimage:
    members = set()
    keys = 0
    invalid = 0
    for _, x in iter_decryptions(spec, cryptogram, y, budget):
        keys += 1
        if x is None:
            invalid += 1
        else:
            members.add(x)
    log.debug("Preimage set", scheme=spec.scheme.value, keys=keys, size=len(members))
    return Preimage(members=frozenset(members), keys=keys, invalid=invalid)


def key_rate(
    spec: SchemeSpec, x: SymbolSequence, y: Optional[SymbolSequence] = None
) -> float:
    """log₂|key space| / n in bits per symbol."""
    if not len(x):
        return 0.0
    return key_space(spec, x, y).log_size / len(x)


def draw_key(space: KeySpace, seed: Optional[int] = None) -> Key:
    """A key drawn uniformly from the space by a generator seeded with
    `seed` (default: the configured seed)."""
    rng = random.Random(settings.SEED if seed is None else seed)
    if space.keys is not None:
        if not len(space.keys):
            raise FinsecValidationError("Cannot draw from an empty key set")
        return rng.choice(space.keys)
    if space.modulus is not None:
        return rng.randrange(space.modulus)
    if space.bits == 0:
        return ""
    return int_to_bits(rng.getrandbits(space.bits), space.bits)


def write_key_file(
    path: Path, scheme: SchemeKind, key: Key, seed: Optional[int] = None
) -> None:
    data = {
        "scheme": scheme.value,
        "seed": seed,
        "modular": isinstance(key, int),
        "key": str(key),
    }
    path.write_bytes(orjson.dumps(data, option=orjson.OPT_INDENT_2))


def read_key_file(path: Path) -> Key:
    if not path.is_file():
        raise FinsecValidationError(f"File not found: {path}", path=str(path))
    try:
        data = orjson.loads(path.read_bytes())
        key = str(data["key"])
        if data.get("modular"):
            return int(key)
    except (orjson.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FinsecValidationError(f"Invalid key file {path}: {exc}") from exc
    check_bits(key)
    return key
