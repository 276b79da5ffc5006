"""Brute-force ground truth for the secrecy model: acceptance sets of
discriminators, the perfect-secrecy verdict for a cryptogram, and the
eavesdropper's key-by-key guessing loop."""

import math
from enum import Enum
from pathlib import Path
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from finsec import settings
from finsec.exc import FinsecBudgetError, FinsecValidationError
from finsec.logs import get_logger
from finsec.util import bits_to_hex
from finsec.crypto import Key, SchemeSpec, draw_key, encrypt
from finsec.crypto import iter_decryptions, key_space, parse_scheme, preimage_set
from finsec.crypto import Cryptogram
from finsec.entropy import cond_entropy
from finsec.fsm.builders import build_dk_discriminator, build_shift_register_fsm
from finsec.fsm.builders import single_state_fsm
from finsec.fsm.counts import CountKind, CountTable, collect_block_counts
from finsec.fsm.counts import collect_counts
from finsec.fsm.loader import load_data_file, parse_fsm
from finsec.fsm.machine import FsmSpec, accepts
from finsec.fsm.sequence import SymbolSequence, all_sequences, parse_alphabet

log = get_logger(__name__)

Symbols = Tuple[int, ...]


class Discriminator(object):
    """Accepts or rejects candidate plaintexts of one alphabet."""

    kind = "abstract"

    def __init__(self, alphabet: Sequence[str]) -> None:
        self.alphabet = tuple(alphabet)

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        raise NotImplementedError()

    def accepts_sequence(
        self, x: SymbolSequence, y: Optional[SymbolSequence] = None
    ) -> bool:
        if x.alphabet != self.alphabet:
            raise FinsecValidationError("Sequence alphabet differs from the discriminator's")
        return self.accepts(x.symbols, None if y is None else y.symbols)

    def __repr__(self) -> str:
        return f"<{type(self).__name__}({self.kind})>"


class AlwaysAccept(Discriminator):
    kind = "always"

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        return True


class OutputDiscriminator(Discriminator):
    """Rejects on the first output 1 of the machine."""

    kind = "output"

    def __init__(self, fsm: FsmSpec) -> None:
        super().__init__(fsm.alphabet)
        if not fsm.has_output:
            raise FinsecValidationError("Discriminator requires an output table")
        self.fsm = fsm

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        return accepts(self.fsm, symbols, si if self.fsm.beta > 0 else None)


class CounterDiscriminator(Discriminator):
    """Accepts exactly the sequences that leave a target count table."""

    kind = "counter"

    def __init__(self, fsm: FsmSpec, target: CountTable) -> None:
        super().__init__(fsm.alphabet)
        self.fsm = fsm
        self.target = target

    @classmethod
    def matching(
        cls,
        fsm: FsmSpec,
        x: SymbolSequence,
        y: Optional[SymbolSequence] = None,
        cyclic: bool = False,
        block: Optional[int] = None,
    ) -> "CounterDiscriminator":
        si = y if fsm.beta > 0 else None
        if block is not None:
            return cls(fsm, collect_block_counts(fsm, x, block, si))
        return cls(fsm, collect_counts(fsm, x, si, cyclic=cyclic))

    def _table(self, symbols: Symbols, si: Optional[Symbols]) -> CountTable:
        x = SymbolSequence(self.alphabet, symbols)
        y = None
        if si is not None and self.fsm.beta > 0:
            y = SymbolSequence(self.fsm.si_alphabet, si)
        if self.target.kind.is_block:
            return collect_block_counts(self.fsm, x, self.target.block, y)
        return collect_counts(self.fsm, x, y, cyclic=self.target.cyclic)

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        if len(symbols) != self.target.n:
            return False
        table = self._table(symbols, si)
        return table.counts == self.target.counts and table.laps == self.target.laps


class EntropyLevelDiscriminator(CounterDiscriminator):
    """Accepts the sequences whose empirical conditional entropy under the
    machine equals a level H_0, as inferred from a compressed length."""

    kind = "entropy-level"

    def __init__(
        self, fsm: FsmSpec, level: float, tolerance: Optional[float] = None
    ) -> None:
        template = CountTable(
            kind=CountKind.SYMBOL_STATE,
            alpha=fsm.alpha,
            states=fsm.states,
            n=0,
            counts={},
        )
        super().__init__(fsm, template)
        self.level = level
        self.tolerance = settings.ENTROPY_TOLERANCE if tolerance is None else tolerance

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        if not len(symbols):
            return abs(self.level) <= self.tolerance
        table = self._table(symbols, None)
        return abs(cond_entropy(table) - self.level) <= self.tolerance


class EmbeddingDiscriminator(CounterDiscriminator):
    """The counter form of an output-table machine: rejects iff some
    (symbol, state) pair on which the machine outputs 1 occurs at all."""

    kind = "embedding"

    def __init__(self, fsm: FsmSpec) -> None:
        if not fsm.has_output or not fsm.is_time_invariant:
            raise FinsecValidationError(
                "Embedding needs a time-invariant machine with an output table"
            )
        template = CountTable(
            kind=CountKind.SI_SYMBOL_STATE if fsm.beta else CountKind.SYMBOL_STATE,
            alpha=fsm.alpha,
            states=fsm.states,
            n=0,
            counts={},
            beta=fsm.beta,
        )
        super().__init__(fsm, template)
        self.forbidden = set()
        for key in template.domain():
            a, b, z = (key[0], 0, key[1]) if len(key) == 2 else key
            if fsm.emits(z, a, b):
                self.forbidden.add(key)

    def accepts(self, symbols: Symbols, si: Optional[Symbols] = None) -> bool:
        table = self._table(symbols, si)
        return not any(table.get(key) >= 1 for key in self.forbidden)


def _scan_shard(
    disc: Discriminator,
    n: int,
    si: Optional[Symbols],
    start: int,
    stop: int,
) -> List[Symbols]:
    return [
        symbols
        for symbols in all_sequences(disc.alphabet, n, start, stop)
        if disc.accepts(symbols, si)
    ]


def enumerate_acceptance_set(
    disc: Discriminator,
    n: int,
    y: Optional[SymbolSequence] = None,
    budget: Optional[int] = None,
    jobs: Optional[int] = None,
) -> FrozenSet[SymbolSequence]:
    """A_n: every length-n sequence the discriminator accepts. The sequence
    space is cut into contiguous rank shards, scanned in worker processes
    when jobs > 1 and merged by union."""
    budget = settings.SEQUENCE_BUDGET if budget is None else budget
    jobs = settings.JOBS if jobs is None else jobs
    total = len(disc.alphabet) ** n
    if total > budget:
        raise FinsecBudgetError(
            f"Acceptance set enumeration over {total} sequences exceeds the budget",
            budget=budget,
            required=total,
        )
    if y is not None and len(y) != n:
        raise FinsecValidationError(f"Side information length {len(y)} differs from {n}")
    si = None if y is None else y.symbols
    shards = jobs * 4 if jobs > 1 else 1
    width = math.ceil(total / shards)
    bounds = [(i * width, min((i + 1) * width, total)) for i in range(shards)]
    found: set = set()
    if jobs > 1:
        log.info("Scanning sequence space", total=total, shards=shards, jobs=jobs)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_scan_shard, disc, n, si, start, stop)
                for start, stop in bounds
                if start < stop
            ]
            for future in futures:
                found.update(future.result())
    else:
        found.update(_scan_shard(disc, n, si, 0, total))
    return frozenset(SymbolSequence(disc.alphabet, s) for s in found)


def _sort_key(x: SymbolSequence) -> Symbols:
    return x.symbols


class SecrecyVerdict(BaseModel):
    """perfectly_secure holds iff A_n ⊆ T⁻¹(W), that is iff
    |A_n(W)| = |A_n| where A_n(W) = A_n ∩ T⁻¹(W)."""

    model_config = ConfigDict(frozen=True)

    acceptance_size: int
    preimage_size: int
    accepted_preimage_size: int
    perfectly_secure: bool
    witness: Optional[str] = None
    key: str
    invalid_keys: int = 0
    cryptogram: Dict[str, Any]
    key_independent: Optional[bool] = None
    candidates: List[Dict[str, Any]] = []


def _cryptogram_summary(cryptogram: Cryptogram) -> Dict[str, Any]:
    return {
        "scheme": cryptogram.scheme.value,
        "n": cryptogram.n,
        "header": cryptogram.header,
        "body": bits_to_hex(cryptogram.body),
        "body_bits": len(cryptogram.body),
        "modulus": cryptogram.modulus,
    }


def check_perfect_secrecy(
    disc: Discriminator,
    spec: SchemeSpec,
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    key: Optional[Key] = None,
    seed: Optional[int] = None,
    all_keys: bool = False,
    budget: Optional[int] = None,
    key_budget: Optional[int] = None,
    jobs: Optional[int] = None,
) -> SecrecyVerdict:
    """Encrypt x, take the preimage set of the cryptogram and compare it with
    the acceptance set. With `all_keys`, every key of the space is tried and
    the verdict holds only if every cryptogram is secure."""
    if not disc.accepts_sequence(x, y):
        raise FinsecValidationError("The discriminator rejects x: inconsistent scenario")
    si = y if spec.needs_si else None
    if key is None:
        key = draw_key(key_space(spec, x, si), seed)
    cryptogram = encrypt(spec, x, key, si)
    acceptance = enumerate_acceptance_set(disc, len(x), y, budget=budget, jobs=jobs)
    preimage = preimage_set(spec, cryptogram, si, budget=key_budget)
    accepted = acceptance & preimage.members
    missing = sorted(acceptance - preimage.members, key=_sort_key)
    secure = len(accepted) == len(acceptance)

    key_independent: Optional[bool] = None
    if all_keys:
        key_independent = True
        for other in key_space(spec, x, si).enumerate(key_budget):
            other_pre = preimage_set(spec, encrypt(spec, x, other, si), si, key_budget)
            if other_pre.members != preimage.members:
                key_independent = False
            if not acceptance <= other_pre.members:
                secure = False
    log.info(
        "Perfect secrecy verdict",
        scheme=spec.scheme.value,
        acceptance=len(acceptance),
        preimage=preimage.size,
        secure=secure,
    )
    return SecrecyVerdict(
        acceptance_size=len(acceptance),
        preimage_size=preimage.size,
        accepted_preimage_size=len(accepted),
        perfectly_secure=secure,
        witness=missing[0].text if missing else None,
        key=str(key),
        invalid_keys=preimage.invalid,
        cryptogram=_cryptogram_summary(cryptogram),
        key_independent=key_independent,
    )


class Candidate(BaseModel):
    """An accepted plaintext of the guessing loop, with the first key that
    produced it and how many keys did."""

    model_config = ConfigDict(frozen=True)

    plaintext: str
    key: str
    keys: int = 1


def guessing_attack(
    spec: SchemeSpec,
    cryptogram: Cryptogram,
    disc: Discriminator,
    y: Optional[SymbolSequence] = None,
    budget: Optional[int] = None,
) -> List[Candidate]:
    """Try every key in order, decrypt, and keep what the discriminator
    accepts; repeated plaintexts are collapsed onto their first key."""
    si = y if spec.needs_si else None
    order: List[SymbolSequence] = []
    first: Dict[SymbolSequence, Key] = {}
    hits: Dict[SymbolSequence, int] = {}
    for key, x in iter_decryptions(spec, cryptogram, si, budget):
        if x is None or not disc.accepts_sequence(x, y):
            continue
        if x not in first:
            order.append(x)
            first[x] = key
            hits[x] = 0
        hits[x] += 1
    return [Candidate(plaintext=x.text, key=str(first[x]), keys=hits[x]) for x in order]


class DiscriminatorKind(str, Enum):
    ALWAYS = "always"
    OUTPUT = "output"
    DK = "dk"
    COUNTER = "counter"
    BLOCK_COUNTER = "block-counter"
    MARKOV_COUNTER = "markov-counter"
    ENTROPY_LEVEL = "entropy-level"
    EMBEDDING = "embedding"


class DiscriminatorSpec(BaseModel):
    """How a scenario file describes the eavesdropper. Counter kinds match
    the counts of `reference`, or of x when no reference is given."""

    model_config = ConfigDict(frozen=True)

    kind: DiscriminatorKind
    fsm: Optional[FsmSpec] = None
    alphabet: Optional[Tuple[str, ...]] = None
    d: Optional[int] = None
    k: Optional[int] = None
    reference: Optional[str] = None
    block: Optional[int] = None
    order: Optional[int] = None
    level: Optional[float] = None

    @model_validator(mode="after")
    def check_params(self) -> "DiscriminatorSpec":
        needs_fsm = (
            DiscriminatorKind.OUTPUT,
            DiscriminatorKind.EMBEDDING,
            DiscriminatorKind.ENTROPY_LEVEL,
        )
        if self.kind in needs_fsm and self.fsm is None:
            raise ValueError(f"fsm: required by {self.kind.value}")
        if self.kind == DiscriminatorKind.DK and (self.d is None or self.k is None):
            raise ValueError("d, k: required by the (d,k) discriminator")
        if self.kind == DiscriminatorKind.BLOCK_COUNTER and not self.block:
            raise ValueError("block: required by block-counter")
        if self.kind == DiscriminatorKind.MARKOV_COUNTER and self.order is None:
            raise ValueError("order: required by markov-counter")
        if self.kind == DiscriminatorKind.ENTROPY_LEVEL and self.level is None:
            raise ValueError("level: required by entropy-level")
        return self

    def build(
        self,
        alphabet: Tuple[str, ...],
        x: SymbolSequence,
        y: Optional[SymbolSequence] = None,
    ) -> Discriminator:
        alphabet = self.alphabet or alphabet
        fsm = self.fsm
        if self.kind == DiscriminatorKind.ALWAYS:
            return AlwaysAccept(alphabet)
        if self.kind == DiscriminatorKind.DK:
            return OutputDiscriminator(build_dk_discriminator(self.d or 0, self.k or 0))
        if self.kind == DiscriminatorKind.OUTPUT and fsm is not None:
            return OutputDiscriminator(fsm)
        if self.kind == DiscriminatorKind.EMBEDDING and fsm is not None:
            return EmbeddingDiscriminator(fsm)
        if self.kind == DiscriminatorKind.ENTROPY_LEVEL and fsm is not None:
            return EntropyLevelDiscriminator(fsm, self.level or 0.0)
        ref = x
        if self.reference is not None:
            ref = SymbolSequence.from_text(self.reference, alphabet)
        if self.kind == DiscriminatorKind.MARKOV_COUNTER:
            order = self.order or 0
            machine = build_shift_register_fsm(order, len(alphabet), alphabet)
            return CounterDiscriminator.matching(machine, ref, cyclic=True)
        machine = fsm or single_state_fsm(alphabet)
        return CounterDiscriminator.matching(machine, ref, y, block=self.block)


class Scenario(BaseModel):
    """A verification scenario: eavesdropper, scheme, plaintext, optional
    side information and key, and the enumeration budgets."""

    name: Optional[str] = None
    discriminator: DiscriminatorSpec
    scheme: SchemeSpec
    x: str
    y: Optional[str] = None
    si_alphabet: Optional[Tuple[str, ...]] = None
    key: Optional[str] = None
    seed: int = settings.SEED
    all_keys: bool = False
    sequence_budget: Optional[int] = None
    key_budget: Optional[int] = None

    def plaintext(self) -> SymbolSequence:
        return SymbolSequence.from_text(self.x, self.scheme.labels)

    def side_information(self) -> Optional[SymbolSequence]:
        if self.y is None:
            return None
        alphabet = self.si_alphabet
        if alphabet is None and self.scheme.fsm is not None:
            alphabet = self.scheme.fsm.si_alphabet or None
        if alphabet is None and self.discriminator.fsm is not None:
            alphabet = self.discriminator.fsm.si_alphabet or None
        return SymbolSequence.from_text(self.y, alphabet or self.scheme.labels)

    def parsed_key(self) -> Optional[Key]:
        if self.key is None:
            return None
        if self.scheme.scheme.is_modular:
            return int(self.key)
        return self.key


def parse_scenario(data: Any) -> Scenario:
    if not isinstance(data, dict):
        raise FinsecValidationError("A scenario must be a mapping", path="scenario")
    values = dict(data)
    values["scheme"] = parse_scheme(values.get("scheme") or {})
    disc = values.get("discriminator")
    if isinstance(disc, dict):
        disc = dict(disc)
        if disc.get("fsm") is not None:
            disc["fsm"] = parse_fsm(disc["fsm"])
        if disc.get("alphabet") is not None:
            disc["alphabet"] = parse_alphabet(disc["alphabet"])
        values["discriminator"] = disc
    if values.get("si_alphabet") is not None:
        values["si_alphabet"] = parse_alphabet(values["si_alphabet"])
    # YAML reads an unquoted 0110 as a number and drops the leading zero.
    for name in ("x", "y", "key"):
        if values.get(name) is not None and not isinstance(values[name], str):
            raise FinsecValidationError(
                f"{name} must be a quoted string, got {values[name]!r}",
                path=name,
            )
    try:
        return Scenario.model_validate(values)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"])
        raise FinsecValidationError(f"Invalid scenario: {err['msg']}", path=path)


def load_scenario(path: Path) -> Scenario:
    return parse_scenario(load_data_file(path))


def run_scenario(scenario: Scenario, jobs: Optional[int] = None) -> SecrecyVerdict:
    """The verdict for a scenario, with the eavesdropper's accepted
    candidates for the cryptogram it produced."""
    spec = scenario.scheme
    x = scenario.plaintext()
    y = scenario.side_information()
    disc = scenario.discriminator.build(spec.labels, x, y)
    verdict = check_perfect_secrecy(
        disc,
        spec,
        x,
        y=y,
        key=scenario.parsed_key(),
        seed=scenario.seed,
        all_keys=scenario.all_keys,
        budget=scenario.sequence_budget,
        key_budget=scenario.key_budget,
        jobs=jobs,
    )
    si = y if spec.needs_si else None
    key = scenario.parsed_key()
    if key is None:
        key = draw_key(key_space(spec, x, si), scenario.seed)
    cryptogram = encrypt(spec, x, key, si)
    candidates = guessing_attack(spec, cryptogram, disc, y, budget=scenario.key_budget)
    return verdict.model_copy(
        update={"candidates": [c.model_dump() for c in candidates]}
    )
