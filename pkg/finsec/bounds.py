"""Lower bounds on the key rate needed for perfect secrecy against finite-state
eavesdroppers, and the report that puts them next to the rates the
encryption schemes achieve."""

import math
import orjson
from typing import Any, Callable, Dict, List, Optional, Tuple
from pydantic import BaseModel, ConfigDict, Field

from finsec import settings
from finsec.exc import FinsecError, FinsecUsageError, FinsecValidationError
from finsec.logs import get_logger
from finsec.util import ceil_log2
from finsec.codec import header_length
from finsec.crypto import SchemeKind, SchemeSpec, key_space
from finsec.entropy import block_entropy, block_state_entropies, cond_entropy
from finsec.entropy import conditional_block_entropy, markov_cond_entropy
from finsec.fsm.builders import build_shift_register_fsm, single_state_fsm
from finsec.fsm.counts import collect_block_counts, collect_counts
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import SymbolSequence
from finsec.lz.joint import appendix_bound, classify_phrases, conditional_lz_length
from finsec.lz.joint import joint_parse
from finsec.lz.parse import lz78_parse
from finsec.lz.coding import lz78_length
from finsec.typeclass import block_class_log_size, type_class_size_lower_bound

log = get_logger(__name__)

# Penalty exponents above this are treated as an infinitely negative term.
LOG_OVERFLOW = 1000.0


class BoundRecord(BaseModel):
    """One key-rate lower bound in bits per symbol. `clamped` is the raw
    value floored at zero; comparisons use it."""

    model_config = ConfigDict(frozen=True)

    name: str = Field(..., examples=["ziv"])
    basis: str
    raw: float
    clamped: float
    slack: Dict[str, float] = {}
    conditions: Dict[str, bool] = {}
    params: Dict[str, Any] = {}

    @classmethod
    def build(
        cls,
        name: str,
        basis: str,
        raw: float,
        slack: Optional[Dict[str, float]] = None,
        conditions: Optional[Dict[str, bool]] = None,
        params: Optional[Dict[str, Any]] = None,
    ) -> "BoundRecord":
        return cls(
            name=name,
            basis=basis,
            raw=raw,
            clamped=max(raw, 0.0),
            slack=slack or {},
            conditions=conditions or {},
            params=params or {},
        )


class SchemeRate(BaseModel):
    model_config = ConfigDict(frozen=True)

    scheme: str
    rate: float
    key_bits: float
    header_bits: int = 0
    params: Dict[str, Any] = {}


class ReportConfig(BaseModel):
    """Parameters of a key-rate report: the eavesdropper's state count s, the
    largest shift-register order, the period l and the SI block lengths."""

    states: int = Field(default=2, ge=1)
    max_order: int = Field(default_factory=lambda: settings.MAX_ORDER, ge=1)
    period: int = Field(default=1, ge=1)
    blocks: List[int] = []
    fsm: Optional[FsmSpec] = None
    seed: int = Field(default_factory=lambda: settings.SEED)


class KeyRateReport(BaseModel):
    input: Dict[str, Any]
    params: Dict[str, Any]
    bounds: List[BoundRecord]
    schemes: List[SchemeRate]
    diagnostics: Dict[str, Any]

    def get(self, name: str) -> Optional[BoundRecord]:
        for bound in self.bounds:
            if bound.name == name:
                return bound
        return None

    def to_json(self) -> bytes:
        # orjson writes non-finite floats as null.
        return orjson.dumps(self.model_dump(), option=orjson.OPT_INDENT_2)


def _log_penalty(*log_factors: float) -> float:
    """2 ** Σ log_factors, or +inf once the exponent is out of float range."""
    exponent = sum(log_factors)
    if exponent > LOG_OVERFLOW:
        return math.inf
    return 2.0**exponent


def ziv_bound(x: SymbolSequence, s: int) -> BoundRecord:
    """[c log c − 2c log s − c − c log(n/c + 1)] / n from the LZ78 parse."""
    n = len(x)
    c = lz78_parse(x).c
    if n == 0 or c == 0:
        return BoundRecord.build("ziv", "incremental-parse counting", 0.0)
    lead = c * math.log2(c)
    states = 2 * c * math.log2(s)
    dictionary = c * math.log2(n / c + 1)
    raw = (lead - states - c - dictionary) / n
    return BoundRecord.build(
        "ziv",
        "incremental-parse counting over phrase length and state classes",
        raw,
        slack={
            "states": states / n,
            "phrases": c / n,
            "lengths": dictionary / n,
        },
        params={"s": s, "c": c},
    )


def fsm_counter_bound(
    x: SymbolSequence, fsm: FsmSpec, y: Optional[SymbolSequence] = None
) -> BoundRecord:
    """Ĥ(X|Z) − (s(α−1)/2)·log₂(2πn)/n, with SI: Ĥ(X|Y,Z) and sβ(α−1)/2."""
    if not fsm.is_time_invariant:
        raise FinsecUsageError("The counter bound needs a time-invariant machine")
    n = len(x)
    params = {"s": fsm.states, "machine": fsm.name}
    if n == 0:
        return BoundRecord.build("fsm-counter", "type class size", 0.0, params=params)
    counts = collect_counts(fsm, x, y if fsm.beta > 0 else None)
    if fsm.beta == 0:
        bits, full = type_class_size_lower_bound(counts)
        penalty = n * cond_entropy(counts) - bits
    else:
        groups = fsm.states * fsm.beta * (fsm.alpha - 1) / 2
        penalty = groups * math.log2(2 * math.pi * n)
        bits = n * cond_entropy(counts) - penalty
        full = all(counts.get(key) >= 1 for key in counts.domain())
    return BoundRecord.build(
        "fsm-counter",
        "size of the finite-state type class of x",
        bits / n,
        slack={"parameters": penalty / n},
        conditions={"all_counts_positive": full},
        params=params,
    )


def shift_register_bound(
    x: SymbolSequence, s: int, max_order: int
) -> BoundRecord:
    """max over 1 ≤ ℓ ≤ max_order of [Ĥ(X_ℓ|X_0..X_{ℓ−1}) − log₂ s/(ℓ+1)],
    less (s(α−1)/2n)·log₂(2πn)."""
    if max_order < 1:
        raise FinsecUsageError(f"max_order must be >= 1, got {max_order}")
    n = len(x)
    if n == 0:
        return BoundRecord.build("shift-register", "Markov types", 0.0)
    best_order = 1
    best = -math.inf
    for order in range(1, max_order + 1):
        value = markov_cond_entropy(x, order) - math.log2(s) / (order + 1)
        if value > best:
            best, best_order = value, order
    penalty = s * (x.alpha - 1) / (2 * n) * math.log2(2 * math.pi * n)
    return BoundRecord.build(
        "shift-register",
        "any machine's conditional entropy dominates the Markov entropy "
        "less log s/(ℓ+1)",
        best - penalty,
        slack={
            "order": math.log2(s) / (best_order + 1),
            "parameters": penalty,
        },
        params={"s": s, "order": best_order, "max_order": max_order},
    )


def periodic_bound(x: SymbolSequence, s: int, period: int) -> BoundRecord:
    """max over q with ql | n of Ĥ(X^{ql})/(ql) − 2 log₂ s/(ql)
    − (ql·s²·α^{ql}/n)·log₂(n/(ql) + 1)."""
    n = len(x)
    if period < 1 or n == 0 or n % period:
        raise FinsecUsageError(f"No block length q·{period} divides n = {n}")
    best: Tuple[float, int, float] = (-math.inf, 1, math.inf)
    for q in range(1, n // period + 1):
        ell = q * period
        if n % ell:
            continue
        penalty = _log_penalty(
            math.log2(ell),
            2 * math.log2(s),
            ell * math.log2(x.alpha),
            math.log2(math.log2(n / ell + 1)),
            -math.log2(n),
        )
        value = block_entropy(x, ell) - 2 * math.log2(s) / ell - penalty
        if value > best[0]:
            best = (value, q, penalty)
    value, q, penalty = best
    return BoundRecord.build(
        "periodic",
        "block types of length q·l counted with (state, state) pairs",
        value,
        slack={"states": 2 * math.log2(s) / (q * period), "blocks": penalty},
        params={"s": s, "l": period, "q": q},
    )


def block_class_bound(
    x: SymbolSequence, period: int, fsm: Optional[FsmSpec] = None
) -> BoundRecord:
    """log₂ of the block arrangements that keep every (z, z') group, per
    symbol: an exact lower bound on the block type class."""
    n = len(x)
    if period < 1 or n == 0 or n % period:
        raise FinsecUsageError(f"Block length {period} does not divide n = {n}")
    fsm = fsm or single_state_fsm(x.alphabet)
    counts = collect_block_counts(fsm, x, period)
    return BoundRecord.build(
        "block-class",
        "arrangements of blocks sharing start and end states",
        block_class_log_size(counts) / n,
        params={"l": period, "s": fsm.states},
    )


def dictionary_bound(x: SymbolSequence, fsm: Optional[FsmSpec] = None) -> BoundRecord:
    """Σ c_lzz' log₂ c_lzz' / n over the phrase classes of the LZ78 parse."""
    n = len(x)
    fsm = fsm or single_state_fsm(x.alphabet)
    if n == 0:
        return BoundRecord.build("dictionary", "phrase classes", 0.0)
    table = classify_phrases(lz78_parse(x), fsm)
    return BoundRecord.build(
        "dictionary",
        "permutations of parsed phrases within (length, state, state) classes",
        appendix_bound(table) / n,
        conditions={"leading_term_only": True},
        params={"s": fsm.states, "c": table.c},
    )


def universal_eps(n: int) -> Optional[float]:
    """min(1, (log₂ log₂ n + 4)/log₂ n), the order-of-magnitude rate at which
    the phrase-count slack vanishes."""
    if n < 2:
        return None
    log_n = math.log2(n)
    return min(1.0, (math.log2(log_n) + 4) / log_n) if log_n > 1 else 1.0


def si_lz_bound(x: SymbolSequence, y: SymbolSequence, s: int) -> BoundRecord:
    """[Σ_l c_l log₂ c_l − 2n log₂ s/((1−ε_n) log₂ n)]/n, with ε_n set so the
    penalty equals 2c(x,y)·log₂ s."""
    if len(x) != len(y):
        raise FinsecValidationError(f"Length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    jp = joint_parse(x, y)
    lead = conditional_lz_length(jp)
    if n == 0:
        return BoundRecord.build("si-lz", "conditional phrase counting", 0.0)
    penalty = 2 * jp.c_xy * math.log2(s)
    eps_n: Optional[float] = None
    if n >= 2 and jp.c_xy:
        eps_n = 1 - n / (jp.c_xy * math.log2(n))
    return BoundRecord.build(
        "si-lz",
        "x-phrases counted within the classes of their y-phrase",
        (lead - penalty) / n,
        slack={"states": penalty / n},
        conditions={"leading_term_only": True},
        params={
            "s": s,
            "c_xy": jp.c_xy,
            "c_y": jp.c_y,
            "eps_n": eps_n,
            "eps_universal": universal_eps(n),
        },
    )


def si_block_bound(
    x: SymbolSequence, y: SymbolSequence, s: int, block: int
) -> BoundRecord:
    """Ĥ(X^ℓ|Y^ℓ)/ℓ − 2 log₂ s/ℓ − (ℓ s² α^ℓ β^ℓ/n)·log₂(n/ℓ + 1)."""
    if len(x) != len(y):
        raise FinsecValidationError(f"Length mismatch: {len(x)} vs {len(y)}")
    n = len(x)
    if block < 1 or n == 0 or n % block:
        raise FinsecValidationError(f"Block length {block} does not divide n = {n}")
    entropy = conditional_block_entropy(x, y, block)
    penalty = _log_penalty(
        math.log2(block),
        2 * math.log2(s),
        block * math.log2(x.alpha),
        block * math.log2(max(y.alpha, 1)),
        math.log2(math.log2(n / block + 1)),
        -math.log2(n),
    )
    states = 2 * math.log2(s) / block
    return BoundRecord.build(
        "si-block",
        "block types given the aligned side-information blocks",
        entropy - states - penalty,
        slack={"states": states, "blocks": penalty},
        params={"s": s, "block": block},
    )


def infer_entropy_level(length: float, n: int, alpha: int) -> float:
    """H_0 = (L − ((α−1)/2)·log₂ n)/n: the empirical entropy a two-part
    codeword of L bits gives away."""
    if n <= 0:
        raise FinsecValidationError("Sequence length must be positive")
    return (length - (alpha - 1) / 2 * math.log2(n)) / n


def select_order(s: int, eps: float) -> int:
    """The smallest order ℓ ≥ 1 with log₂ s/(ℓ+1) ≤ eps."""
    if eps <= 0:
        raise FinsecUsageError(f"eps must be positive, got {eps}")
    return max(1, math.ceil(math.log2(s) / eps) - 1)


def _report_fsm(
    x: SymbolSequence, y: Optional[SymbolSequence], config: ReportConfig
) -> FsmSpec:
    """The configured machine where it can read x (and y), else the
    single-state machine."""
    fsm = config.fsm
    if fsm is None or fsm.alphabet != x.alphabet or not fsm.is_time_invariant:
        return single_state_fsm(x.alphabet)
    if fsm.beta > 0 and y is None:
        return single_state_fsm(x.alphabet)
    return fsm


def _scheme_rates(
    x: SymbolSequence, y: Optional[SymbolSequence], config: ReportConfig
) -> Tuple[List[SchemeRate], List[Dict[str, Any]]]:
    n = len(x)
    alphabet = x.alphabet
    type_fsm = _report_fsm(x, y, config)
    specs = [
        SchemeSpec(scheme=SchemeKind.RAW_OTP, alphabet=alphabet),
        SchemeSpec(scheme=SchemeKind.LZ78_OTP, alphabet=alphabet),
        SchemeSpec(scheme=SchemeKind.TYPE_OTP, fsm=type_fsm),
        SchemeSpec(
            scheme=SchemeKind.BLOCK_TYPE_OTP, fsm=type_fsm, block=config.period
        ),
        SchemeSpec(scheme=SchemeKind.MARKOV_TYPE_OTP, alphabet=alphabet, order=1),
    ]
    if y is not None:
        specs.append(SchemeSpec(scheme=SchemeKind.CONDLZ_OTP, alphabet=alphabet))
    rates: List[SchemeRate] = []
    skipped: List[Dict[str, Any]] = []
    for spec in specs:
        si = y if spec.needs_si else None
        params: Dict[str, Any] = {}
        try:
            space = key_space(spec, x, si)
        except FinsecError as exc:
            log.info("Skipping scheme", scheme=spec.scheme.value, error=exc.detail)
            skipped.append({"scheme": spec.scheme.value, **exc.to_dict()})
            continue
        header = 0
        if spec.scheme.is_modular:
            machine = spec.machine()
            header = header_length(machine, spec.code_kind, n, spec.block_length)
            params = {"s": machine.states, "block": spec.block_length}
        rates.append(
            SchemeRate(
                scheme=spec.scheme.value,
                rate=space.log_size / n if n else 0.0,
                key_bits=space.log_size,
                header_bits=header,
                params=params,
            )
        )
    return rates, skipped


def full_report(
    x: SymbolSequence,
    y: Optional[SymbolSequence] = None,
    config: Optional[ReportConfig] = None,
) -> KeyRateReport:
    """Every applicable bound and every scheme's key rate on x, in a fixed
    order so that identical inputs give identical reports."""
    config = config or ReportConfig()
    n = len(x)
    s = config.states
    if y is not None and len(y) != n:
        raise FinsecValidationError(f"Length mismatch: {n} vs {len(y)}")
    bounds: List[BoundRecord] = []
    skipped: List[Dict[str, Any]] = []

    def attempt(name: str, make: Callable[[], BoundRecord]) -> None:
        try:
            bounds.append(make())
        except FinsecError as exc:
            log.info("Skipping bound", bound=name, error=exc.detail)
            skipped.append({"bound": name, **exc.to_dict()})

    attempt("ziv", lambda: ziv_bound(x, s))
    for order in range(1, config.max_order + 1):
        if x.alpha**order > settings.STATE_BUDGET:
            break

        def counter(order: int = order) -> BoundRecord:
            fsm = build_shift_register_fsm(order, x.alpha, x.alphabet)
            record = fsm_counter_bound(x, fsm)
            params = dict(record.params, order=order)
            return record.model_copy(update={"params": params})

        attempt("fsm-counter", counter)
    if config.fsm is not None and config.fsm.is_time_invariant:
        fsm = config.fsm
        attempt("fsm-counter", lambda: fsm_counter_bound(x, fsm, y))
    attempt("shift-register", lambda: shift_register_bound(x, s, config.max_order))
    attempt("periodic", lambda: periodic_bound(x, s, config.period))
    attempt("block-class", lambda: block_class_bound(x, config.period))
    attempt("dictionary", lambda: dictionary_bound(x))
    if y is not None:
        attempt("si-lz", lambda: si_lz_bound(x, y, s))
        for block in config.blocks or [config.period]:
            attempt("si-block", lambda block=block: si_block_bound(x, y, s, block))

    schemes, skipped_schemes = _scheme_rates(x, y, config)
    diagnostics: Dict[str, Any] = {
        "lz_rate": lz78_length(x) / n if n else 0.0,
        "lz_phrases": lz78_parse(x).c,
        "seed": config.seed,
        "eps_universal": universal_eps(n),
        "skipped": skipped + skipped_schemes,
    }
    if n and n % config.period == 0:
        fsm = _report_fsm(x, None, config)
        counts = collect_block_counts(fsm, x, config.period)
        chain = block_state_entropies(counts, config.period)
        diagnostics["block_state"] = {
            "joint": chain.joint,
            "pairs": chain.pairs,
            "blocks": chain.blocks,
            "conditional": chain.conditional,
            "information": chain.information,
        }
    log.debug("Key-rate report", n=n, bounds=len(bounds), schemes=len(schemes))
    return KeyRateReport(
        input={
            "n": n,
            "alpha": x.alpha,
            "beta": 0 if y is None else y.alpha,
            "symbol_bits": ceil_log2(x.alpha),
        },
        params={
            "s": s,
            "max_order": config.max_order,
            "l": config.period,
            "blocks": config.blocks or [config.period],
            "seed": config.seed,
        },
        bounds=bounds,
        schemes=schemes,
        diagnostics=diagnostics,
    )
