from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple
from pydantic import BaseModel, ConfigDict, model_validator

from finsec.exc import FinsecValidationError
from finsec.fsm.sequence import SymbolSequence


class FsmSpec(BaseModel):
    """A finite-state machine: a next-state table, optionally periodic in
    time and driven by side information, plus an optional binary output
    table that turns it into a discriminator.

    Tables are stored flat. The next-state entry for phase `p`, state `z`,
    input `a` and side-information symbol `b` sits at
    `((p * states + z) * alpha + a) * si_width + b`, the output entry for
    `(z, a, b)` at `(z * alpha + a) * si_width + b`, where `si_width` is the
    side-information alphabet size (1 without side information)."""

    model_config = ConfigDict(frozen=True)

    alphabet: Tuple[str, ...]
    states: int
    initial: int = 0
    period: int = 1
    si_alphabet: Tuple[str, ...] = ()
    next_table: Tuple[int, ...]
    output_table: Optional[Tuple[int, ...]] = None
    name: Optional[str] = None

    @model_validator(mode="after")
    def check_tables(self) -> "FsmSpec":
        if not len(self.alphabet):
            raise ValueError("alphabet: must contain at least one symbol")
        if self.states < 1:
            raise ValueError("states: must be at least 1")
        if self.period < 1:
            raise ValueError("period: must be at least 1")
        if not 0 <= self.initial < self.states:
            raise ValueError(f"initial: {self.initial} is not a state")
        size = self.period * self.states * self.alpha * self.si_width
        if len(self.next_table) != size:
            raise ValueError(f"next_table: expected {size} entries")
        for idx, value in enumerate(self.next_table):
            if not 0 <= value < self.states:
                raise ValueError(f"next_table[{idx}]: {value} is not a state")
        if self.output_table is not None:
            size = self.states * self.alpha * self.si_width
            if len(self.output_table) != size:
                raise ValueError(f"output_table: expected {size} entries")
            for idx, value in enumerate(self.output_table):
                if value not in (0, 1):
                    raise ValueError(f"output_table[{idx}]: {value} is not a bit")
        return self

    @property
    def alpha(self) -> int:
        return len(self.alphabet)

    @property
    def beta(self) -> int:
        return len(self.si_alphabet)

    @property
    def si_width(self) -> int:
        return max(1, len(self.si_alphabet))

    @property
    def has_output(self) -> bool:
        return self.output_table is not None

    @property
    def is_time_invariant(self) -> bool:
        return self.period == 1

    def step(self, state: int, symbol: int, si: int = 0, phase: int = 0) -> int:
        idx = ((phase * self.states + state) * self.alpha + symbol) * self.si_width
        return self.next_table[idx + si]

    def emits(self, state: int, symbol: int, si: int = 0) -> int:
        if self.output_table is None:
            raise FinsecValidationError("Machine has no output table")
        return self.output_table[(state * self.alpha + symbol) * self.si_width + si]

    def walk(
        self,
        symbols: Sequence[int],
        si: Optional[Sequence[int]] = None,
        start: Optional[int] = None,
        offset: int = 0,
    ) -> List[int]:
        """States z_0..z_n visited while reading `symbols` from `start`
        (default: the initial state); `offset` shifts the clock phase."""
        state = self.initial if start is None else start
        states = [state]
        table = self.next_table
        width = self.si_width
        alpha = self.alpha
        stride = self.states * alpha * width
        period = self.period
        for i, sym in enumerate(symbols):
            b = 0 if si is None else si[i]
            base = ((offset + i) % period) * stride if period > 1 else 0
            state = table[base + (state * alpha + sym) * width + b]
            states.append(state)
        return states

    def check_inputs(
        self, x: SymbolSequence, y: Optional[SymbolSequence] = None
    ) -> None:
        if x.alphabet != self.alphabet:
            raise FinsecValidationError(
                f"Sequence alphabet {x.alphabet!r} does not match machine "
                f"alphabet {self.alphabet!r}"
            )
        if self.beta > 0:
            if y is None:
                raise FinsecValidationError("Machine requires side information")
            if y.alphabet != self.si_alphabet:
                raise FinsecValidationError(
                    "Side information alphabet does not match the machine"
                )
            if len(y) != len(x):
                raise FinsecValidationError(
                    f"Side information length {len(y)} differs from {len(x)}"
                )
        elif y is not None:
            raise FinsecValidationError("Machine does not consume side information")


@dataclass(frozen=True)
class StateTrace:
    """Response of a discriminator: states z_0..z_{n-1}, the state after
    the last symbol, the outputs u_i and the verdict. `stop` is the first
    index with u_i = 1."""

    states: Tuple[int, ...]
    final: int
    outputs: Optional[Tuple[int, ...]]
    accepted: bool
    stop: Optional[int] = None


def _si(y: Optional[SymbolSequence]) -> Optional[Tuple[int, ...]]:
    return None if y is None else y.symbols


def run_discriminator(
    fsm: FsmSpec, x: SymbolSequence, y: Optional[SymbolSequence] = None
) -> StateTrace:
    if not fsm.has_output:
        raise FinsecValidationError("Discriminator requires an output table")
    fsm.check_inputs(x, y)
    si = _si(y)
    states = fsm.walk(x.symbols, si)
    outputs = tuple(
        fsm.emits(states[i], sym, 0 if si is None else si[i])
        for i, sym in enumerate(x.symbols)
    )
    stop = outputs.index(1) if 1 in outputs else None
    return StateTrace(
        states=tuple(states[:-1]),
        final=states[-1],
        outputs=outputs,
        accepted=stop is None,
        stop=stop,
    )


def accepts(
    fsm: FsmSpec, symbols: Sequence[int], si: Optional[Sequence[int]] = None
) -> bool:
    """Verdict only, stopping on the first output 1."""
    out = fsm.output_table
    if out is None:
        raise FinsecValidationError("Discriminator requires an output table")
    state = fsm.initial
    width = fsm.si_width
    alpha = fsm.alpha
    for i, sym in enumerate(symbols):
        b = 0 if si is None else si[i]
        if out[(state * alpha + sym) * width + b]:
            return False
        state = fsm.step(state, sym, b, i % fsm.period)
    return True


def unroll_periodic(fsm: FsmSpec) -> FsmSpec:
    """The time-invariant machine over (phase, state) pairs, state index
    `phase * s + z`, which tracks exactly the same states as `fsm`."""
    s, period, alpha, width = fsm.states, fsm.period, fsm.alpha, fsm.si_width
    table: List[int] = []
    for phase in range(period):
        nphase = (phase + 1) % period
        for z in range(s):
            for a in range(alpha):
                for b in range(width):
                    table.append(nphase * s + fsm.step(z, a, b, phase))
    output = None
    if fsm.output_table is not None:
        output = tuple(fsm.output_table) * period
    return FsmSpec(
        alphabet=fsm.alphabet,
        states=s * period,
        initial=fsm.initial,
        period=1,
        si_alphabet=fsm.si_alphabet,
        next_table=tuple(table),
        output_table=output,
        name=None if fsm.name is None else f"{fsm.name}-unrolled",
    )


def count_accepted(fsm: FsmSpec, n: int, y: Optional[SymbolSequence] = None) -> int:
    """|A_n| for an output-table discriminator, by dynamic programming over
    the state distribution instead of enumeration."""
    if not fsm.has_output:
        raise FinsecValidationError("Discriminator requires an output table")
    if fsm.beta > 0 and (y is None or len(y) != n):
        raise FinsecValidationError("Side information of length n is required")
    paths: Dict[int, int] = {fsm.initial: 1}
    for i in range(n):
        b = 0 if y is None else y.symbols[i]
        phase = i % fsm.period
        step: Dict[int, int] = {}
        for state, count in paths.items():
            for a in range(fsm.alpha):
                if fsm.emits(state, a, b):
                    continue
                nxt = fsm.step(state, a, b, phase)
                step[nxt] = step.get(nxt, 0) + count
        paths = step
    return sum(paths.values())
