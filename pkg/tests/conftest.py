# mypy: ignore-errors
import random
import pytest
from pathlib import Path
from typing import Iterator, Optional, Sequence

from finsec import settings
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import BINARY, SymbolSequence, all_sequences

FIXTURES_PATH = Path(__file__).parent / "fixtures"
DK_SCENARIO = settings.RESOURCES_PATH / "dk_eight_keys.yml"


def seq(text: str, alphabet: Sequence[str] = BINARY) -> SymbolSequence:
    return SymbolSequence.from_text(text, alphabet)


def all_binary(n: int) -> Iterator[SymbolSequence]:
    for symbols in all_sequences(BINARY, n):
        yield SymbolSequence(BINARY, symbols)


def random_fsm(
    rng: random.Random,
    states: int,
    alphabet: Sequence[str] = BINARY,
    si_alphabet: Sequence[str] = (),
    output: bool = False,
    period: int = 1,
    name: Optional[str] = None,
) -> FsmSpec:
    width = max(1, len(si_alphabet))
    size = states * len(alphabet) * width
    table = tuple(rng.randrange(states) for _ in range(size * period))
    out = None
    if output:
        out = tuple(1 if rng.random() < 0.2 else 0 for _ in range(size))
    return FsmSpec(
        alphabet=tuple(alphabet),
        states=states,
        period=period,
        si_alphabet=tuple(si_alphabet),
        next_table=table,
        output_table=out,
        name=name,
    )


@pytest.fixture(scope="function")
def rng() -> random.Random:
    return random.Random(settings.SEED)
