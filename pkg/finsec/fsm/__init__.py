from finsec.fsm.sequence import SymbolSequence, parse_alphabet, read_sequence
from finsec.fsm.machine import FsmSpec, StateTrace, run_discriminator, accepts
from finsec.fsm.machine import unroll_periodic, count_accepted
from finsec.fsm.counts import CountKind, CountTable, collect_counts
from finsec.fsm.counts import collect_block_counts, cyclic_start
from finsec.fsm.builders import build_shift_register_fsm, build_dk_discriminator
from finsec.fsm.builders import single_state_fsm, build_toggle_fsm, dk_capacity
from finsec.fsm.loader import load_fsm, parse_fsm, dump_fsm

__all__ = [
    "SymbolSequence",
    "parse_alphabet",
    "read_sequence",
    "FsmSpec",
    "StateTrace",
    "run_discriminator",
    "accepts",
    "unroll_periodic",
    "count_accepted",
    "CountKind",
    "CountTable",
    "collect_counts",
    "collect_block_counts",
    "cyclic_start",
    "build_shift_register_fsm",
    "build_dk_discriminator",
    "single_state_fsm",
    "build_toggle_fsm",
    "dk_capacity",
    "load_fsm",
    "parse_fsm",
    "dump_fsm",
]
