import math
import numpy as np
from typing import List, Optional, Sequence, Tuple

from finsec import settings
from finsec.exc import FinsecBudgetError, FinsecValidationError
from finsec.logs import get_logger
from finsec.fsm.machine import FsmSpec
from finsec.fsm.sequence import BINARY

log = get_logger(__name__)


def default_alphabet(alpha: int) -> Tuple[str, ...]:
    if alpha == 2:
        return BINARY
    return tuple(str(i) for i in range(alpha))


def single_state_fsm(
    alphabet: Sequence[str], si_alphabet: Sequence[str] = ()
) -> FsmSpec:
    """The memoryless machine: one state, a self-loop on every input."""
    size = len(alphabet) * max(1, len(si_alphabet))
    return FsmSpec(
        alphabet=tuple(alphabet),
        states=1,
        si_alphabet=tuple(si_alphabet),
        next_table=(0,) * size,
        name="single-state",
    )


def build_shift_register_fsm(
    order: int,
    alpha: int,
    alphabet: Optional[Sequence[str]] = None,
    budget: Optional[int] = None,
) -> FsmSpec:
    """Machine whose state holds the last `order` input symbols, encoded
    base alpha with the oldest symbol most significant. The initial state is
    the all-zero history."""
    if order < 0 or alpha < 1:
        raise FinsecValidationError(
            f"Shift register needs order >= 0 and alpha >= 1, got ({order}, {alpha})"
        )
    budget = settings.STATE_BUDGET if budget is None else budget
    states = alpha**order
    if states > budget:
        raise FinsecBudgetError(
            f"Shift register of order {order} over {alpha} symbols has "
            f"{states} states",
            budget=budget,
            required=states,
        )
    labels = default_alphabet(alpha) if alphabet is None else tuple(alphabet)
    if len(labels) != alpha:
        raise FinsecValidationError("Alphabet labels do not match alpha")
    table = tuple((z * alpha + a) % states for z in range(states) for a in range(alpha))
    return FsmSpec(
        alphabet=labels,
        states=states,
        next_table=table,
        name=f"shift-register-{order}",
    )


def shift_register_order(fsm: FsmSpec) -> Optional[int]:
    """The order ℓ if `fsm` is structurally a shift-register machine."""
    if fsm.period != 1 or fsm.beta > 0 or fsm.alpha < 2:
        return None
    order = round(math.log(fsm.states, fsm.alpha))
    if fsm.alpha**order != fsm.states:
        return None
    for z in range(fsm.states):
        for a in range(fsm.alpha):
            if fsm.step(z, a) != (z * fsm.alpha + a) % fsm.states:
                return None
    return order


def build_toggle_fsm(alphabet: Sequence[str] = BINARY) -> FsmSpec:
    """Two states, flipping on every input symbol."""
    alpha = len(alphabet)
    return FsmSpec(
        alphabet=tuple(alphabet),
        states=2,
        next_table=tuple(1 - z for z in range(2) for _ in range(alpha)),
        name="toggle",
    )


def build_dk_discriminator(d: int, k: int) -> FsmSpec:
    """Discriminator accepting binary strings whose runs of zeroes have
    lengths in [d, k]; the trailing run is only held to the upper limit.

    State r in 0..k is the length of the current run of zeroes. When d > 0
    an extra start state k+1 admits a leading 1. For (0, 2) this is the
    three-state machine g(z, 0) = z+1 mod 3, g(z, 1) = 0 with an output on
    (2, 0)."""
    if d < 0 or k < 0 or d > k:
        raise FinsecValidationError(f"Invalid (d,k) constraint: ({d},{k})")
    start = k + 1 if d > 0 else None
    states = k + 2 if d > 0 else k + 1
    table: List[int] = []
    output: List[int] = []
    for z in range(states):
        run = 0 if z == start else z
        # input 0
        table.append((run + 1) % (k + 1))
        output.append(1 if run >= k else 0)
        # input 1
        table.append(0)
        output.append(1 if run < d and z != start else 0)
    return FsmSpec(
        alphabet=BINARY,
        states=states,
        initial=0 if start is None else start,
        next_table=tuple(table),
        output_table=tuple(output),
        name=f"dk-{d}-{k}",
    )


def dk_adjacency(d: int, k: int) -> np.ndarray:
    """Adjacency matrix of the (k+1)-state run-length graph."""
    if d < 0 or k < 0 or d > k:
        raise FinsecValidationError(f"Invalid (d,k) constraint: ({d},{k})")
    matrix = np.zeros((k + 1, k + 1), dtype=np.float64)
    for run in range(k + 1):
        if run < k:
            matrix[run, run + 1] = 1.0
        if run >= d:
            matrix[run, 0] = 1.0
    return matrix


def dk_capacity(
    d: int,
    k: int,
    tolerance: float = settings.CAPACITY_TOLERANCE,
    max_iter: int = settings.CAPACITY_MAX_ITER,
) -> float:
    """log₂ of the Perron-Frobenius eigenvalue of the (d,k) graph.

    Power iteration runs on A + I, which has the same Perron vector and is
    aperiodic, so graphs with periodic structure (such as d = k) converge."""
    matrix = dk_adjacency(d, k) + np.eye(k + 1)
    vector = np.ones(k + 1) / (k + 1)
    value = 0.0
    for _ in range(max_iter):
        product = matrix @ vector
        estimate = float(product.sum() / vector.sum())
        vector = product / np.linalg.norm(product, 1)
        if abs(estimate - value) < tolerance:
            value = estimate
            break
        value = estimate
    else:
        log.warning("Power iteration hit its cap", d=d, k=k, iterations=max_iter)
    eigenvalue = value - 1.0
    if eigenvalue <= 1.0:
        return 0.0
    return math.log2(eigenvalue)
