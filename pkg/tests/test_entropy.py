import math
import pytest

from finsec.entropy import EmpiricalLaw, block_entropy, block_state_entropies
from finsec.entropy import cond_entropy, conditional_block_entropy, cyclic_grams
from finsec.entropy import empirical_entropy, markov_cond_entropy, mutual_information
from finsec.exc import FinsecValidationError
from finsec.fsm.builders import build_shift_register_fsm, build_toggle_fsm
from finsec.fsm.builders import single_state_fsm
from finsec.fsm.counts import collect_block_counts, collect_counts
from finsec.fsm.sequence import BINARY

from .conftest import all_binary, random_fsm, seq


def test_empirical_entropy():
    assert empirical_entropy(seq("0110")) == pytest.approx(1.0)
    assert empirical_entropy(seq("0000")) == 0.0
    assert empirical_entropy(seq("0001")) == pytest.approx(0.811278, abs=1e-6)
    assert empirical_entropy(seq("")) == 0.0


def test_block_entropy():
    assert block_entropy(seq("0101"), 2) == 0.0
    assert block_entropy(seq("0110"), 2) == pytest.approx(0.5)
    with pytest.raises(FinsecValidationError):
        block_entropy(seq("011"), 2)
    with pytest.raises(FinsecValidationError):
        block_entropy(seq("011"), 0)


def test_markov_entropy():
    assert cyclic_grams(seq("0110"), 1) == {(0, 1): 1, (1, 1): 1, (1, 0): 1, (0, 0): 1}
    assert markov_cond_entropy(seq("0110"), 1) == pytest.approx(1.0)
    assert markov_cond_entropy(seq("0101"), 1) == 0.0
    assert markov_cond_entropy(seq("0110"), 0) == pytest.approx(1.0)
    with pytest.raises(FinsecValidationError):
        markov_cond_entropy(seq("0110"), -1)


def test_markov_entropy_matches_cyclic_counts():
    x = seq("0110100110010110")
    for order in range(1, 4):
        fsm = build_shift_register_fsm(order, 2)
        counts = collect_counts(fsm, x, cyclic=True)
        assert cond_entropy(counts) == pytest.approx(markov_cond_entropy(x, order))


def test_cond_entropy():
    x = seq("0110")
    assert cond_entropy(collect_counts(build_toggle_fsm(), x)) == pytest.approx(1.0)
    single = collect_counts(single_state_fsm(BINARY), x)
    assert cond_entropy(single) == pytest.approx(empirical_entropy(x))
    block = collect_block_counts(build_toggle_fsm(), x, 2)
    with pytest.raises(FinsecValidationError):
        cond_entropy(block)


def test_conditioning_reduces_entropy(rng):
    x = seq("0110100110010110")
    base = empirical_entropy(x)
    for _ in range(10):
        fsm = random_fsm(rng, 3)
        assert cond_entropy(collect_counts(fsm, x)) <= base + 1e-12


def test_conditional_block_entropy():
    x, y = seq("0110"), seq("0011")
    assert conditional_block_entropy(x, y, 1) == pytest.approx(1.0)
    assert conditional_block_entropy(x, x, 1) == 0.0
    assert conditional_block_entropy(x, x, 2) == 0.0
    with pytest.raises(FinsecValidationError):
        conditional_block_entropy(x, seq("001"), 1)


def test_empirical_law():
    law = EmpiricalLaw.from_counts({(0, 0): 1, (1, 0): 1, (1, 1): 2})
    assert law.normalizer == 4
    assert law.entropy() == pytest.approx(1.5)
    marginal = law.marginal((0,))
    assert marginal.probs == {(0,): 0.25, (1,): 0.75}
    with pytest.raises(FinsecValidationError):
        EmpiricalLaw.from_counts({})


def test_mutual_information():
    assert mutual_information({(0, 0): 1, (1, 1): 1}) == pytest.approx(1.0)
    assert mutual_information({(0, 0): 1, (0, 1): 1, (1, 0): 1, (1, 1): 1}) == 0.0


def test_block_state_entropies():
    counts = collect_block_counts(build_toggle_fsm(), seq("011011"), 3)
    ent = block_state_entropies(counts)
    assert ent.joint == pytest.approx(1.0)
    assert ent.pairs == pytest.approx(1.0)
    assert ent.blocks == 0.0
    assert ent.conditional == 0.0
    assert ent.information == 0.0
    counts = collect_block_counts(single_state_fsm(BINARY), seq("00011011"), 2)
    ent = block_state_entropies(counts)
    assert ent.blocks == pytest.approx(2.0)
    assert ent.pairs == 0.0
    assert ent.conditional == pytest.approx(ent.blocks)
    assert math.isclose(ent.information, 0.0, abs_tol=1e-12)


def test_machine_entropy_dominates_markov_chain(rng):
    orders = range(1, 7)
    sequences = [x for n in range(1, 11) for x in all_binary(n)]
    markov = {x: [markov_cond_entropy(x, order) for order in orders] for x in sequences}
    for _ in range(200):
        states = rng.randint(1, 4)
        fsm = random_fsm(rng, states)
        log_s = math.log2(states)
        for x in sequences:
            machine = cond_entropy(collect_counts(fsm, x, cyclic=True))
            for order, value in zip(orders, markov[x]):
                assert machine >= value - log_s / (order + 1) - 1e-12, (x.text, order)
