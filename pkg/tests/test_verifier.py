import pytest

from finsec.bounds import infer_entropy_level
from finsec.crypto import SchemeKind, SchemeSpec, encrypt
from finsec.exc import FinsecBudgetError, FinsecValidationError
from finsec.fsm.builders import build_dk_discriminator, build_toggle_fsm
from finsec.fsm.builders import single_state_fsm
from finsec.fsm.counts import collect_counts
from finsec.fsm.machine import count_accepted, run_discriminator
from finsec.fsm.sequence import BINARY
from finsec.verifier import AlwaysAccept, CounterDiscriminator, DiscriminatorSpec
from finsec.verifier import EmbeddingDiscriminator, EntropyLevelDiscriminator
from finsec.verifier import OutputDiscriminator, check_perfect_secrecy
from finsec.verifier import enumerate_acceptance_set, guessing_attack
from finsec.verifier import load_scenario, parse_scenario, run_scenario

from .conftest import DK_SCENARIO, FIXTURES_PATH, all_binary, random_fsm, seq

EIGHT_KEYS = ("1111", "1000", "1100", "1001", "0000", "0111", "0011", "0110")


def test_acceptance_sets():
    dk = OutputDiscriminator(build_dk_discriminator(0, 2))
    accepted = enumerate_acceptance_set(dk, 4)
    assert len(accepted) == 13
    assert seq("0010") in accepted
    assert seq("1000") not in accepted
    assert len(enumerate_acceptance_set(AlwaysAccept(BINARY), 3)) == 8
    with pytest.raises(FinsecBudgetError):
        enumerate_acceptance_set(dk, 10, budget=100)


def test_acceptance_set_workers():
    dk = OutputDiscriminator(build_dk_discriminator(1, 3))
    serial = enumerate_acceptance_set(dk, 9, jobs=1)
    parallel = enumerate_acceptance_set(dk, 9, jobs=2)
    assert serial == parallel
    assert len(serial) == count_accepted(dk.fsm, 9)


def test_embedding_matches_output():
    for d, k in [(0, 1), (0, 2), (1, 3)]:
        fsm = build_dk_discriminator(d, k)
        output = enumerate_acceptance_set(OutputDiscriminator(fsm), 7)
        embedded = enumerate_acceptance_set(EmbeddingDiscriminator(fsm), 7)
        assert output == embedded
    with pytest.raises(FinsecValidationError):
        EmbeddingDiscriminator(build_toggle_fsm())


def test_embedding_matches_output_on_random_machines(rng):
    for s in (2, 3, 4):
        for _ in range(2):
            fsm = random_fsm(rng, s, output=True)
            output = OutputDiscriminator(fsm)
            embedded = EmbeddingDiscriminator(fsm)
            for n in range(11):
                for x in all_binary(n):
                    counts = collect_counts(fsm, x)
                    hit = any(counts.get(key) for key in embedded.forbidden)
                    rejected = run_discriminator(fsm, x).stop is not None
                    assert rejected == hit
                    assert output.accepts(x.symbols) == embedded.accepts(x.symbols)
                    assert output.accepts(x.symbols) == (not hit)


def test_counter_discriminator():
    fsm = single_state_fsm(BINARY)
    disc = CounterDiscriminator.matching(fsm, seq("0110"))
    accepted = enumerate_acceptance_set(disc, 4)
    assert len(accepted) == 6
    assert enumerate_acceptance_set(disc, 3) == frozenset()
    cyclic = CounterDiscriminator.matching(build_toggle_fsm(), seq("010"), cyclic=True)
    assert cyclic.target.laps == 2
    assert cyclic.accepts((0, 1, 0))
    block = CounterDiscriminator.matching(build_toggle_fsm(), seq("0110"), block=2)
    assert block.accepts((1, 0, 0, 1))
    assert not block.accepts((0, 0, 1, 1))


def test_entropy_level_discriminator():
    level = infer_entropy_level(4 + 0.5 * 2, 4, 2)
    assert level == pytest.approx(1.0)
    disc = EntropyLevelDiscriminator(single_state_fsm(BINARY), level)
    accepted = enumerate_acceptance_set(disc, 4)
    assert len(accepted) == 6
    assert all(x.symbols.count(1) == 2 for x in accepted)


def test_dk_against_eight_key_pad():
    dk = OutputDiscriminator(build_dk_discriminator(0, 2))
    spec = SchemeSpec(scheme=SchemeKind.RAW_OTP, alphabet=BINARY, keys=EIGHT_KEYS)
    verdict = check_perfect_secrecy(dk, spec, seq("1111"), key="1111")
    assert verdict.acceptance_size == 13
    assert verdict.preimage_size == 8
    assert verdict.accepted_preimage_size == 6
    assert not verdict.perfectly_secure
    assert verdict.witness == "0010"
    assert verdict.cryptogram["body"] == "4:00"


def test_full_pad_is_secure():
    dk = OutputDiscriminator(build_dk_discriminator(0, 2))
    spec = SchemeSpec(scheme=SchemeKind.RAW_OTP, alphabet=BINARY)
    verdict = check_perfect_secrecy(dk, spec, seq("1011"), seed=5)
    assert verdict.perfectly_secure
    assert verdict.preimage_size == 16
    assert verdict.witness is None


def test_rejected_plaintext():
    dk = OutputDiscriminator(build_dk_discriminator(0, 2))
    spec = SchemeSpec(scheme=SchemeKind.RAW_OTP, alphabet=BINARY)
    with pytest.raises(FinsecValidationError):
        check_perfect_secrecy(dk, spec, seq("1000"))


def test_type_otp_secure_for_every_key():
    x = seq("011010")
    for fsm in (single_state_fsm(BINARY), build_toggle_fsm()):
        disc = CounterDiscriminator.matching(fsm, x)
        spec = SchemeSpec(scheme=SchemeKind.TYPE_OTP, fsm=fsm)
        verdict = check_perfect_secrecy(disc, spec, x, key=0, all_keys=True)
        assert verdict.perfectly_secure
        assert verdict.key_independent
        assert verdict.acceptance_size == verdict.preimage_size


def test_lz78_pad_leaks_to_counter():
    x = seq("0000000000")
    disc = AlwaysAccept(BINARY)
    spec = SchemeSpec(scheme=SchemeKind.LZ78_OTP, alphabet=BINARY)
    verdict = check_perfect_secrecy(disc, spec, x, seed=1)
    assert not verdict.perfectly_secure
    assert verdict.preimage_size < verdict.acceptance_size


def test_guessing_attack():
    dk = OutputDiscriminator(build_dk_discriminator(0, 2))
    spec = SchemeSpec(scheme=SchemeKind.RAW_OTP, alphabet=BINARY, keys=EIGHT_KEYS)
    cg = encrypt(spec, seq("1111"), "1111")
    candidates = guessing_attack(spec, cg, dk)
    assert [c.plaintext for c in candidates] == [
        "1111",
        "1100",
        "1001",
        "0111",
        "0011",
        "0110",
    ]
    assert all(c.keys == 1 for c in candidates)
    assert candidates[0].key == "1111"


def test_packaged_dk_scenario():
    verdict = run_scenario(load_scenario(DK_SCENARIO))
    assert verdict.acceptance_size == 13
    assert verdict.accepted_preimage_size == 6
    assert not verdict.perfectly_secure
    assert verdict.witness == "0010"
    assert verdict.key == "1111"
    assert [c["plaintext"] for c in verdict.candidates][:2] == ["1111", "1100"]
    assert len(verdict.candidates) == 6


def test_type_otp_scenario():
    verdict = run_scenario(load_scenario(FIXTURES_PATH / "type_otp.yml"))
    assert verdict.perfectly_secure
    assert verdict.key_independent
    assert verdict.acceptance_size == 6
    assert verdict.cryptogram["modulus"] == 6
    assert verdict.cryptogram["header"] == "010"
    assert len(verdict.candidates) == 6


def test_discriminator_specs():
    x = seq("0110")
    spec = DiscriminatorSpec(kind="markov-counter", order=1)
    disc = spec.build(BINARY, x)
    assert disc.accepts(x.symbols)
    assert disc.target.cyclic
    spec = DiscriminatorSpec(kind="counter", reference="0011")
    assert spec.build(BINARY, x).accepts((1, 0, 1, 0))
    with pytest.raises(ValueError):
        DiscriminatorSpec(kind="dk", d=0)
    with pytest.raises(ValueError):
        DiscriminatorSpec(kind="output")
    with pytest.raises(ValueError):
        DiscriminatorSpec(kind="block-counter")


def test_parse_scenario_errors():
    with pytest.raises(FinsecValidationError) as exc:
        parse_scenario(
            {
                "discriminator": {"kind": "always"},
                "scheme": {"scheme": "raw-otp", "alphabet": "01"},
            }
        )
    assert exc.value.path == "x"
    with pytest.raises(FinsecValidationError):
        parse_scenario("raw-otp")
    with pytest.raises(FinsecValidationError):
        load_scenario(FIXTURES_PATH / "missing.yml")
    scenario = parse_scenario(
        {
            "discriminator": {"kind": "always"},
            "scheme": {"scheme": "raw-otp", "alphabet": "01"},
            "x": "1011",
        }
    )
    assert scenario.plaintext() == seq("1011")


def test_parse_scenario_rejects_unquoted_bits():
    base = {
        "discriminator": {"kind": "always"},
        "scheme": {"scheme": "raw-otp", "alphabet": "01"},
        "x": "0001",
    }
    for name, value in [("x", 1), ("x", 1011), ("y", 11), ("key", 72)]:
        with pytest.raises(FinsecValidationError) as exc:
            parse_scenario({**base, name: value})
        assert exc.value.path == name
        assert "quoted" in str(exc.value)


def test_unquoted_yaml_scenario_is_rejected(tmp_path):
    path = tmp_path / "unquoted.yml"
    path.write_text(
        "discriminator: {kind: always}\n"
        "scheme: {scheme: raw-otp, alphabet: \"01\"}\n"
        "x: 0001\n"
        "key: 0110\n"
    )
    with pytest.raises(FinsecValidationError) as exc:
        load_scenario(path)
    assert exc.value.path == "x"
