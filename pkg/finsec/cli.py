import sys
import click
import orjson
from pathlib import Path
from functools import wraps
from typing import Any, Callable, Dict, Optional, Tuple, TypeVar, cast
from pydantic import BaseModel

from finsec import settings
from finsec.exc import FinsecError, FinsecUsageError
from finsec.logs import configure_logging, get_logger
from finsec.bounds import ReportConfig, full_report
from finsec.crypto import Key, SchemeKind, SchemeSpec, draw_key, encrypt, decrypt
from finsec.crypto import key_rate, key_space, read_cryptogram, read_key_file
from finsec.crypto import write_cryptogram, write_key_file
from finsec.fsm.builders import dk_capacity, single_state_fsm
from finsec.fsm.loader import load_fsm
from finsec.fsm.machine import FsmSpec, count_accepted
from finsec.fsm.sequence import SymbolSequence, parse_alphabet, read_sequence
from finsec.lz.coding import conditional_lz_encode, lz78_length
from finsec.lz.joint import conditional_lz_length, joint_parse
from finsec.lz.parse import lz78_parse
from finsec.verifier import load_scenario, run_scenario

log = get_logger("finsec")

F = TypeVar("F", bound=Callable[..., Any])

DEFAULT_SCENARIO = settings.RESOURCES_PATH.joinpath("dk_eight_keys.yml")


class RunConfig(BaseModel):
    """Inputs shared by the commands that read a plaintext."""

    input: Path
    alphabet: Tuple[str, ...]
    keep_newlines: bool = False
    si: Optional[Path] = None
    si_alphabet: Optional[Tuple[str, ...]] = None
    fsm: Optional[FsmSpec] = None
    seed: int = settings.SEED

    @classmethod
    def from_options(
        cls,
        input: Path,
        alphabet: str,
        keep_newlines: bool,
        si: Optional[Path] = None,
        si_alphabet: Optional[str] = None,
        fsm: Optional[Path] = None,
        seed: Optional[int] = None,
    ) -> "RunConfig":
        return cls(
            input=input,
            alphabet=parse_alphabet(alphabet),
            keep_newlines=keep_newlines,
            si=si,
            si_alphabet=None if si_alphabet is None else parse_alphabet(si_alphabet),
            fsm=None if fsm is None else load_fsm(fsm),
            seed=settings.SEED if seed is None else seed,
        )

    def plaintext(self) -> SymbolSequence:
        alphabet = self.alphabet
        if self.fsm is not None:
            alphabet = self.fsm.alphabet
        return read_sequence(self.input, alphabet, self.keep_newlines)

    def side_information(self) -> Optional[SymbolSequence]:
        if self.si is None:
            return None
        alphabet = self.si_alphabet
        if alphabet is None and self.fsm is not None and self.fsm.beta:
            alphabet = self.fsm.si_alphabet
        return read_sequence(self.si, alphabet or self.alphabet, self.keep_newlines)


def emit(data: Any, out: Optional[Path] = None) -> None:
    """Write a JSON document to `out`, or to stdout."""
    if isinstance(data, BaseModel):
        data = data.model_dump()
    encoded = orjson.dumps(data, option=orjson.OPT_INDENT_2)
    if out is not None:
        out.write_bytes(encoded + b"\n")
        return
    click.echo(encoded.decode("utf-8"))


def handle_errors(func: F) -> F:
    """Map library errors to their exit code and a JSON error record on
    stderr."""

    @wraps(func)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        configure_logging(level=settings.LOG_LEVEL)
        try:
            return func(*args, **kwargs)
        except FinsecError as exc:
            log.debug("Command failed", error=type(exc).__name__, code=exc.code)
            click.echo(orjson.dumps(exc.to_dict()).decode("utf-8"), err=True)
            sys.exit(exc.code)

    return cast(F, wrapper)


class FinsecGroup(click.Group):
    """Click reports usage errors with exit code 2, which finsec reserves
    for validation errors; they exit with 1 here."""

    def main(self, *args: Any, standalone_mode: bool = True, **kwargs: Any) -> Any:
        try:
            return super().main(*args, standalone_mode=False, **kwargs)
        except click.ClickException as exc:
            if not standalone_mode:
                raise
            exc.show()
            sys.exit(FinsecUsageError.CODE)
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(FinsecUsageError.CODE)


def plaintext_options(func: F) -> F:
    options = [
        click.option("--in", "input", required=True, type=click.Path(path_type=Path)),
        click.option("--alphabet", default="01", show_default=True),
        click.option("--keep-newlines", is_flag=True, default=False),
        click.option("--si", type=click.Path(path_type=Path), default=None),
        click.option("--si-alphabet", default=None),
        click.option("--fsm", type=click.Path(path_type=Path), default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def scheme_options(func: F) -> F:
    options = [
        click.option(
            "--scheme",
            type=click.Choice([k.value for k in SchemeKind]),
            default=SchemeKind.LZ78_OTP.value,
            show_default=True,
        ),
        click.option("--block", type=int, default=None),
        click.option("--order", type=int, default=None),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def build_scheme(
    scheme: str,
    alphabet: Tuple[str, ...],
    fsm: Optional[FsmSpec],
    block: Optional[int],
    order: Optional[int],
) -> SchemeSpec:
    kind = SchemeKind(scheme)
    if fsm is None and kind in (SchemeKind.TYPE_OTP, SchemeKind.BLOCK_TYPE_OTP):
        fsm = single_state_fsm(alphabet)
    if kind == SchemeKind.MARKOV_TYPE_OTP and order is None:
        order = 1
    try:
        return SchemeSpec(
            scheme=kind,
            alphabet=None if fsm is not None else alphabet,
            fsm=fsm,
            block=block,
            order=order,
        )
    except ValueError as exc:
        raise FinsecUsageError(f"Invalid scheme parameters: {exc}") from exc


@click.group(cls=FinsecGroup, help="Key rates and perfect secrecy for individual sequences")
@click.version_option(settings.VERSION)
def cli() -> None:
    pass


@cli.command("bounds", help="Evaluate every key-rate lower bound on a sequence")
@plaintext_options
@click.option("--states", type=int, default=2, show_default=True)
@click.option("--max-order", type=int, default=settings.MAX_ORDER, show_default=True)
@click.option("--period", type=int, default=1, show_default=True)
@click.option("--block", "blocks", type=int, multiple=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@handle_errors
def bounds(
    input: Path,
    alphabet: str,
    keep_newlines: bool,
    si: Optional[Path],
    si_alphabet: Optional[str],
    fsm: Optional[Path],
    states: int,
    max_order: int,
    period: int,
    blocks: Tuple[int, ...],
    seed: Optional[int],
    out: Optional[Path],
) -> None:
    run = RunConfig.from_options(
        input, alphabet, keep_newlines, si, si_alphabet, fsm, seed
    )
    if states < 1 or max_order < 1 or period < 1:
        raise FinsecUsageError("--states, --max-order and --period must be positive")
    config = ReportConfig(
        states=states,
        max_order=max_order,
        period=period,
        blocks=list(blocks),
        fsm=run.fsm,
        seed=run.seed,
    )
    report = full_report(run.plaintext(), run.side_information(), config)
    emit(report, out)


@cli.command("encrypt", help="Compress and pad a plaintext file")
@plaintext_options
@scheme_options
@click.option("--key-file", type=click.Path(path_type=Path), default=None)
@click.option("--key-out", type=click.Path(path_type=Path), default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@handle_errors
def encrypt_cmd(
    input: Path,
    alphabet: str,
    keep_newlines: bool,
    si: Optional[Path],
    si_alphabet: Optional[str],
    fsm: Optional[Path],
    scheme: str,
    block: Optional[int],
    order: Optional[int],
    key_file: Optional[Path],
    key_out: Optional[Path],
    seed: Optional[int],
    out: Path,
) -> None:
    run = RunConfig.from_options(
        input, alphabet, keep_newlines, si, si_alphabet, fsm, seed
    )
    x = run.plaintext()
    spec = build_scheme(scheme, x.alphabet, run.fsm, block, order)
    y = run.side_information() if spec.needs_si else None
    key: Key
    if key_file is not None:
        key = read_key_file(key_file)
    else:
        key = draw_key(key_space(spec, x, y), run.seed)
    cryptogram = encrypt(spec, x, key, y)
    write_cryptogram(out, cryptogram)
    if key_out is not None:
        write_key_file(key_out, spec.scheme, key, None if key_file else run.seed)
    log.info("Encrypted", scheme=spec.scheme.value, n=len(x), out=str(out))
    emit(
        {
            "scheme": spec.scheme.value,
            "n": len(x),
            "header_bits": len(cryptogram.header),
            "body_bits": len(cryptogram.body),
            "modulus": None if cryptogram.modulus is None else str(cryptogram.modulus),
            "key_rate": key_rate(spec, x, y),
            "seed": None if key_file else run.seed,
        }
    )


@cli.command("decrypt", help="Recover a plaintext from a cryptogram and its key")
@click.option("--in", "input", required=True, type=click.Path(path_type=Path))
@click.option("--key-file", required=True, type=click.Path(path_type=Path))
@click.option("--alphabet", default="01", show_default=True)
@click.option("--si", type=click.Path(path_type=Path), default=None)
@click.option("--si-alphabet", default=None)
@click.option("--keep-newlines", is_flag=True, default=False)
@click.option("--fsm", type=click.Path(path_type=Path), default=None)
@click.option("--block", type=int, default=None)
@click.option("--order", type=int, default=None)
@click.option("--out", required=True, type=click.Path(path_type=Path))
@handle_errors
def decrypt_cmd(
    input: Path,
    key_file: Path,
    alphabet: str,
    si: Optional[Path],
    si_alphabet: Optional[str],
    keep_newlines: bool,
    fsm: Optional[Path],
    block: Optional[int],
    order: Optional[int],
    out: Path,
) -> None:
    cryptogram = read_cryptogram(input)
    machine = None if fsm is None else load_fsm(fsm)
    labels = machine.alphabet if machine is not None else parse_alphabet(alphabet)
    spec = build_scheme(cryptogram.scheme.value, labels, machine, block, order)
    y = None
    if spec.needs_si:
        if si is None:
            raise FinsecUsageError(f"{spec.scheme.value} needs --si")
        si_labels = parse_alphabet(si_alphabet) if si_alphabet else None
        if si_labels is None and machine is not None and machine.beta:
            si_labels = machine.si_alphabet
        y = read_sequence(si, si_labels or labels, keep_newlines)
    x = decrypt(spec, cryptogram, read_key_file(key_file), y)
    out.write_bytes(x.to_bytes())
    log.info("Decrypted", scheme=spec.scheme.value, n=len(x), out=str(out))


@cli.command("parse", help="LZ78-parse a sequence, optionally jointly with y")
@click.option("--in", "input", required=True, type=click.Path(path_type=Path))
@click.option("--alphabet", default="01", show_default=True)
@click.option("--keep-newlines", is_flag=True, default=False)
@click.option("--si", type=click.Path(path_type=Path), default=None)
@click.option("--si-alphabet", default=None)
@click.option("--phrases", "show_phrases", is_flag=True, default=False)
@handle_errors
def parse_cmd(
    input: Path,
    alphabet: str,
    keep_newlines: bool,
    si: Optional[Path],
    si_alphabet: Optional[str],
    show_phrases: bool,
) -> None:
    x = read_sequence(input, alphabet, keep_newlines)
    parsed = lz78_parse(x)
    data: Dict[str, Any] = {
        "n": len(x),
        "c": parsed.c,
        "last_incomplete": parsed.last_incomplete,
        "lz_length": lz78_length(x),
    }
    if show_phrases:
        data["phrases"] = parsed.phrase_texts()
    if si is not None:
        y = read_sequence(si, si_alphabet or alphabet, keep_newlines)
        jp = joint_parse(x, y)
        data["c_xy"] = jp.c_xy
        data["c_y"] = jp.c_y
        data["c_l"] = list(jp.c_l)
        data["conditional_length"] = conditional_lz_length(jp)
        data["conditional_code_bits"] = len(conditional_lz_encode(x, y))
    emit(data)


@cli.command("verify", help="Check perfect secrecy of a scenario by brute force")
@click.option(
    "--scenario",
    type=click.Path(path_type=Path),
    default=DEFAULT_SCENARIO,
    show_default=True,
)
@click.option("--jobs", type=int, default=settings.JOBS, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@handle_errors
def verify(scenario: Path, jobs: int, out: Optional[Path]) -> None:
    if jobs < 1:
        raise FinsecUsageError("--jobs must be positive")
    verdict = run_scenario(load_scenario(scenario), jobs=jobs)
    data = verdict.model_dump()
    data["verdict"] = "secure" if verdict.perfectly_secure else "insecure"
    emit(data, out)


@cli.command("capacity", help="Capacity of a (d,k) run-length constraint")
@click.option("--d", "d", type=int, required=True)
@click.option("--k", "k", type=int, required=True)
@handle_errors
def capacity(d: int, k: int) -> None:
    click.echo(f"{dk_capacity(d, k):.6f}")


@cli.command("fsm-validate", help="Validate a machine file and summarise it")
@click.option("--fsm", required=True, type=click.Path(path_type=Path))
@click.option("--count", "lengths", type=int, multiple=True)
@handle_errors
def fsm_validate(fsm: Path, lengths: Tuple[int, ...]) -> None:
    machine = load_fsm(fsm)
    data: Dict[str, Any] = {
        "name": machine.name,
        "alphabet": list(machine.alphabet),
        "states": machine.states,
        "period": machine.period,
        "si_alphabet": list(machine.si_alphabet),
        "has_output": machine.has_output,
    }
    if lengths:
        if machine.beta:
            raise FinsecUsageError("--count needs a machine without side information")
        data["accepted"] = {str(n): count_accepted(machine, n) for n in lengths}
    emit(data)


def main() -> None:
    cli()


if __name__ == "__main__":
    main()
