import yaml
import orjson
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence
from pydantic import BaseModel, ValidationError

from finsec.exc import FinsecValidationError
from finsec.logs import get_logger
from finsec.fsm.machine import FsmSpec

log = get_logger(__name__)


def load_data_file(path: Path) -> Any:
    """Read a JSON or YAML document, chosen by file extension."""
    if not path.is_file():
        raise FinsecValidationError(f"File not found: {path}", path=str(path))
    data = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            return orjson.loads(data)
        return yaml.safe_load(data)
    except (orjson.JSONDecodeError, yaml.YAMLError) as exc:
        raise FinsecValidationError(f"Cannot parse {path}: {exc}") from exc


class FsmFile(BaseModel):
    """The on-disk form of a machine. `next` is nested as
    [phase][state][symbol][si]; the phase level is left out when the period
    is 1 and the si level when there is no side information. `output` is
    nested as [state][symbol][si] under the same rule."""

    alphabet: List[str]
    states: int
    initial: int = 0
    period: int = 1
    si_alphabet: Optional[List[str]] = None
    next: List[Any]
    output: Optional[List[Any]] = None
    name: Optional[str] = None


def _flatten(
    data: Any, dims: Sequence[int], limit: int, path: str, what: str
) -> List[int]:
    if not len(dims):
        if isinstance(data, bool) or not isinstance(data, int):
            raise FinsecValidationError(f"Expected an integer {what}", path=path)
        if not 0 <= data < limit:
            raise FinsecValidationError(f"{data} is not a valid {what}", path=path)
        return [data]
    if not isinstance(data, list) or len(data) != dims[0]:
        raise FinsecValidationError(
            f"Expected a list of {dims[0]} entries", path=path
        )
    out: List[int] = []
    for idx, item in enumerate(data):
        out.extend(_flatten(item, dims[1:], limit, f"{path}[{idx}]", what))
    return out


def parse_fsm(data: Any) -> FsmSpec:
    try:
        spec = FsmFile.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        path = ".".join(str(p) for p in err["loc"])
        raise FinsecValidationError(f"Invalid FSM file: {err['msg']}", path=path)
    if spec.states < 1:
        raise FinsecValidationError("At least one state is required", path="states")
    if spec.period < 1:
        raise FinsecValidationError("Period must be at least 1", path="period")
    if not 0 <= spec.initial < spec.states:
        raise FinsecValidationError(
            f"{spec.initial} is not a valid state", path="initial"
        )
    si_alphabet = spec.si_alphabet or []
    alpha, beta = len(spec.alphabet), len(si_alphabet)
    dims: List[int] = [spec.states, alpha]
    if beta > 0:
        dims.append(beta)
    next_dims = ([spec.period] if spec.period > 1 else []) + dims
    table = _flatten(spec.next, next_dims, spec.states, "next", "state")
    output = None
    if spec.output is not None:
        output = _flatten(spec.output, dims, 2, "output", "output bit")
    try:
        return FsmSpec(
            alphabet=tuple(spec.alphabet),
            states=spec.states,
            initial=spec.initial,
            period=spec.period,
            si_alphabet=tuple(si_alphabet),
            next_table=tuple(table),
            output_table=None if output is None else tuple(output),
            name=spec.name,
        )
    except ValidationError as exc:
        raise FinsecValidationError(f"Invalid FSM: {exc.errors()[0]['msg']}")


def load_fsm(path: Path) -> FsmSpec:
    fsm = parse_fsm(load_data_file(path))
    log.debug("Loaded machine", path=str(path), states=fsm.states, period=fsm.period)
    return fsm


def _nest(flat: Sequence[int], dims: Sequence[int]) -> Any:
    if not len(dims):
        return flat[0]
    size = len(flat) // dims[0]
    return [_nest(flat[i * size : (i + 1) * size], dims[1:]) for i in range(dims[0])]


def dump_fsm(fsm: FsmSpec) -> Dict[str, Any]:
    """The file form of a machine, collapsed the same way `parse_fsm`
    expects it."""
    dims: List[int] = [fsm.states, fsm.alpha]
    if fsm.beta > 0:
        dims.append(fsm.beta)
    next_dims = ([fsm.period] if fsm.period > 1 else []) + dims
    data: Dict[str, Any] = {
        "alphabet": list(fsm.alphabet),
        "states": fsm.states,
        "initial": fsm.initial,
        "period": fsm.period,
    }
    if fsm.beta > 0:
        data["si_alphabet"] = list(fsm.si_alphabet)
    data["next"] = _nest(fsm.next_table, next_dims)
    if fsm.output_table is not None:
        data["output"] = _nest(fsm.output_table, dims)
    if fsm.name is not None:
        data["name"] = fsm.name
    return data
