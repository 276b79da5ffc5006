import logging
from pathlib import Path
from typing import Optional
from banal import as_bool
from os import environ as env
from normality import stringify


def env_get(name: str) -> Optional[str]:
    """Ensure the env returns a string even on Windows."""
    return stringify(env.get(name))


def env_str(name: str, default: str) -> str:
    """Ensure the env returns a string even on Windows."""
    value = stringify(env.get(name))
    return default if value is None else value


def env_int(name: str, default: int) -> int:
    value = env_get(name)
    if value is None:
        return default
    return int(value.replace("_", ""))


VERSION = "0.3.0"

# Turn on debug logging and other development features:
DEBUG = as_bool(env_str("FINSEC_DEBUG", "false"))

# Log output can be formatted as JSON:
LOG_JSON = as_bool(env_str("FINSEC_LOG_JSON", "false"))
LOG_LEVEL = logging.DEBUG if DEBUG else logging.INFO

RESOURCES_PATH = Path(__file__).parent.joinpath("resources")

# Default seed for every key drawn without an explicit key. It is printed in
# every report and key file:
SEED = env_int("FINSEC_SEED", 1978)

# Largest number of states a generated machine may have (alpha ** order for
# shift registers):
STATE_BUDGET = env_int("FINSEC_STATE_BUDGET", 2**20)

# Upper bound on the product of (count + 1) over a count table before the
# exact type class counter refuses to run:
COUNT_BUDGET = env_int("FINSEC_COUNT_BUDGET", 10**8)

# How many sequences a brute-force enumeration may visit:
SEQUENCE_BUDGET = env_int("FINSEC_SEQUENCE_BUDGET", 2**24)

# How many keys a key-space enumeration may visit:
KEY_BUDGET = env_int("FINSEC_KEY_BUDGET", 2**20)

# How many worker processes the verifier shards enumerations across:
JOBS = env_int("FINSEC_JOBS", 1)

# Largest shift-register order evaluated by default in reports:
MAX_ORDER = env_int("FINSEC_MAX_ORDER", 6)

# Power iteration for the (d,k) capacity:
CAPACITY_TOLERANCE = 1e-9
CAPACITY_MAX_ITER = 10**6

# Tolerance when comparing empirical entropies for equality:
ENTROPY_TOLERANCE = 1e-9
