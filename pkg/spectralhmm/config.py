import os
from dataclasses import dataclass, fields
from typing import Any, Optional

import yaml
from dotenv import load_dotenv

from spectralhmm.errors import ConfigError

load_dotenv()

# Logging / display (environment may change these; nothing numeric reads the environment)
LOG_LEVEL = os.getenv("SPECTRAL_LOG_LEVEL", "WARNING").upper()
if LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
    LOG_LEVEL = "WARNING"
_width_raw = os.getenv("SPECTRAL_CONSOLE_WIDTH", "")
CONSOLE_WIDTH: int | None = int(_width_raw) if _width_raw.isdigit() else None

# HMM validation
STOCHASTIC_TOLERANCE = 1e-12
RANK_TOLERANCE = 1e-10
# Smallest singular value within this factor of the rank tolerance logs a warning
RANK_WARNING_FACTOR = 100.0

# Spectral learning
AUTO_RANK_THRESHOLD = 1e-6
PINV_CUTOFF = 1e-12
RANGE_TOLERANCE = 1e-8
# Loaded moment tables must sum to 1 within this
MOMENT_SUM_TOLERANCE = 1e-9
ORTHONORMAL_TOLERANCE = 1e-10

# Inference
ALPHA_MIN = 1e-300
DIRECT_PRODUCT_MAX_LENGTH = 20

# Evaluation
ENUMERATION_LIMIT = 10**6

# Serialization
FLOAT_DIGITS = 17

# Sweep defaults
DEFAULT_SWEEP_NS = (100, 1000, 10000, 100000)
DEFAULT_SWEEP_SEEDS = tuple(range(20))
DEFAULT_EVAL_LEN = 3


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI command needs, resolved from flags (and an optional --config file)."""

    command: str
    hmm: Optional[str] = None
    corpus: Optional[str] = None
    model: Optional[str] = None
    moments: Optional[str] = None
    exact: Optional[str] = None
    emit_moments: Optional[str] = None
    out: Optional[str] = None
    input: Optional[str] = None
    n: Optional[int] = None
    m: Optional[int] = None
    auto_rank_threshold: float = AUTO_RANK_THRESHOLD
    pinv_cutoff: float = PINV_CUTOFF
    mode: str = "heads"
    seed: int = 0
    count: int = 100
    length: int = 3
    stationary: bool = False
    sweep_ns: tuple[int, ...] = DEFAULT_SWEEP_NS
    sweep_seeds: tuple[int, ...] = DEFAULT_SWEEP_SEEDS
    eval_len: int = DEFAULT_EVAL_LEN
    sweep_exact: bool = False


# Keys a --config YAML file may set; everything else is rejected.
FILE_KEYS = {
    "m", "n", "mode", "seed", "count", "length", "stationary",
    "sweep_ns", "sweep_seeds", "eval_len", "auto_rank_threshold", "pinv_cutoff",
}


def parse_int_list(raw: Any, name: str) -> tuple[int, ...]:
    """
    Parses a list of integers from a comma list ("100,1000"), an inclusive
    range ("0-19"), or an already-parsed YAML list.
    """
    if isinstance(raw, (list, tuple)):
        items = list(raw)
    elif isinstance(raw, int):
        items = [raw]
    else:
        text = str(raw).strip()
        if "-" in text and "," not in text and not text.startswith("-"):
            lo, _, hi = text.partition("-")
            try:
                start, stop = int(lo), int(hi)
            except ValueError:
                raise ConfigError(f"Invalid range for {name}: '{raw}'")
            if stop < start:
                raise ConfigError(f"Empty range for {name}: '{raw}'")
            return tuple(range(start, stop + 1))
        items = [p for p in text.split(",") if p.strip()]
    try:
        values = tuple(int(v) for v in items)
    except (TypeError, ValueError):
        raise ConfigError(f"Invalid integer list for {name}: '{raw}'")
    if not values:
        raise ConfigError(f"{name} must not be empty")
    return values


def load_config_file(path: str) -> dict[str, Any]:
    """Loads a YAML run-config file and checks its keys."""
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {path}: {e}")
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping")
    unknown = sorted(set(data) - FILE_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return data


def resolve_run_config(command: str, flags: dict[str, Any], config_path: Optional[str] = None) -> RunConfig:
    """
    Builds a RunConfig. Priority: explicit flags, then the --config file, then defaults.
    Flags that were not given must be passed as None.
    """
    merged: dict[str, Any] = {}
    if config_path:
        merged.update(load_config_file(config_path))
    merged.update({k: v for k, v in flags.items() if v is not None})

    known = {f.name for f in fields(RunConfig)}
    values = {k: v for k, v in merged.items() if k in known}
    if "sweep_ns" in values:
        values["sweep_ns"] = parse_int_list(values["sweep_ns"], "sweep-ns")
    if "sweep_seeds" in values:
        values["sweep_seeds"] = parse_int_list(values["sweep_seeds"], "sweep-seeds")

    config = RunConfig(command=command, **values)
    _check(config)
    return config


def _check(config: RunConfig):
    if config.mode not in ("heads", "sliding"):
        raise ConfigError(f"Unknown estimation mode '{config.mode}' (use heads or sliding)")
    if config.m is not None and config.m < 1:
        raise ConfigError(f"Rank m must be positive, got {config.m}")
    if config.n is not None and config.n < 1:
        raise ConfigError(f"Alphabet size n must be positive, got {config.n}")
    if config.count < 1 or config.length < 1:
        raise ConfigError("--count and --length must be positive")
    if config.eval_len < 1:
        raise ConfigError("--eval-len must be positive")
    if any(N < 1 for N in config.sweep_ns):
        raise ConfigError("--sweep-ns values must be positive")
    if not config.auto_rank_threshold > 0 or not config.pinv_cutoff > 0:
        raise ConfigError("Thresholds must be positive")
