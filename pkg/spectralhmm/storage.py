"""
File formats. Symbols are 1-based in every file and 0-based in memory;
this module is the only place that converts between the two.

  HMM      JSON {m, n, T, O, pi}
  corpus   text, header "#n=<n>", one space-separated sequence per line
  moments  JSON {n, P1, P21, P3, provenance}
  model    JSON {n, m, U, b1, binf, B, provenance, singular_values}

Floats are written with repr(), the shortest decimal string that reads back
to the same double (never more than 17 significant digits).
"""
import json
import logging
from pathlib import Path
from typing import Any, Iterable, Optional, TextIO

import numpy as np

from spectralhmm.config import FLOAT_DIGITS, MOMENT_SUM_TOLERANCE
from spectralhmm.errors import FormatError, FileUnreadable, AlphabetMismatch, SymbolOutOfRange
from spectralhmm.hmm import HmmParams, SequenceCorpus, validate_hmm
from spectralhmm.moments import MomentStats, Provenance
from spectralhmm.spectral import PsrModel

logger = logging.getLogger(__name__)

CORPUS_HEADER = "#n="


def format_float(value: float) -> str:
    """Fixed 17-significant-digit text for line-oriented outputs."""
    return format(float(value), f".{FLOAT_DIGITS}g")


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except UnicodeDecodeError as e:
        raise FormatError(f"{path} is not UTF-8 text: {e}")
    except OSError as e:
        raise FileUnreadable(f"Cannot read {path}: {e.strerror or e}")


def _read_json(path: str) -> dict[str, Any]:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise FormatError(f"{path} is not valid JSON: {e}")
    if not isinstance(data, dict):
        raise FormatError(f"{path} must contain a JSON object")
    return data


def _write_json(path: str, data: dict[str, Any]):
    Path(path).write_text(dumps(data))


def _field(data: dict[str, Any], key: str, path: str) -> Any:
    if key not in data:
        raise FormatError(f"{path} is missing field '{key}'")
    return data[key]


def _int_field(data: dict[str, Any], key: str, path: str) -> int:
    value = _field(data, key, path)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value) or value != int(value):
        raise FormatError(f"Field '{key}' in {path} must be an integer, got {value!r}")
    return int(value)


def _array(data: dict[str, Any], key: str, path: str, ndim: int) -> np.ndarray:
    try:
        value = np.asarray(_field(data, key, path), dtype=np.float64)
    except (TypeError, ValueError):
        raise FormatError(f"Field '{key}' in {path} is not numeric")
    if value.ndim != ndim:
        raise FormatError(f"Field '{key}' in {path} must have {ndim} dimension(s), got {value.ndim}")
    return value


# --- HMM parameters ---

def hmm_to_dict(params: HmmParams) -> dict[str, Any]:
    return {
        "m": params.m,
        "n": params.n,
        "T": params.T.tolist(),
        "O": params.O.tolist(),
        "pi": params.pi.tolist(),
    }


def load_hmm(path: str) -> HmmParams:
    """Reads and validates an HMM parameter file."""
    data = _read_json(path)
    params = validate_hmm(
        _array(data, "T", path, 2), _array(data, "O", path, 2), _array(data, "pi", path, 1)
    )
    for key, actual in (("m", params.m), ("n", params.n)):
        if key in data and _int_field(data, key, path) != actual:
            raise FormatError(f"{path} declares {key}={data[key]} but the matrices imply {key}={actual}")
    logger.info(f"Loaded HMM (m={params.m}, n={params.n}) from {path}")
    return params


def save_hmm(params: HmmParams, path: str):
    _write_json(path, hmm_to_dict(params))


# --- corpora ---

def parse_symbol(token: str, n: int) -> int:
    """1-based text token to 0-based symbol."""
    try:
        value = int(token)
    except ValueError:
        raise FormatError(f"'{token}' is not an integer symbol")
    if not 1 <= value <= n:
        raise SymbolOutOfRange(f"Symbol {value} outside 1..{n}")
    return value - 1


def read_corpus(lines: Iterable[str], n: Optional[int] = None, source: str = "<corpus>") -> SequenceCorpus:
    """
    Parses the corpus text format. The '#n=' header is required unless n is
    given; when both are present they must agree.
    """
    header_n = None
    sequences = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if line.startswith(CORPUS_HEADER) and header_n is None and not sequences:
                try:
                    header_n = int(line[len(CORPUS_HEADER):])
                except ValueError:
                    raise FormatError(f"{source}:{lineno}: bad header '{line}'")
            continue
        alphabet = header_n if header_n is not None else n
        if alphabet is None:
            raise FormatError(f"{source}: missing '#n=' header and no --n given")
        try:
            sequences.append([parse_symbol(tok, alphabet) for tok in line.split()])
        except (FormatError, SymbolOutOfRange) as e:
            raise type(e)(f"{source}:{lineno}: {e}")

    if header_n is not None and n is not None and header_n != n:
        raise AlphabetMismatch(f"{source} declares n={header_n} but n={n} was requested")
    alphabet = header_n if header_n is not None else n
    if alphabet is None:
        raise FormatError(f"{source}: missing '#n=' header and no --n given")
    return SequenceCorpus.from_lists(alphabet, sequences)


def load_corpus(path: str, n: Optional[int] = None) -> SequenceCorpus:
    corpus = read_corpus(_read_text(path).splitlines(), n, path)
    logger.info(f"Loaded {len(corpus)} sequences over n={corpus.n} from {path}")
    return corpus


def write_corpus(corpus: SequenceCorpus, stream: TextIO):
    stream.write(f"{CORPUS_HEADER}{corpus.n}\n")
    for seq in corpus.sequences:
        stream.write(" ".join(str(int(x) + 1) for x in seq) + "\n")


def save_corpus(corpus: SequenceCorpus, path: str):
    with open(path, "w") as f:
        write_corpus(corpus, f)


# --- moments ---

def moments_to_dict(moments: MomentStats) -> dict[str, Any]:
    return {
        "n": moments.n,
        "P1": moments.P1.tolist(),
        "P21": moments.P21.tolist(),
        "P3": moments.P3.tolist(),
        "provenance": moments.provenance.to_dict(),
    }


def _provenance(data: dict[str, Any], default_kind: str, path: str) -> Provenance:
    raw = data.get("provenance") or {"kind": default_kind}
    try:
        return Provenance.from_dict(raw)
    except (KeyError, TypeError, AttributeError):
        raise FormatError(f"Field 'provenance' in {path} must be an object with a 'kind'")


def check_moments(moments: MomentStats, path: str = "<moments>"):
    """
    Every table must be finite with entries in [0, 1], and P1, P21 and the
    whole P3 stack must each sum to 1.
    """
    for name, value in (("P1", moments.P1), ("P21", moments.P21), ("P3", moments.P3)):
        if not np.all(np.isfinite(value)):
            raise FormatError(f"{name} in {path} contains NaN or infinite values")
        if np.any(value < 0) or np.any(value > 1):
            raise FormatError(f"{name} in {path} has entries outside [0, 1]")
        total = float(value.sum())
        if abs(total - 1.0) > MOMENT_SUM_TOLERANCE:
            raise FormatError(f"{name} in {path} sums to {total!r}, expected 1")


def load_moments(path: str) -> MomentStats:
    data = _read_json(path)
    n = _int_field(data, "n", path)
    P1 = _array(data, "P1", path, 1)
    P21 = _array(data, "P21", path, 2)
    P3 = _array(data, "P3", path, 3)
    if P1.shape != (n,) or P21.shape != (n, n) or P3.shape != (n, n, n):
        raise FormatError(f"Moment shapes in {path} do not match n={n}")
    moments = MomentStats(n, P1, P21, P3, _provenance(data, "empirical", path))
    check_moments(moments, path)
    return moments


def save_moments(moments: MomentStats, path: str):
    _write_json(path, moments_to_dict(moments))


# --- PSR models ---

def model_to_dict(model: PsrModel) -> dict[str, Any]:
    return {
        "n": model.n,
        "m": model.m,
        "U": model.U.tolist(),
        "b1": model.b1.tolist(),
        "binf": model.binf.tolist(),
        "B": model.B.tolist(),
        "provenance": model.provenance.to_dict(),
        "singular_values": None if model.singular_values is None else model.singular_values.tolist(),
    }


def model_from_dict(data: dict[str, Any], path: str = "<model>") -> PsrModel:
    n = _int_field(data, "n", path)
    m = _int_field(data, "m", path)
    U = _array(data, "U", path, 2)
    b1 = _array(data, "b1", path, 1)
    binf = _array(data, "binf", path, 1)
    B = _array(data, "B", path, 3)
    if U.shape != (n, m) or b1.shape != (m,) or binf.shape != (m,) or B.shape != (n, m, m):
        raise FormatError(f"Model shapes in {path} do not match n={n}, m={m}")
    for name, value in (("U", U), ("b1", b1), ("binf", binf), ("B", B)):
        if not np.all(np.isfinite(value)):
            raise FormatError(f"Field '{name}' in {path} contains NaN or infinite values")
    sv = None
    if data.get("singular_values") is not None:
        sv = _array(data, "singular_values", path, 1)
    return PsrModel(
        n=n, m=m, U=U, b1=b1, binf=binf, B=B,
        provenance=_provenance(data, "unknown", path),
        singular_values=sv,
    )


def load_model(path: str) -> PsrModel:
    model = model_from_dict(_read_json(path), path)
    logger.info(f"Loaded PSR model (n={model.n}, m={model.m}) from {path}")
    return model


def save_model(model: PsrModel, path: str):
    _write_json(path, model_to_dict(model))


def dumps(data: dict[str, Any]) -> str:
    return json.dumps(data, indent=2) + "\n"
