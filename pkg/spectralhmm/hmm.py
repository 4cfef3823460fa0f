"""
Ground-truth HMM: validation, sampling, the scaled forward algorithm and
closed-form population moments. Everything learned elsewhere is checked
against the functions in this module.

Conventions: T is column-stochastic ([T]_ij = Pr[h_t=i | h_t-1=j]), O is n x m
column-stochastic, symbols are 0-based inside the library.
"""
import itertools
import logging
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from spectralhmm.config import (
    STOCHASTIC_TOLERANCE, RANK_TOLERANCE, RANK_WARNING_FACTOR, ENUMERATION_LIMIT,
)
from spectralhmm.moments import MomentStats, Provenance
from spectralhmm.errors import (
    ShapeMismatch, NotStochastic, ZeroPriorEntry, RankDeficient, SymbolOutOfRange,
    FormatError, EnumerationTooLarge, NearRankDeficient, ConfigError,
)

logger = logging.getLogger(__name__)

# Sequences per independently seeded sampling block
SAMPLE_BLOCK = 4096


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HmmParams:
    """Validated (T, O, pi) triple. Build it with validate_hmm."""

    T: np.ndarray
    O: np.ndarray
    pi: np.ndarray

    @property
    def m(self) -> int:
        return self.T.shape[0]

    @property
    def n(self) -> int:
        return self.O.shape[0]


@dataclass(frozen=True)
class SequenceCorpus:
    """Finite observation sequences over [n], stored 0-based."""

    n: int
    sequences: tuple

    def __post_init__(self):
        if any(len(seq) == 0 for seq in self.sequences):
            idx = next(i for i, seq in enumerate(self.sequences) if len(seq) == 0)
            raise FormatError(f"Sequence {idx + 1} is empty")
        if not self.sequences:
            return
        flat = np.concatenate([np.asarray(seq) for seq in self.sequences])
        if flat.min() < 0 or flat.max() >= self.n:
            for idx, seq in enumerate(self.sequences):
                bad = [s for s in seq if s < 0 or s >= self.n]
                if bad:
                    raise SymbolOutOfRange(
                        f"Sequence {idx + 1} has symbol {int(bad[0]) + 1} outside 1..{self.n}"
                    )

    @classmethod
    def from_lists(cls, n: int, sequences: Sequence[Sequence[int]]) -> "SequenceCorpus":
        """Builds a corpus from 0-based symbol lists."""
        return cls(n, tuple(np.asarray(s, dtype=np.int64) for s in sequences))

    def __len__(self) -> int:
        return len(self.sequences)


@dataclass(frozen=True)
class ForwardResult:
    log_prob: float
    belief: np.ndarray
    valid: bool
    failed_step: int | None = None


def _check_stochastic(name: str, M: np.ndarray, tol: float):
    if np.any(M < 0) or np.any(M > 1) or not np.all(np.isfinite(M)):
        raise NotStochastic(f"{name} has entries outside [0, 1]")
    sums = np.atleast_1d(M.sum(axis=0))
    worst = int(np.argmax(np.abs(sums - 1.0)))
    if abs(sums[worst] - 1.0) > tol:
        where = "" if M.ndim == 1 else f" column {worst + 1}"
        raise NotStochastic(f"{name}{where} sums to {sums[worst]!r}, expected 1")


def _check_full_column_rank(name: str, M: np.ndarray, rank_tol: float):
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= rank_tol * sv[0]:
        raise RankDeficient(
            f"{name} is below full column rank {M.shape[1]} "
            f"(smallest/largest singular value {sv[-1]:.3e}/{sv[0]:.3e})"
        )
    if sv[-1] <= RANK_WARNING_FACTOR * rank_tol * sv[0]:
        message = f"{name} is close to rank deficient (sigma_min/sigma_max = {sv[-1] / sv[0]:.3e})"
        logger.warning(message)
        warnings.warn(message, NearRankDeficient, stacklevel=3)


def validate_hmm(
    T,
    O,
    pi,
    sum_tol: float = STOCHASTIC_TOLERANCE,
    rank_tol: float = RANK_TOLERANCE,
) -> HmmParams:
    """
    Checks a candidate (T, O, pi) and returns an immutable HmmParams.

    Raises ShapeMismatch, NotStochastic, ZeroPriorEntry or RankDeficient.
    """
    try:
        T = np.asarray(T, dtype=np.float64)
        O = np.asarray(O, dtype=np.float64)
        pi = np.asarray(pi, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise ShapeMismatch(f"HMM parameters are not numeric matrices: {e}")

    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] == 0:
        raise ShapeMismatch(f"T must be a non-empty square matrix, got shape {T.shape}")
    m = T.shape[0]
    if O.ndim != 2 or O.shape[1] != m:
        raise ShapeMismatch(f"O must be n x {m}, got shape {O.shape}")
    if pi.shape != (m,):
        raise ShapeMismatch(f"pi must have length {m}, got shape {pi.shape}")
    n = O.shape[0]
    if n < m:
        raise ShapeMismatch(f"Alphabet size n={n} is smaller than state count m={m}")

    _check_stochastic("T", T, sum_tol)
    _check_stochastic("O", O, sum_tol)
    _check_stochastic("pi", pi, sum_tol)
    if np.any(pi <= 0):
        j = int(np.argmin(pi))
        raise ZeroPriorEntry(f"pi[{j + 1}] = {pi[j]!r}; every initial probability must be > 0")

    _check_full_column_rank("T", T, rank_tol)
    _check_full_column_rank("O", O, rank_tol)

    logger.debug(f"Validated HMM with m={m}, n={n}")
    return HmmParams(_frozen(T), _frozen(O), _frozen(pi))


def _inverse_cdf(cumulative: np.ndarray, u: np.ndarray) -> np.ndarray:
    """
    Draws one category per column of `cumulative` (k x b) using uniforms u (b,).
    """
    idx = (cumulative <= u[None, :]).sum(axis=0)
    return np.minimum(idx, cumulative.shape[0] - 1)


def sample_sequences(params: HmmParams, count: int, length: int, seed: int) -> SequenceCorpus:
    """
    Samples `count` sequences of exactly `length` symbols.

    Each block of SAMPLE_BLOCK consecutive sequences draws from its own stream
    spawned from SeedSequence(seed). Every block draws a full SAMPLE_BLOCK rows
    of uniforms, one row per sequence, so sequence i depends only on
    (params, length, seed, i): a smaller count yields a prefix of a larger one.
    """
    if count < 1 or length < 1:
        raise ConfigError("count and length must be positive")

    cum_pi = np.cumsum(params.pi)
    cum_T = np.cumsum(params.T, axis=0)
    cum_O = np.cumsum(params.O, axis=0)

    n_blocks = -(-count // SAMPLE_BLOCK)
    children = np.random.SeedSequence(seed).spawn(n_blocks)
    blocks = []
    for k, child in enumerate(children):
        size = min(SAMPLE_BLOCK, count - k * SAMPLE_BLOCK)
        rng = np.random.default_rng(child)
        # row r: the state and emission uniforms of sequence k * SAMPLE_BLOCK + r
        u = rng.random((SAMPLE_BLOCK, 2, length))[:size]
        u_state = u[:, 0, :].T
        u_emit = u[:, 1, :].T

        out = np.empty((size, length), dtype=np.int64)
        h = _inverse_cdf(cum_pi[:, None].repeat(size, axis=1), u_state[0])
        for t in range(length):
            if t > 0:
                h = _inverse_cdf(cum_T[:, h], u_state[t])
            out[:, t] = _inverse_cdf(cum_O[:, h], u_emit[t])
        blocks.append(out)

    data = np.concatenate(blocks, axis=0)
    data.setflags(write=False)
    logger.debug(f"Sampled {count} sequences of length {length} (seed={seed})")
    return SequenceCorpus(params.n, tuple(data))


def _check_symbols(params: HmmParams, seq: Sequence[int]) -> np.ndarray:
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size and (seq.min() < 0 or seq.max() >= params.n):
        raise SymbolOutOfRange(f"Sequence contains symbols outside 1..{params.n}")
    return seq


def forward_loglikelihood(params: HmmParams, seq: Sequence[int]) -> ForwardResult:
    """
    Scaled forward recursion:
        h_1 = pi, c_t = O[x_t] . h_t, h_t+1 = T diag(O[x_t]) h_t / c_t
    log Pr[seq] = sum_t log c_t. An impossible sequence returns -inf with
    valid=False instead of raising.
    """
    seq = _check_symbols(params, seq)
    h = params.pi.copy()
    log_prob = 0.0
    for t, x in enumerate(seq):
        weighted = params.O[x] * h
        c = weighted.sum()
        if c <= 0:
            return ForwardResult(-np.inf, h, False, t + 1)
        h = params.T @ (weighted / c)
        log_prob += np.log(c)
    return ForwardResult(float(log_prob), h, True)


def predicted_observation(params: HmmParams, seq: Sequence[int]) -> np.ndarray:
    """Pr[x_t+1 = i | seq] for every i, i.e. O h_t+1. Lies in range(O)."""
    result = forward_loglikelihood(params, seq)
    return params.O @ result.belief


def path_enumeration_probability(params: HmmParams, seq: Sequence[int]) -> float:
    """Pr[seq] by summing over every hidden path. Only for tiny m**len(seq)."""
    seq = _check_symbols(params, seq)
    t = len(seq)
    if params.m ** t > ENUMERATION_LIMIT:
        raise EnumerationTooLarge(f"{params.m}^{t} hidden paths exceed {ENUMERATION_LIMIT}")
    total = 0.0
    for path in itertools.product(range(params.m), repeat=t):
        p = params.pi[path[0]] * params.O[seq[0], path[0]]
        for k in range(1, t):
            p *= params.T[path[k], path[k - 1]] * params.O[seq[k], path[k]]
        total += p
    return float(total)


def stationary_distribution(T: np.ndarray) -> np.ndarray:
    """Eigenvector of a column-stochastic T for the eigenvalue nearest 1, scaled to sum to 1."""
    eigenvalues, eigenvectors = np.linalg.eig(np.asarray(T, dtype=np.float64))
    k = int(np.argmin(np.abs(eigenvalues - 1.0)))
    v = np.abs(np.real(eigenvectors[:, k]))
    return v / v.sum()


def exact_moments(params: HmmParams) -> MomentStats:
    """
    Population moments of the first three observations:
        P1 = O pi
        P21 = O T diag(pi) O^T
        P3[x] = O T diag(O[x]) T diag(pi) O^T
    """
    O, T, pi = params.O, params.T, params.pi
    P1 = O @ pi
    left = O @ T                      # n x m
    right = T @ (pi[:, None] * O.T)   # m x n, equals T diag(pi) O^T
    P21 = left @ (pi[:, None] * O.T)
    P3 = np.einsum("ia,xa,aj->xij", left, O, right)
    return MomentStats(params.n, P1, P21, P3, Provenance("exact"))
