"""
Verification harness: exhaustive length-t distributions, L1 distance, and
sample-size sweeps that check the learner converges to the generating HMM.
"""
import itertools
import logging
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Union

import numpy as np

from spectralhmm.config import ENUMERATION_LIMIT, AUTO_RANK_THRESHOLD
from spectralhmm.errors import (
    EnumerationTooLarge, KeyMismatch, SpectralError, ConfigError, RankTooLarge,
)
from spectralhmm.hmm import HmmParams, exact_moments, sample_sequences
from spectralhmm.moments import estimate_moments
from spectralhmm.spectral import PsrModel, learn_psr, numerical_rank

logger = logging.getLogger(__name__)

Distribution = dict[tuple[int, ...], float]


@dataclass(frozen=True)
class SweepRecord:
    N: int
    seed: int
    l1_error: float
    invalid_count: int
    degenerate: bool
    reason: str = ""


@dataclass(frozen=True)
class SweepSummary:
    N: int
    median_l1: float
    q25: float
    q75: float
    degenerate_count: int


@dataclass(frozen=True)
class SweepReport:
    hmm: dict
    sample_sizes: tuple[int, ...]
    seeds: tuple[int, ...]
    eval_len: int
    mode: str
    exact: bool
    records: tuple[SweepRecord, ...]
    summary: tuple[SweepSummary, ...] = field(default=())


def _check_enumeration(n: int, t: int):
    if t < 1:
        raise ConfigError(f"Enumeration length must be positive, got {t}")
    if n ** t > ENUMERATION_LIMIT:
        raise EnumerationTooLarge(f"{n}^{t} sequences exceed the enumeration limit {ENUMERATION_LIMIT}")


def _probability_vector(scorer: Union[HmmParams, PsrModel], t: int) -> np.ndarray:
    """
    Probabilities of all n^t sequences in lexicographic order, by propagating
    unnormalized forward vectors for every prefix at once.
    """
    if isinstance(scorer, HmmParams):
        # rows: prefixes; columns: Pr[h_next, prefix]
        V = scorer.pi[None, :]
        for _ in range(t):
            # V[k, x, :] = T (O[x] * V[k])
            V = np.einsum("ab,xb,kb->kxa", scorer.T, scorer.O, V).reshape(-1, scorer.m)
        return V.sum(axis=1)
    V = scorer.b1[None, :]
    for _ in range(t):
        V = np.einsum("xab,kb->kxa", scorer.B, V).reshape(-1, scorer.m)
    return V @ scorer.binf


def brute_force_distribution(scorer: Union[HmmParams, PsrModel], t: int) -> Distribution:
    """
    Maps every sequence in [n]^t (0-based tuples) to its probability under an
    HMM or to the raw (unclamped) value a PSR assigns it.
    """
    _check_enumeration(scorer.n, t)
    probs = _probability_vector(scorer, t)
    keys = itertools.product(range(scorer.n), repeat=t)
    return dict(zip(keys, probs.tolist()))


def l1_error(p: Distribution, q: Distribution) -> float:
    if p.keys() != q.keys():
        raise KeyMismatch(f"Distribution tables differ in keys ({len(p)} vs {len(q)} entries)")
    return float(sum(abs(p[k] - q[k]) for k in p))


def _cell(params: HmmParams, truth: np.ndarray, N: int, seed: int, t: int, mode: str) -> SweepRecord:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RankTooLarge)
            corpus = sample_sequences(params, N, max(3, t), seed)
            moments = estimate_moments(corpus, mode)
            model = learn_psr(moments, params.m)
    except SpectralError as e:
        logger.info(f"Sweep cell N={N} seed={seed} degenerate: {type(e).__name__}: {e}")
        return SweepRecord(N, seed, float("nan"), 0, True, type(e).__name__)

    learned = _probability_vector(model, t)
    l1 = float(np.abs(learned - truth).sum())
    invalid = int(np.sum((learned <= 0) & (truth > 0)))
    deficient = numerical_rank(model.singular_values, AUTO_RANK_THRESHOLD) < params.m
    return SweepRecord(N, seed, l1, invalid, deficient, "RankTooLarge" if deficient else "")


def exact_sweep_cell(params: HmmParams, t: int) -> float:
    """L1 between the exact-moment PSR and the HMM over length-t sequences."""
    _check_enumeration(params.n, t)
    model = learn_psr(exact_moments(params), params.m)
    return float(np.abs(_probability_vector(model, t) - _probability_vector(params, t)).sum())


def summarize(records: Iterable[SweepRecord], sample_sizes: Iterable[int]) -> tuple[SweepSummary, ...]:
    """Median and quartiles of the L1 error per N, ignoring cells that failed outright."""
    records = list(records)
    summary = []
    for N in sample_sizes:
        cell = [r for r in records if r.N == N]
        errors = np.array([r.l1_error for r in cell if np.isfinite(r.l1_error)])
        if errors.size:
            q25, median, q75 = np.percentile(errors, [25, 50, 75])
        else:
            q25 = median = q75 = float("nan")
        summary.append(SweepSummary(
            N, float(median), float(q25), float(q75), sum(r.degenerate for r in cell)
        ))
    return tuple(summary)


def convergence_sweep(
    params: HmmParams,
    sample_sizes: Iterable[int],
    seeds: Iterable[int],
    t: int = 3,
    mode: str = "heads",
    exact: bool = False,
) -> SweepReport:
    """
    For every (N, seed): sample N sequences of length max(3, t), estimate
    moments, learn a rank-m PSR and record the L1 error of its length-t
    distribution against the HMM. With exact=True every cell uses the exact
    moments instead of samples. Failing cells are recorded, not raised.
    """
    sample_sizes = tuple(sorted(set(int(N) for N in sample_sizes)))
    seeds = tuple(int(s) for s in seeds)
    _check_enumeration(params.n, t)
    truth = _probability_vector(params, t)

    records = []
    exact_error = exact_sweep_cell(params, t) if exact else None
    for N in sample_sizes:
        for seed in seeds:
            if exact:
                records.append(SweepRecord(N, seed, exact_error, 0, False))
            else:
                records.append(_cell(params, truth, N, seed, t, mode))
        logger.info(f"Sweep N={N}: {len(seeds)} seeds done")

    records.sort(key=lambda r: (r.N, r.seed))
    return SweepReport(
        hmm={"m": params.m, "n": params.n},
        sample_sizes=sample_sizes,
        seeds=seeds,
        eval_len=t,
        mode=mode,
        exact=exact,
        records=tuple(records),
        summary=summarize(records, sample_sizes),
    )
