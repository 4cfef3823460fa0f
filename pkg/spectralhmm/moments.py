"""
Observable statistics P1, P21 and the P3 stack, either exact (from HMM
parameters, see hmm.exact_moments) or estimated from a corpus by integer
counting followed by a single normalization.

Layout: P21[i, j] = Pr[x2=i, x1=j]; P3[x, i, j] = Pr[x3=i, x2=x, x1=j].
"""
import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from spectralhmm.errors import (
    EmptyCorpus, NoTriples, DivisionByZeroGuard, AlphabetMismatch, ConfigError,
)

if TYPE_CHECKING:
    from spectralhmm.hmm import SequenceCorpus

logger = logging.getLogger(__name__)

MODES = ("heads", "sliding")


@dataclass(frozen=True)
class Provenance:
    """Where a set of moments (or a model) came from."""

    kind: str
    mode: Optional[str] = None
    total_firsts: Optional[int] = None
    total_pairs: Optional[int] = None
    total_triples: Optional[int] = None

    @property
    def is_exact(self) -> bool:
        return self.kind in ("exact", "from_exact_moments", "analytic_from_hmm")

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Provenance":
        return cls(
            kind=data["kind"],
            mode=data.get("mode"),
            total_firsts=data.get("total_firsts"),
            total_pairs=data.get("total_pairs"),
            total_triples=data.get("total_triples"),
        )


@dataclass(frozen=True)
class MomentStats:
    n: int
    P1: np.ndarray
    P21: np.ndarray
    P3: np.ndarray
    provenance: Provenance = field(default_factory=lambda: Provenance("exact"))


@dataclass(frozen=True)
class TripleCounts:
    """
    Integer sufficient statistics. sum(c1) == total_firsts,
    sum(c21) == total_pairs, sum(c3) == total_triples. In heads mode with every
    sequence of length >= 3, total_pairs == total_triples == total_firsts.
    """

    n: int
    mode: str
    c1: np.ndarray
    c21: np.ndarray
    c3: np.ndarray
    total_firsts: int
    total_pairs: int
    total_triples: int

    def __add__(self, other: "TripleCounts") -> "TripleCounts":
        return merge_counts(self, other)


def _windows(corpus: "SequenceCorpus", width: int, mode: str) -> np.ndarray:
    """Rows of `width` consecutive symbols: the leading window per sequence, or every window."""
    seqs = [s for s in corpus.sequences if len(s) >= width]
    if not seqs:
        return np.empty((0, width), dtype=np.int64)
    if mode == "heads":
        if len({len(s) for s in seqs}) == 1:
            return np.stack(seqs)[:, :width].astype(np.int64)
        return np.array([s[:width] for s in seqs], dtype=np.int64)
    return np.concatenate([sliding_window_view(np.asarray(s), width) for s in seqs]).astype(np.int64)


def count_triples(corpus: "SequenceCorpus", mode: str = "heads") -> TripleCounts:
    """
    Tallies first symbols, pairs and triples.

    heads: position 1, positions (1,2) and positions (1,2,3) of each sequence;
    shorter sequences still contribute the prefixes they have.
    sliding: every position, every adjacent pair and every window of three.
    """
    if mode not in MODES:
        raise ConfigError(f"Unknown estimation mode '{mode}'")
    if len(corpus) == 0:
        raise EmptyCorpus("Cannot count an empty corpus")

    n = corpus.n
    w1 = _windows(corpus, 1, mode)
    w2 = _windows(corpus, 2, mode)
    w3 = _windows(corpus, 3, mode)
    if len(w3) == 0:
        raise NoTriples("No sequence has length >= 3, so no triples can be counted")

    c1 = np.bincount(w1[:, 0], minlength=n).astype(np.int64)
    c21 = np.bincount(w2[:, 1] * n + w2[:, 0], minlength=n * n).reshape(n, n).astype(np.int64)
    c3 = np.bincount(
        w3[:, 1] * n * n + w3[:, 2] * n + w3[:, 0], minlength=n ** 3
    ).reshape(n, n, n).astype(np.int64)

    logger.debug(f"Counted {len(w1)} firsts, {len(w2)} pairs, {len(w3)} triples ({mode})")
    return TripleCounts(n, mode, c1, c21, c3, len(w1), len(w2), len(w3))


def merge_counts(a: TripleCounts, b: TripleCounts) -> TripleCounts:
    """Entrywise sum of two tallies; associative and commutative."""
    if a.n != b.n:
        raise AlphabetMismatch(f"Cannot merge counts over n={a.n} and n={b.n}")
    if a.mode != b.mode:
        raise ConfigError(f"Cannot merge {a.mode} counts with {b.mode} counts")
    return TripleCounts(
        a.n, a.mode,
        a.c1 + b.c1, a.c21 + b.c21, a.c3 + b.c3,
        a.total_firsts + b.total_firsts,
        a.total_pairs + b.total_pairs,
        a.total_triples + b.total_triples,
    )


def normalize_counts(counts: TripleCounts) -> MomentStats:
    """P1 = c1 / firsts, P21 = c21 / pairs, P3 = c3 / triples."""
    if counts.total_firsts <= 0 or counts.total_pairs <= 0 or counts.total_triples <= 0:
        raise DivisionByZeroGuard(
            f"Zero totals (firsts={counts.total_firsts}, pairs={counts.total_pairs}, "
            f"triples={counts.total_triples})"
        )
    provenance = Provenance(
        "empirical", counts.mode,
        counts.total_firsts, counts.total_pairs, counts.total_triples,
    )
    return MomentStats(
        counts.n,
        counts.c1 / counts.total_firsts,
        counts.c21 / counts.total_pairs,
        counts.c3 / counts.total_triples,
        provenance,
    )


def estimate_moments(corpus: "SequenceCorpus", mode: str = "heads") -> MomentStats:
    return normalize_counts(count_triples(corpus, mode))


def unseen_symbols(moments: MomentStats) -> list[int]:
    """0-based symbols x whose P3[x] is identically zero."""
    mass = moments.P3.reshape(moments.n, -1).sum(axis=1)
    return [int(x) for x in np.flatnonzero(mass == 0)]
