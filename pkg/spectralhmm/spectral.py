"""
Spectral learning of the predictive-state representation:

    U    = top-m left singular vectors of P21
    b1   = U^T P1
    B_x  = U^T P3[x] (U^T P21)^+
    binf = U^T 1

plus the analytic construction from known (T, O, pi), used as a cross-check.
"""
import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
import scipy.linalg

from spectralhmm.config import (
    AUTO_RANK_THRESHOLD, PINV_CUTOFF, RANGE_TOLERANCE, ORTHONORMAL_TOLERANCE, RANK_TOLERANCE,
)
from spectralhmm.errors import (
    ZeroMatrix, PinvDegenerate, BasisMismatch, SingularUO, RankTooLarge, ConfigError,
    ShapeMismatch, SymbolOutOfRange,
)
from spectralhmm.hmm import HmmParams
from spectralhmm.moments import MomentStats, Provenance, unseen_symbols

logger = logging.getLogger(__name__)

Rank = Union[int, str, None]


@dataclass(frozen=True)
class SvdBasis:
    U: np.ndarray
    singular_values: np.ndarray
    rank: int
    # True when sigma_rank is at or below the auto threshold
    rank_deficient: bool = False


@dataclass(frozen=True)
class PsrModel:
    """Learned (or analytic) observable-operator model. B[x] is the m x m operator for symbol x."""

    n: int
    m: int
    U: np.ndarray
    b1: np.ndarray
    binf: np.ndarray
    B: np.ndarray
    provenance: Provenance
    singular_values: Optional[np.ndarray] = None


def _fix_signs(U: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (first index on ties)."""
    U = U.copy()
    for j in range(U.shape[1]):
        k = int(np.argmax(np.abs(U[:, j])))
        if U[k, j] < 0:
            U[:, j] = -U[:, j]
    return U


def numerical_rank(singular_values: np.ndarray, threshold: float = AUTO_RANK_THRESHOLD) -> int:
    """Largest k with sigma_k > threshold * sigma_1."""
    if singular_values.size == 0 or singular_values[0] <= 0:
        return 0
    return int(np.sum(singular_values > threshold * singular_values[0]))


def thin_svd_basis(P21: np.ndarray, rank: Rank = None, auto_threshold: float = AUTO_RANK_THRESHOLD) -> SvdBasis:
    """
    Orthonormal basis of the top-`rank` left singular subspace of P21.

    rank=None or "auto" picks the numerical rank at `auto_threshold`. An explicit
    rank beyond the numerical rank is honoured with a RankTooLarge warning.
    """
    P21 = np.asarray(P21, dtype=np.float64)
    if P21.ndim != 2 or P21.shape[0] != P21.shape[1]:
        raise ShapeMismatch(f"P21 must be square, got shape {P21.shape}")
    n = P21.shape[0]

    U_full, s, _ = scipy.linalg.svd(P21)
    if s[0] <= 0:
        raise ZeroMatrix("P21 is the zero matrix; there is no subspace to estimate")

    detected = numerical_rank(s, auto_threshold)
    if rank is None or rank == "auto":
        m = detected
        logger.info(f"Auto rank selection: m={m} at threshold {auto_threshold:g}")
    else:
        m = int(rank)
        if m < 1 or m > n:
            raise ConfigError(f"Rank must be between 1 and n={n}, got {m}")

    deficient = m > detected
    if deficient:
        message = (
            f"Requested rank {m} exceeds the numerical rank {detected} of P21 "
            f"(sigma_{m}/sigma_1 = {s[m - 1] / s[0]:.3e})"
        )
        logger.warning(message)
        warnings.warn(message, RankTooLarge, stacklevel=2)

    U = _fix_signs(U_full[:, :m])
    return SvdBasis(U, s, m, deficient)


def pseudoinverse(A: np.ndarray, cutoff: float = PINV_CUTOFF) -> tuple[np.ndarray, int]:
    """
    Moore-Penrose pseudoinverse by SVD, treating singular values at or below
    cutoff * sigma_1 as zero. Returns (A^+, number of singular values kept).
    """
    A = np.asarray(A, dtype=np.float64)
    U, s, Vt = scipy.linalg.svd(A, full_matrices=False)
    if s.size == 0 or s[0] <= 0:
        raise PinvDegenerate("Every singular value is zero; the pseudoinverse is degenerate")
    keep = s > cutoff * s[0]
    if not keep.any():
        raise PinvDegenerate("Every singular value falls below the pseudoinverse cutoff")
    s_inv = np.where(keep, 1.0 / np.where(keep, s, 1.0), 0.0)
    return (Vt.T * s_inv) @ U.T, int(keep.sum())


def _model_provenance(moments: MomentStats) -> Provenance:
    if moments.provenance.is_exact:
        return Provenance("from_exact_moments")
    p = moments.provenance
    return Provenance("from_empirical_moments", p.mode, p.total_firsts, p.total_pairs, p.total_triples)


def learn_psr(
    moments: MomentStats,
    rank: Rank,
    auto_threshold: float = AUTO_RANK_THRESHOLD,
    pinv_cutoff: float = PINV_CUTOFF,
    basis: Optional[np.ndarray] = None,
) -> PsrModel:
    """
    Learns (U, b1, binf, {B_x}) from moments.

    `basis` replaces the SVD basis with a caller-supplied orthonormal U
    (used to compare against psr_from_hmm with a shared basis).
    """
    if rank in (None, "auto") and basis is None and not moments.provenance.is_exact:
        logger.warning("Automatic rank selection on empirical moments is for exploration only")

    if basis is not None:
        basis = np.asarray(basis, dtype=np.float64)
        if basis.ndim != 2:
            raise BasisMismatch(f"Basis must be a matrix, got shape {basis.shape}")
        rank = basis.shape[1]
    svd = thin_svd_basis(moments.P21, rank, auto_threshold)
    U = svd.U if basis is None else basis
    if U.shape[0] != moments.n:
        raise BasisMismatch(f"Basis has {U.shape[0]} rows, moments have n={moments.n}")
    m = U.shape[1]

    UtP21 = U.T @ moments.P21                  # m x n
    UtP21_pinv, kept = pseudoinverse(UtP21, pinv_cutoff)
    if kept < m:
        logger.warning(f"U^T P21 has only {kept} of {m} singular values above the cutoff")

    b1 = U.T @ moments.P1
    binf = U.T @ np.ones(moments.n)
    B = np.einsum("ai,xab,bj->xij", U, moments.P3, UtP21_pinv)

    missing = unseen_symbols(moments)
    if missing:
        shown = ", ".join(str(x + 1) for x in missing)
        logger.warning(f"Symbols never seen in the middle of a triple: {shown}; their operators are zero")

    logger.debug(f"Learned PSR with n={moments.n}, m={m}")
    return PsrModel(
        n=moments.n, m=m, U=U, b1=b1, binf=binf, B=B,
        provenance=_model_provenance(moments),
        singular_values=svd.singular_values,
    )


def psr_from_hmm(params: HmmParams, U: np.ndarray, range_tol: float = RANGE_TOLERANCE) -> PsrModel:
    """
    Analytic representation for a known HMM and an orthonormal basis U of range(O):
        b1 = U^T O pi,  B_x = (U^T O) T diag(O[x]) (U^T O)^-1,  binf = U^T 1
    """
    U = np.asarray(U, dtype=np.float64)
    if U.ndim != 2 or U.shape != (params.n, params.m):
        raise BasisMismatch(f"U must be {params.n} x {params.m}, got shape {U.shape}")
    if np.max(np.abs(U.T @ U - np.eye(params.m))) > ORTHONORMAL_TOLERANCE:
        raise BasisMismatch("U does not have orthonormal columns")
    residual = np.linalg.norm(params.O - U @ (U.T @ params.O), "fro")
    if residual >= range_tol:
        raise BasisMismatch(f"range(U) differs from range(O): ||(I - UU^T)O||_F = {residual:.3e}")

    UO = U.T @ params.O
    s = np.linalg.svd(UO, compute_uv=False)
    if s[-1] <= RANK_TOLERANCE * s[0]:
        raise SingularUO(f"U^T O is not invertible (condition {s[0] / max(s[-1], 1e-300):.3e})")

    # X (U^T O)^-1 via a solve against the transpose
    B = np.stack([
        scipy.linalg.solve(UO.T, (UO @ params.T @ np.diag(params.O[x])).T).T
        for x in range(params.n)
    ])
    return PsrModel(
        n=params.n, m=params.m, U=U,
        b1=UO @ params.pi,
        binf=U.T @ np.ones(params.n),
        B=B,
        provenance=Provenance("analytic_from_hmm"),
    )


def standard_basis_operator(params: HmmParams, x: int) -> np.ndarray:
    """The n x n update map O T diag(O[x]) O^+ relative to the standard basis."""
    if not 0 <= x < params.n:
        raise SymbolOutOfRange(f"Symbol {x + 1} outside 1..{params.n}")
    O_pinv, _ = pseudoinverse(params.O)
    return params.O @ params.T @ np.diag(params.O[x]) @ O_pinv


def observable_operator(moments: MomentStats, U: np.ndarray, x: int) -> np.ndarray:
    """
    The same n x n map written with moments only: P3[x] U (U^T P21 U)^-1 U^T.
    Equals standard_basis_operator when the moments are exact.
    """
    if not 0 <= x < moments.n:
        raise SymbolOutOfRange(f"Symbol {x + 1} outside 1..{moments.n}")
    U = np.asarray(U, dtype=np.float64)
    core = U.T @ moments.P21 @ U
    s = np.linalg.svd(core, compute_uv=False)
    if s[0] <= 0 or s[-1] <= PINV_CUTOFF * s[0]:
        raise PinvDegenerate("U^T P21 U is singular")
    return moments.P3[x] @ U @ scipy.linalg.inv(core) @ U.T
