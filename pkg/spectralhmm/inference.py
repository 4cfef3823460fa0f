"""
Recursive inference with a PsrModel: sequence probability, next-symbol
prediction and the normalized belief update. Beliefs are kept scaled so
that binf . b = 1; the log of every normalizer is accumulated in log_scale.
"""
import logging
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from spectralhmm.config import ALPHA_MIN, DIRECT_PRODUCT_MAX_LENGTH
from spectralhmm.errors import InvalidInit, InvalidState, SymbolOutOfRange, SequenceTooLong
from spectralhmm.spectral import PsrModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BeliefState:
    b: np.ndarray
    log_scale: float
    t: int
    valid: bool = True
    # 1-based index of the observation whose normalizer fell below ALPHA_MIN
    failed_step: Optional[int] = None
    # Normalizer of the most recent update (binf . B_x b before rescaling)
    last_alpha: Optional[float] = None


@dataclass(frozen=True)
class Prediction:
    raw: np.ndarray
    clamped: np.ndarray


@dataclass(frozen=True)
class SequenceScore:
    log_prob: float
    valid: bool
    failed_step: Optional[int] = None


@dataclass(frozen=True)
class StepRecord:
    """One line of the streaming protocol."""

    symbol: int
    alpha: float
    log_prob: float
    valid: bool
    distribution: Optional[np.ndarray]


def init_belief(model: PsrModel) -> BeliefState:
    """b = b1 / (binf . b1); log_scale = log(binf . b1)."""
    z = float(model.binf @ model.b1)
    if not np.isfinite(z) or z <= 0:
        raise InvalidInit(f"binf . b1 = {z!r}; the initial belief cannot be normalized")
    return BeliefState(b=model.b1 / z, log_scale=float(np.log(z)), t=0)


def _require_valid(state: BeliefState):
    if not state.valid:
        raise InvalidState(f"Belief state became invalid at step {state.failed_step}")


def clamp_distribution(raw: np.ndarray) -> np.ndarray:
    """max(raw, 0) renormalized; uniform when nothing positive survives."""
    clipped = np.maximum(raw, 0.0)
    total = clipped.sum()
    if not np.isfinite(total) or total <= 0:
        return np.full(raw.shape, 1.0 / raw.size)
    return clipped / total


def predict_next_distribution(model: PsrModel, state: BeliefState) -> Prediction:
    """p[x] = binf . B_x b, reported raw and clamped to a distribution."""
    _require_valid(state)
    raw = np.einsum("i,xij,j->x", model.binf, model.B, state.b)
    return Prediction(raw=raw, clamped=clamp_distribution(raw))


def _check_symbol(model: PsrModel, x: int) -> int:
    x = int(x)
    if not 0 <= x < model.n:
        raise SymbolOutOfRange(f"Symbol {x + 1} outside 1..{model.n}")
    return x


def belief_update(model: PsrModel, state: BeliefState, x: int) -> BeliefState:
    """
    b' = B_x b / alpha with alpha = binf . B_x b. A normalizer at or below
    ALPHA_MIN (or not finite) returns an invalid state instead of raising.
    """
    x = _check_symbol(model, x)
    if not state.valid:
        return BeliefState(state.b, state.log_scale, state.t + 1, False, state.failed_step, state.last_alpha)

    unnormalized = model.B[x] @ state.b
    alpha = float(model.binf @ unnormalized)
    if not np.isfinite(alpha) or alpha <= ALPHA_MIN:
        logger.debug(f"Normalizer {alpha!r} at step {state.t + 1} invalidates the belief")
        return BeliefState(state.b, state.log_scale, state.t + 1, False, state.t + 1, alpha)
    return BeliefState(
        b=unnormalized / alpha,
        log_scale=state.log_scale + float(np.log(alpha)),
        t=state.t + 1,
        last_alpha=alpha,
    )


def sequence_logprob(model: PsrModel, seq: Sequence[int]) -> SequenceScore:
    """log Pr[seq] via init_belief and one belief_update per symbol."""
    try:
        state = init_belief(model)
    except InvalidInit:
        return SequenceScore(-np.inf, False, 0)
    for x in seq:
        state = belief_update(model, state, x)
        if not state.valid:
            return SequenceScore(-np.inf, False, state.failed_step)
    return SequenceScore(state.log_scale, True)


def sequence_probability_direct(model: PsrModel, seq: Sequence[int]) -> float:
    """binf . B_xt ... B_x1 b1 without rescaling; may be negative for empirical models."""
    if len(seq) > DIRECT_PRODUCT_MAX_LENGTH:
        raise SequenceTooLong(
            f"Direct evaluation is limited to {DIRECT_PRODUCT_MAX_LENGTH} symbols, got {len(seq)}"
        )
    v = model.b1
    for x in seq:
        v = model.B[_check_symbol(model, x)] @ v
    return float(model.binf @ v)


def predicted_observation_vector(model: PsrModel, state: BeliefState) -> np.ndarray:
    """U b: the predicted next-observation distribution in the standard basis of R^n."""
    _require_valid(state)
    return model.U @ state.b


def filter_sequence(model: PsrModel, symbols: Iterable[int]) -> Iterator[StepRecord]:
    """
    Observes symbols one at a time, lazily: each record is produced as soon as
    its symbol is pulled from `symbols`, so an unbounded stream works. Each
    record carries the clamped prediction for the NEXT symbol (None once
    invalid), the normalizer and the cumulative log-probability.

    init_belief runs immediately, so InvalidInit is raised before any symbol
    is read.
    """
    return _records(model, init_belief(model), symbols)


def _records(model: PsrModel, state: BeliefState, symbols: Iterable[int]) -> Iterator[StepRecord]:
    for x in symbols:
        state = belief_update(model, state, x)
        yield step_record(model, state, x)


def step_record(model: PsrModel, state: BeliefState, x: int) -> StepRecord:
    alpha = state.last_alpha if state.last_alpha is not None else float("nan")
    if not state.valid:
        return StepRecord(int(x), alpha, -np.inf, False, None)
    return StepRecord(int(x), alpha, state.log_scale, True, predict_next_distribution(model, state).clamped)
