import warnings

import numpy as np

from spectralhmm.hmm import HmmParams, validate_hmm
from spectralhmm.moments import Provenance
from spectralhmm.spectral import PsrModel


def random_hmm(rng: np.random.Generator, m: int, n: int) -> HmmParams:
    """
    Random valid HMM. T is pulled towards the identity and each state gets a
    favourite symbol so that the instance stays well conditioned.
    """
    T = 0.5 * np.eye(m) + 0.5 * rng.dirichlet(np.ones(m), size=m).T
    favourite = np.zeros((n, m))
    favourite[rng.permutation(n)[:m], np.arange(m)] = 1.0
    O = 0.5 * favourite + 0.5 * rng.dirichlet(np.ones(n), size=m).T
    pi = 0.5 / m + 0.5 * rng.dirichlet(np.ones(m))
    # renormalize away rounding from the mixtures
    T = T / T.sum(axis=0)
    O = O / O.sum(axis=0)
    pi = pi / pi.sum()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return validate_hmm(T, O, pi)


def coin_hmm() -> HmmParams:
    """One hidden state emitting a fair coin: every length-t sequence has probability 2^-t."""
    return validate_hmm([[1.0]], [[0.5], [0.5]], [1.0])


def identity_hmm() -> HmmParams:
    """Two states observed directly (O = I)."""
    return validate_hmm([[0.9, 0.2], [0.1, 0.8]], np.eye(2), [0.5, 0.5])


def sticky_hmm() -> HmmParams:
    """Fixed m=2, n=4 instance used for the convergence checks."""
    T = [[0.95, 0.05], [0.05, 0.95]]
    O = [
        [0.90, 0.01],
        [0.08, 0.01],
        [0.01, 0.08],
        [0.01, 0.90],
    ]
    return validate_hmm(T, O, [0.5, 0.5])


def hmm_dict(params: HmmParams) -> dict:
    return {
        "m": params.m,
        "n": params.n,
        "T": params.T.tolist(),
        "O": params.O.tolist(),
        "pi": params.pi.tolist(),
    }


def dead_end_model(alpha: float = 0.0) -> PsrModel:
    """n=2, m=1 model where symbol 2 (index 1) has normalizer `alpha`."""
    return PsrModel(
        n=2, m=1,
        U=np.array([[1.0], [0.0]]),
        b1=np.array([1.0]),
        binf=np.array([1.0]),
        B=np.array([[[1.0]], [[alpha]]]),
        provenance=Provenance("analytic_from_hmm"),
    )
