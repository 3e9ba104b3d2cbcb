"""Black-box gradient estimation by natural evolution strategies.

The gradient of a scalar score function is approximated from K probes at
Gaussian perturbations of the query point: probe scores are z-normalized
(population std) and the estimate is the score-weighted mean direction,

    grad = (1 / (K * delta)) * sum_k sigma_k * norm_score_k.

A flat response (zero score std) yields the zero vector.
"""

from __future__ import annotations

from typing import Callable

import numpy as np


def sample_directions(rng: np.random.Generator, k: int, dim: int) -> np.ndarray:
    return rng.standard_normal((k, dim))


def gradient_from_scores(sigmas: np.ndarray, scores: np.ndarray, delta: float) -> np.ndarray:
    """The NES estimate given probe directions and their raw scores."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        bad = int(np.nonzero(~np.isfinite(scores))[0][0])
        raise ValueError(f"non-finite score from probe {bad}")
    std = scores.std()  # population std
    if std < 1e-12:
        return np.zeros(sigmas.shape[1])
    norm = (scores - scores.mean()) / std
    k = sigmas.shape[0]
    return (sigmas * norm[:, None]).sum(axis=0) / (k * delta)


def estimate_gradient(query: Callable[[np.ndarray], float], z: np.ndarray,
                      k: int, delta: float,
                      seed: int | np.random.Generator = 0) -> np.ndarray:
    """Estimate the gradient of ``query`` at ``z`` from k probes."""
    if k < 2:
        raise ValueError("need at least 2 probes")
    if delta <= 0:
        raise ValueError("delta must be positive")
    z = np.asarray(z, dtype=np.float64)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    sigmas = sample_directions(rng, k, z.shape[0])
    scores = np.empty(k)
    for i in range(k):
        scores[i] = query(z + delta * sigmas[i])
        if not np.isfinite(scores[i]):
            raise ValueError(f"non-finite score from probe {i} at offset delta*sigma")
    return gradient_from_scores(sigmas, scores, delta)
