"""The standardized latent space: dimension semantics and scaling.

Latent vectors are stored in standardized units (per-dimension mean 0,
std 1 over the training set); attack budgets and robustness scores are
expressed in these units so "two standard deviations" means the same
thing on every dimension.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LATENT_DIM = 32

SEMANTIC_LABELS = (
    "hue",
    "brightness",
    "lamp_size",
    "housing_darkness",
    "background_tone",
    "occlusion",
    "vertical_offset",
)
N_SEMANTIC = len(SEMANTIC_LABELS)


def dimension_labels(dim: int = LATENT_DIM) -> list[str]:
    """One label per dimension: the semantic dims first, the rest nuisance."""
    if dim < N_SEMANTIC:
        raise ValueError(f"need at least {N_SEMANTIC} dimensions, got {dim}")
    return list(SEMANTIC_LABELS) + [f"nuisance_{i}" for i in range(dim - N_SEMANTIC)]


@dataclass
class LatentStats:
    """Per-dimension mean/std used to (de)standardize latent vectors.

    Dimensions with zero empirical variance get std 1 and are flagged.
    """

    mean: np.ndarray
    std: np.ndarray
    degenerate_dims: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.std = np.asarray(self.std, dtype=np.float64)
        if self.mean.shape != self.std.shape or self.mean.ndim != 1:
            raise ValueError("mean/std must be 1-D arrays of equal length")
        if np.any(self.std <= 0):
            raise ValueError("std must be strictly positive")

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @classmethod
    def identity(cls, dim: int = LATENT_DIM) -> "LatentStats":
        return cls(np.zeros(dim), np.ones(dim))

    @classmethod
    def fit(cls, raw: np.ndarray) -> "LatentStats":
        """Empirical per-dimension stats over a (n, dim) sample of raw latents."""
        raw = np.asarray(raw, dtype=np.float64)
        if raw.ndim != 2 or raw.shape[0] < 2:
            raise ValueError("need a (n >= 2, dim) array to fit stats")
        mean = raw.mean(axis=0)
        std = raw.std(axis=0)
        degenerate = [int(i) for i in np.nonzero(std == 0)[0]]
        std = np.where(std == 0, 1.0, std)
        return cls(mean, std, degenerate)


def standardize(raw: np.ndarray, stats: LatentStats) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    if raw.shape[-1] != stats.dim:
        raise ValueError(f"dimension mismatch: {raw.shape[-1]} vs {stats.dim}")
    return (raw - stats.mean) / stats.std


def destandardize(z: np.ndarray, stats: LatentStats) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape[-1] != stats.dim:
        raise ValueError(f"dimension mismatch: {z.shape[-1]} vs {stats.dim}")
    return z * stats.std + stats.mean


def check_latent(z: np.ndarray, dim: int = LATENT_DIM) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (dim,):
        raise ValueError(f"latent must have shape ({dim},), got {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("latent contains non-finite values")
    return z
