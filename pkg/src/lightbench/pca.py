"""PCA over latent vectors: fit once on training data, reuse everywhere."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # (n_components, dim), orthonormal rows
    explained_variance: np.ndarray  # non-increasing

    def project(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        return (z - self.mean) @ self.components.T

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(),
                "components": self.components.tolist(),
                "explained_variance": self.explained_variance.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PCAModel":
        return cls(np.asarray(d["mean"]), np.asarray(d["components"]),
                   np.asarray(d["explained_variance"]))


def fit_pca(latents: np.ndarray, n_components: int = 2) -> PCAModel:
    """Eigendecomposition of the covariance of mean-centered latents."""
    X = np.asarray(latents, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need at least 2 latent vectors")
    mean = X.mean(axis=0)
    Xc = X - mean
    cov = (Xc.T @ Xc) / (X.shape[0] - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals)[::-1][:n_components]
    components = evecs[:, order].T
    # deterministic sign: largest-magnitude coefficient positive
    for i in range(components.shape[0]):
        j = int(np.argmax(np.abs(components[i])))
        if components[i, j] < 0:
            components[i] = -components[i]
    return PCAModel(mean, components, np.maximum(evals[order], 0.0))


def project(model: PCAModel, z: np.ndarray) -> np.ndarray:
    return model.project(z)
