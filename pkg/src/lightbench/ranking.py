"""Rank-To-Interpret: score latent dimensions by mutual information between
their values and a binary selection label.

Uses the k-nearest-neighbor estimator for continuous-feature/discrete-target
pairs (k = 3), with tiny seeded jitter to break ties. Negative raw estimates
clip to zero. Dimensions come back sorted by descending MI.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from ._kernels import count_within_radius as _count_within_radius

DEFAULT_K = 3
JITTER_SCALE = 1e-10


@dataclass
class DimensionRanking:
    entries: list[tuple[str, float]]  # (dimension id, MI in nats), descending

    def to_dict(self) -> dict:
        return {"entries": [[d, float(v)] for d, v in self.entries]}

    def top(self) -> str:
        return self.entries[0][0]


def _knn_radius_sorted(s: np.ndarray, k: int) -> np.ndarray:
    """Distance to the k-th nearest neighbor for each element of a sorted
    1-D array (neighbors are contiguous in sorted order)."""
    n = len(s)
    r = np.full(n, np.inf)
    idx = np.arange(n)
    for j in range(k + 1):
        lo = idx - j
        hi = lo + k
        ok = (lo >= 0) & (hi < n)
        cand = np.full(n, np.inf)
        cand[ok] = np.maximum(s[idx[ok]] - s[lo[ok]], s[hi[ok]] - s[idx[ok]])
        r = np.minimum(r, cand)
    return r


def mi_continuous_discrete(x: np.ndarray, labels: np.ndarray,
                           k: int = DEFAULT_K, seed: int = 0) -> float:
    """kNN MI estimate (nats, >= 0) between a 1-D feature and binary labels."""
    x = np.asarray(x, dtype=np.float64).copy()
    labels = np.asarray(labels)
    n = len(x)
    rng = np.random.default_rng(seed)
    scale = np.maximum(1.0, np.mean(np.abs(x)))
    x += JITTER_SCALE * scale * rng.standard_normal(n)

    radius = np.empty(n)
    label_counts = np.empty(n)
    k_used = np.empty(n)
    for val in np.unique(labels):
        mask = labels == val
        cnt = int(mask.sum())
        if cnt <= 1:
            # a singleton class carries no neighborhood; drop it
            radius[mask] = 0.0
            label_counts[mask] = cnt
            k_used[mask] = 1
            continue
        kk = min(k, cnt - 1)
        vals = x[mask]
        order = np.argsort(vals)
        s = vals[order]
        r_sorted = _knn_radius_sorted(s, kk)
        r = np.empty(cnt)
        r[order] = r_sorted
        radius[mask] = r
        label_counts[mask] = cnt
        k_used[mask] = kk

    # count points of any label strictly inside each radius (self included);
    # the radius shrinks one ulp so the defining k-th neighbor is excluded
    order = np.argsort(x)
    all_sorted = x[order]
    shrunk = np.nextafter(radius, 0)[order]
    counts_sorted = np.empty(n, dtype=np.int64)
    _count_within_radius(all_sorted, shrunk, counts_sorted)
    m_all = np.empty(n, dtype=np.int64)
    m_all[order] = counts_sorted
    m_all = np.maximum(m_all, 1)

    mi = (digamma(n) + np.mean(digamma(k_used))
          - np.mean(digamma(label_counts)) - np.mean(digamma(m_all)))
    return float(max(mi, 0.0))


def rank_to_interpret(latents: np.ndarray, selection_mask: np.ndarray,
                      k: int = DEFAULT_K, seed: int = 0,
                      dim_labels: list[str] | None = None) -> DimensionRanking:
    """Rank every latent dimension by MI against the selection label."""
    X = np.asarray(latents, dtype=np.float64)
    mask = np.asarray(selection_mask, dtype=bool)
    if X.ndim != 2 or X.shape[0] != mask.shape[0]:
        raise ValueError("latents and selection mask disagree")
    n_sel = int(mask.sum())
    if n_sel == 0 or n_sel == len(mask):
        raise ValueError("selection must be neither empty nor universal")
    if dim_labels is None:
        dim_labels = [f"dim:{i}" for i in range(X.shape[1])]
    entries = []
    for d in range(X.shape[1]):
        mi = mi_continuous_discrete(X[:, d], mask.astype(int), k=k,
                                    seed=seed + d)
        entries.append((dim_labels[d], mi))
    entries.sort(key=lambda t: (-t[1], t[0]))
    return DimensionRanking(entries)
