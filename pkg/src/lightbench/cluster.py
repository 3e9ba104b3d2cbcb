"""Agglomerative clustering of latent dimensions by Ward's criterion.

Each dimension is represented by its standardized column profile over
objects; pairs merge in order of minimum within-cluster variance increase
(Lance-Williams recurrence). PCA component axes are attached as a special
subtree directly under the root and never merge into data-dimension
clusters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TreeNode:
    node_id: int
    height: float
    label: str | None = None  # leaves only
    children: tuple[int, int] | None = None


@dataclass
class DimensionTree:
    nodes: list[TreeNode]
    root: int
    merges: list[tuple[int, int, float]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "root": self.root,
            "nodes": [{"id": n.node_id, "height": n.height, "label": n.label,
                       "children": list(n.children) if n.children else None}
                      for n in self.nodes],
        }


def ward_linkage(profiles: np.ndarray):
    """Ward merges over row profiles.

    Returns a list of (cluster_a, cluster_b, height, new_cluster) with
    cluster ids 0..n-1 for leaves and n.. for merges; heights are the
    within-cluster variance increases of each merge (non-decreasing along
    any root path). Ties break on the lexicographically smallest pair.
    """
    n = profiles.shape[0]
    if n < 2:
        raise ValueError("need at least 2 profiles")
    # D[i][j] = 2 * variance increase of merging i and j
    size = {i: 1 for i in range(n)}
    D = {}
    for i in range(n):
        for j in range(i + 1, n):
            diff = profiles[i] - profiles[j]
            D[(i, j)] = float(diff @ diff)
    merges = []
    active = list(range(n))
    next_id = n
    while len(active) > 1:
        best = None
        for ai in range(len(active)):
            for bi in range(ai + 1, len(active)):
                a, b = active[ai], active[bi]
                key = (a, b) if a < b else (b, a)
                d = D[key]
                if best is None or d < best[0] - 1e-15 or (
                        abs(d - best[0]) <= 1e-15 and key < (best[1], best[2])):
                    best = (d, key[0], key[1])
        d, a, b = best
        new = next_id
        next_id += 1
        merges.append((a, b, d / 2.0, new))
        sa, sb = size[a], size[b]
        for c in active:
            if c in (a, b):
                continue
            sc = size[c]
            dac = D[(a, c) if a < c else (c, a)]
            dbc = D[(b, c) if b < c else (c, b)]
            dnew = ((sa + sc) * dac + (sb + sc) * dbc - sc * d) / (sa + sb + sc)
            D[(c, new)] = dnew
        size[new] = sa + sb
        active = [c for c in active if c not in (a, b)] + [new]
    return merges


def cluster_dimensions(latents: np.ndarray,
                       pca_labels: tuple[str, ...] = ("pca:0", "pca:1"),
                       dim_labels: list[str] | None = None) -> DimensionTree:
    """Ward dendrogram over latent dimensions plus the PCA subtree."""
    X = np.asarray(latents, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 2:
        raise ValueError("need a (objects >= 2, dims >= 2) latent matrix")
    dims = X.shape[1]
    if dim_labels is None:
        dim_labels = [f"dim:{i}" for i in range(dims)]
    # standardized column profiles: dimensions become comparable rows
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd == 0, 1.0, sd)
    profiles = ((X - mu) / sd).T

    merges = ward_linkage(profiles)
    nodes = [TreeNode(i, 0.0, label=dim_labels[i]) for i in range(dims)]
    for a, b, h, new in merges:
        nodes.append(TreeNode(new, h, children=(a, b)))
    data_root = merges[-1][3]
    top = nodes[data_root].height
    if not pca_labels:
        return DimensionTree(nodes, data_root,
                             [(a, b, h) for a, b, h, _ in merges])

    # PCA axes live in their own subtree attached just above the data root
    pca_ids = []
    for lbl in pca_labels:
        nid = len(nodes)
        nodes.append(TreeNode(nid, 0.0, label=lbl))
        pca_ids.append(nid)
    sub = pca_ids[0]
    for nid in pca_ids[1:]:
        parent = len(nodes)
        nodes.append(TreeNode(parent, top, children=(sub, nid)))
        sub = parent
    root = len(nodes)
    nodes.append(TreeNode(root, top * (1 + 1e-9) if top > 0 else 1.0,
                          children=(data_root, sub)))
    return DimensionTree(nodes, root, [(a, b, h) for a, b, h, _ in merges])


def visible_at_threshold(tree: DimensionTree, threshold: float) -> list[int]:
    """Node ids whose parent merged above the threshold (the visible cut)."""
    by_id = {n.node_id: n for n in tree.nodes}
    out = []

    def walk(nid: int):
        node = by_id[nid]
        if node.children is None or node.height <= threshold:
            out.append(nid)
            return
        for c in node.children:
            walk(c)

    walk(tree.root)
    return out
