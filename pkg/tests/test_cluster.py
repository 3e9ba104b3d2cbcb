"""Ward dendrogram against an exhaustive merge-cost oracle."""

import numpy as np
import pytest

from lightbench.cluster import cluster_dimensions, visible_at_threshold, ward_linkage


def oracle_ward(profiles):
    """Recompute every merge from first principles: at each step evaluate
    the within-cluster variance increase of every pair from raw members."""
    clusters = {i: [i] for i in range(profiles.shape[0])}
    next_id = profiles.shape[0]
    merges = []
    while len(clusters) > 1:
        best = None
        for a in sorted(clusters):
            for b in sorted(clusters):
                if a >= b:
                    continue
                pa = profiles[clusters[a]]
                pb = profiles[clusters[b]]
                na, nb = len(pa), len(pb)
                d = na * nb / (na + nb) * float(
                    ((pa.mean(0) - pb.mean(0)) ** 2).sum())
                if best is None or d < best[0] - 1e-15 or (
                        abs(d - best[0]) <= 1e-15 and (a, b) < best[1:]):
                    best = (d, a, b)
        d, a, b = best
        merges.append((a, b, d, next_id))
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        next_id += 1
    return merges


@pytest.mark.parametrize("seed", range(12))
def test_linkage_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    profiles = rng.standard_normal((n, 20))
    fast = ward_linkage(profiles)
    slow = oracle_ward(profiles)
    assert len(fast) == len(slow)
    for (a1, b1, h1, n1), (a2, b2, h2, n2) in zip(fast, slow):
        assert {a1, b1} == {a2, b2}
        assert n1 == n2
        assert h1 == pytest.approx(h2, rel=1e-9)


def test_identical_dimensions_merge_first_at_zero():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((100, 4))
    X[:, 3] = X[:, 0]
    tree = cluster_dimensions(X, pca_labels=())
    a, b, h = tree.merges[0]
    assert {a, b} == {0, 3}
    assert h == pytest.approx(0.0, abs=1e-12)


def test_correlated_pair_merges_before_independent():
    rng = np.random.default_rng(1)
    base = rng.standard_normal(400)
    X = np.stack([base + 0.15 * rng.standard_normal(400),
                  base + 0.15 * rng.standard_normal(400),
                  rng.standard_normal(400)], axis=1)
    tree = cluster_dimensions(X, pca_labels=())
    assert {tree.merges[0][0], tree.merges[0][1]} == {0, 1}


def test_heights_non_decreasing_along_root_paths():
    rng = np.random.default_rng(2)
    X = rng.standard_normal((150, 12))
    tree = cluster_dimensions(X)
    by_id = {n.node_id: n for n in tree.nodes}

    def walk(nid, parent_height):
        node = by_id[nid]
        assert node.height <= parent_height + 1e-9
        if node.children:
            for c in node.children:
                walk(c, node.height)

    walk(tree.root, float("inf"))


def test_pca_subtree_attached_at_root():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((80, 6))
    tree = cluster_dimensions(X, pca_labels=("pca:0", "pca:1"))
    by_id = {n.node_id: n for n in tree.nodes}
    root = by_id[tree.root]
    labels_under = []

    def collect(nid, acc):
        node = by_id[nid]
        if node.label:
            acc.append(node.label)
        if node.children:
            for c in node.children:
                collect(c, acc)

    left, right = root.children
    acc_l, acc_r = [], []
    collect(left, acc_l)
    collect(right, acc_r)
    pca_side = acc_l if "pca:0" in acc_l else acc_r
    data_side = acc_r if pca_side is acc_l else acc_l
    assert set(pca_side) == {"pca:0", "pca:1"}
    assert all(lbl.startswith("dim:") for lbl in data_side)


def test_visible_cut():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((60, 5))
    tree = cluster_dimensions(X, pca_labels=())
    leaves = visible_at_threshold(tree, 0.0)
    assert len(leaves) == 5
    top = visible_at_threshold(tree, float("inf"))
    assert top == [tree.root]
