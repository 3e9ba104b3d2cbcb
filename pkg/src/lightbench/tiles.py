"""2-D tile and 1-D dimension-bar aggregation of records over latent axes.

Tiles bin records over a view range; each non-empty bin carries its count,
median scores, a representative object (the member holding the lower-median
active score, ties to the lower object id), the member list, and the mean
of the members' gradients projected onto the two axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pca import PCAModel


@dataclass
class Tile:
    ix: int
    iy: int
    count: int = 0
    representative: str | None = None
    median_confidence: float | None = None
    median_robustness: float | None = None
    mean_gradient: tuple[float, float] | None = None
    members: list[str] = field(default_factory=list)


@dataclass
class TileGrid:
    axis_x: str
    axis_y: str
    view_range: tuple[float, float, float, float]  # x_lo, x_hi, y_lo, y_hi
    bins: int
    tiles: list[Tile]
    in_range: int
    out_of_range: int

    def to_dict(self) -> dict:
        return {
            "axis_x": self.axis_x, "axis_y": self.axis_y,
            "view_range": list(self.view_range), "bins": self.bins,
            "in_range": self.in_range, "out_of_range": self.out_of_range,
            "tiles": [{
                "ix": t.ix, "iy": t.iy, "count": t.count,
                "representative": t.representative,
                "median_confidence": t.median_confidence,
                "median_robustness": t.median_robustness,
                "mean_gradient": list(t.mean_gradient) if t.mean_gradient else None,
                "members": t.members,
            } for t in self.tiles],
        }


@dataclass
class DimensionBar:
    dimension: str
    edges: np.ndarray
    counts: list[int]
    background_counts: list[int]
    median_scores: list[float | None]
    gradient_signs: list[float | None]
    representatives: list[list[str]]

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "edges": np.asarray(self.edges).tolist(),
            "counts": self.counts,
            "background_counts": self.background_counts,
            "median_scores": self.median_scores,
            "gradient_signs": self.gradient_signs,
            "representatives": self.representatives,
        }


def lower_median(values: np.ndarray) -> float:
    """Median that is always a member value (lower of the two middles)."""
    v = np.sort(np.asarray(values))
    return float(v[(len(v) - 1) // 2])


def axis_values(records, axis: str, pca: PCAModel | None):
    """Coordinates of records on a named axis: 'dim:<i>' or 'pca:<i>'."""
    kind, _, idx = axis.partition(":")
    i = int(idx)
    if kind == "dim":
        return np.array([r.latent[i] for r in records])
    if kind == "pca":
        if pca is None:
            raise ValueError("PCA axis requested but no PCA model given")
        return np.array([pca.project(r.latent)[i] for r in records])
    raise ValueError(f"unknown axis {axis!r} (want 'dim:<i>' or 'pca:<i>')")


def _gradient_components(records, axis: str, pca: PCAModel | None):
    kind, _, idx = axis.partition(":")
    i = int(idx)
    out = []
    for r in records:
        g = r.gradient
        if g is None:
            out.append(np.nan)
        elif kind == "dim":
            out.append(g[i])
        else:
            out.append(float(np.asarray(pca.components[i]) @ np.asarray(g)))
    return np.array(out)


def _active_score(r, metric: str):
    if metric == "robustness":
        return r.robustness
    det = r.detection
    if r.score is not None:
        return r.score
    return det.top_confidence if det is not None else None


def build_tiles(records, axis_x: str, axis_y: str,
                view_range: tuple[float, float, float, float], bins: int,
                pca: PCAModel | None = None,
                metric: str = "confidence") -> TileGrid:
    """Aggregate records into a bins x bins grid over the view range."""
    if bins < 1:
        raise ValueError("bins must be >= 1")
    x_lo, x_hi, y_lo, y_hi = view_range
    if not (x_hi > x_lo and y_hi > y_lo):
        raise ValueError(f"degenerate view range {view_range}")
    if axis_x == axis_y:
        raise ValueError("axes must be distinct")
    xs = axis_values(records, axis_x, pca)
    ys = axis_values(records, axis_y, pca)
    gx = _gradient_components(records, axis_x, pca)
    gy = _gradient_components(records, axis_y, pca)

    cells: dict[tuple[int, int], list[int]] = {}
    out_of_range = 0
    for i, r in enumerate(records):
        if not (x_lo <= xs[i] <= x_hi and y_lo <= ys[i] <= y_hi):
            out_of_range += 1
            continue
        ix = min(int((xs[i] - x_lo) / (x_hi - x_lo) * bins), bins - 1)
        iy = min(int((ys[i] - y_lo) / (y_hi - y_lo) * bins), bins - 1)
        cells.setdefault((ix, iy), []).append(i)

    tiles = []
    for (ix, iy), idxs in sorted(cells.items()):
        members = [records[i] for i in idxs]
        confs = [s for s in (_active_score(r, "confidence") for r in members) if s is not None]
        robs = [r.robustness for r in members if r.robustness is not None]
        key = "robustness" if metric == "robustness" else "confidence"
        scored = [(s, r.object_id) for r, s in
                  ((r, _active_score(r, key)) for r in members) if s is not None]
        rep = None
        if scored:
            scored.sort(key=lambda t: (t[0], t[1]))
            rep = scored[(len(scored) - 1) // 2][1]
        elif members:
            rep = sorted(m.object_id for m in members)[0]
        grads_x = gx[idxs]
        grads_y = gy[idxs]
        ok = ~np.isnan(grads_x) & ~np.isnan(grads_y)
        mean_grad = ((float(grads_x[ok].mean()), float(grads_y[ok].mean()))
                     if ok.any() else None)
        tiles.append(Tile(
            ix=ix, iy=iy, count=len(members), representative=rep,
            median_confidence=lower_median(confs) if confs else None,
            median_robustness=lower_median(robs) if robs else None,
            mean_gradient=mean_grad,
            members=[m.object_id for m in members]))
    return TileGrid(axis_x, axis_y, view_range, bins, tiles,
                    in_range=len(records) - out_of_range,
                    out_of_range=out_of_range)


def bin_dimension(records, dim_axis: str, bin_count: int,
                  reference, pca: PCAModel | None = None,
                  metric: str = "confidence", seed: int = 0) -> DimensionBar:
    """1-D aggregation with shared bin edges spanning the reference
    (training) range padded by 0.5; foreground counts come from ``records``,
    background counts from ``reference``."""
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    ref_vals = axis_values(reference, dim_axis, pca)
    lo = float(ref_vals.min()) - 0.5
    hi = float(ref_vals.max()) + 0.5
    edges = np.linspace(lo, hi, bin_count + 1)
    fg_vals = axis_values(records, dim_axis, pca) if records else np.array([])
    grads = _gradient_components(records, dim_axis, pca) if records else np.array([])

    rng = np.random.default_rng(seed)
    counts, bg_counts, medians, gsigns, reps = [], [], [], [], []
    bg_idx = np.clip(np.digitize(ref_vals, edges) - 1, 0, bin_count - 1)
    fg_idx = (np.clip(np.digitize(fg_vals, edges) - 1, 0, bin_count - 1)
              if len(fg_vals) else np.array([], dtype=int))
    for b in range(bin_count):
        in_ref = int((bg_idx == b).sum())
        members = [i for i in range(len(fg_vals))
                   if fg_idx[i] == b and lo <= fg_vals[i] <= hi]
        counts.append(len(members))
        bg_counts.append(in_ref)
        scores = [s for s in (_active_score(records[i], metric) for i in members)
                  if s is not None]
        medians.append(lower_median(scores) if scores else None)
        g = grads[members] if members else np.array([])
        g = g[~np.isnan(g)] if len(g) else g
        gsigns.append(float(np.sign(g.mean())) if len(g) else None)
        ids = sorted(records[i].object_id for i in members)
        if len(ids) > 5:
            ids = list(rng.choice(ids, size=5, replace=False))
        reps.append(ids)
    return DimensionBar(dim_axis, edges, counts, bg_counts, medians, gsigns, reps)
