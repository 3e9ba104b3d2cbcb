"""Synthetic driving-scene generation with ground truth.

Scenes are deterministic functions of (config, seed): a sky gradient with
smooth value noise, confusable distractors (car rear-light pairs and
pedestrian-sign rectangles without housings), and 0..3 procedurally
rendered traffic lights inserted at non-overlapping footprints.

Latents are sampled per class from truncated normals in the codec's raw
units; stored object latents are standardized against the training-set
statistics, which are fit here at dataset-build time.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import ndimage

from . import _kernels as K
from .boxes import Box
from .codec import Patch, TrafficLightCodec, CLASS_OFF_BRIGHTNESS, CLASS_HUE_RED, CLASS_HUE_GREEN
from .evaluation import CLASSES, DetectionRecord
from .latent import LATENT_DIM, N_SEMANTIC, LatentStats, SEMANTIC_LABELS, standardize

log = logging.getLogger(__name__)

FOOTPRINT_SCALE = K.PATCH / (2 * K.HOUSING_HALF_H)  # footprint side per unit of size


@dataclass
class DimSpec:
    """Truncated normal sampling spec for one latent dimension (raw units)."""

    mean: float = 0.0
    std: float = 0.8
    lo: float = -2.0
    hi: float = 2.0

    def sample(self, rng: np.random.Generator) -> float:
        for _ in range(200):
            x = rng.normal(self.mean, self.std)
            if self.lo <= x <= self.hi:
                return x
        return float(np.clip(self.mean, self.lo, self.hi))


CLASS_HUE_SPECS = {
    "red": DimSpec(2.0, 0.45, CLASS_HUE_RED + 0.2, 3.2),
    "green": DimSpec(-2.0, 0.45, -3.2, CLASS_HUE_GREEN - 0.2),
    "yellow": DimSpec(0.0, 0.4, -0.8, 0.8),
    "off": DimSpec(0.0, 1.2, -2.4, 2.4),
}
OFF_BRIGHTNESS_SPEC = DimSpec(-3.0, 0.25, -3.6, CLASS_OFF_BRIGHTNESS - 0.1)


@dataclass
class DatasetConfig:
    n_scenes: int = 360
    scene_size: int = 256
    lights_min: int = 1
    lights_max: int = 3
    size_min: float = 16.0
    size_max: float = 64.0
    size_skew: bool = True  # perspective-like 1/size^2 density (small = frequent)
    class_mix: dict = field(default_factory=lambda: {
        "red": 0.32, "green": 0.32, "yellow": 0.22, "off": 0.14})
    max_cars: int = 1
    max_signs: int = 1
    # per-dimension overrides, by semantic dim name; class_dim_overrides wins
    dim_overrides: dict = field(default_factory=dict)
    class_dim_overrides: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetConfig":
        d = dict(d)
        for key in ("dim_overrides",):
            if key in d:
                d[key] = {k: DimSpec(**v) if isinstance(v, dict) else v
                          for k, v in d[key].items()}
        if "class_dim_overrides" in d:
            d["class_dim_overrides"] = {
                c: {k: DimSpec(**v) if isinstance(v, dict) else v for k, v in dims.items()}
                for c, dims in d["class_dim_overrides"].items()}
        return cls(**d)


@dataclass
class SceneImage:
    scene_id: str
    pixels: np.ndarray  # (H, W, 3) float32 in [0, 1]
    seed: int


@dataclass
class ObjectRecord:
    """One annotated traffic-light object (one extraction-table row)."""

    object_id: str
    scene_id: str
    gt_box: Box
    cls: str
    size: float
    footprint: Box
    latent: np.ndarray  # standardized
    patch: Patch | None = None
    detection: DetectionRecord | None = None
    score: float | None = None  # in-scene detection score at extraction time
    gradient: np.ndarray | None = None
    robustness: float | None = None


@dataclass
class Dataset:
    config: DatasetConfig
    seed: int
    stats: LatentStats
    codec: TrafficLightCodec
    scenes: list[SceneImage]
    objects: list[ObjectRecord]
    skipped_scenes: list[str] = field(default_factory=list)

    def scene_by_id(self, scene_id: str) -> SceneImage:
        return self._index()[scene_id]

    def _index(self):
        if not hasattr(self, "_scene_map"):
            self._scene_map = {s.scene_id: s for s in self.scenes}
        return self._scene_map


def sample_latent(cls: str, cfg: DatasetConfig, rng: np.random.Generator,
                  dim: int = LATENT_DIM) -> np.ndarray:
    """Raw latent for one object of a class, honoring config overrides."""
    raw = np.empty(dim)
    specs: dict[str, DimSpec] = {name: DimSpec() for name in SEMANTIC_LABELS}
    specs["hue"] = CLASS_HUE_SPECS[cls]
    if cls == "off":
        specs["brightness"] = OFF_BRIGHTNESS_SPEC
    for name, sp in cfg.dim_overrides.items():
        specs[name] = sp
    for name, sp in cfg.class_dim_overrides.get(cls, {}).items():
        specs[name] = sp
    for i, name in enumerate(SEMANTIC_LABELS):
        raw[i] = specs[name].sample(rng)
    for i in range(N_SEMANTIC, dim):
        raw[i] = DimSpec(0.0, 1.0, -3.0, 3.0).sample(rng)
    return raw


def classify_raw(raw: np.ndarray) -> str:
    if raw[1] < CLASS_OFF_BRIGHTNESS:
        return "off"
    if raw[0] >= CLASS_HUE_RED:
        return "red"
    if raw[0] <= CLASS_HUE_GREEN:
        return "green"
    return "yellow"


def _paint_rect(img, x0, y0, w, h, color):
    H, W = img.shape[:2]
    x0i, y0i = max(int(x0), 0), max(int(y0), 0)
    x1i, y1i = min(int(x0 + w), W), min(int(y0 + h), H)
    if x1i > x0i and y1i > y0i:
        img[y0i:y1i, x0i:x1i] = color


def _paint_disc(img, cx, cy, r, color):
    H, W = img.shape[:2]
    y0, y1 = max(int(cy - r - 1), 0), min(int(cy + r + 2), H)
    x0, x1 = max(int(cx - r - 1), 0), min(int(cx + r + 2), W)
    if y1 <= y0 or x1 <= x0:
        return
    yy, xx = np.mgrid[y0:y1, x0:x1]
    d = np.sqrt((xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2) - r
    a = np.clip(0.5 - d, 0.0, 1.0)[..., None].astype(np.float32)
    img[y0:y1, x0:x1] = img[y0:y1, x0:x1] * (1 - a) + np.asarray(color, np.float32) * a


def _background(size: int, rng: np.random.Generator) -> np.ndarray:
    top_v = rng.uniform(0.55, 0.66)
    bot_v = rng.uniform(0.36, 0.46)
    tint_b = rng.uniform(0.010, 0.030)
    tint_r = rng.uniform(0.005, 0.018)
    grad = np.linspace(top_v, bot_v, size, dtype=np.float32)[:, None]
    img = np.empty((size, size, 3), np.float32)
    img[:, :, 0] = grad - tint_r
    img[:, :, 1] = grad
    img[:, :, 2] = grad + tint_b
    grid = rng.normal(0.0, 0.012, size=(8, 8))
    noise = ndimage.zoom(grid, size / 8, order=1, mode="nearest").astype(np.float32)
    img += noise[:, :, None]
    return np.clip(img, 0.0, 1.0)


def _boxes_clear(box: tuple, others: list[tuple], gap: float) -> bool:
    x, y, w, h = box
    for ox, oy, ow, oh in others:
        if (x < ox + ow + gap and ox < x + w + gap
                and y < oy + oh + gap and oy < y + h + gap):
            return False
    return True


def _draw_distractors(img, rng, keepout: list[tuple], cfg: DatasetConfig):
    H = img.shape[0]
    for _ in range(rng.integers(0, cfg.max_cars + 1)):
        w = rng.uniform(18, 36)
        h = rng.uniform(8, 14)
        for _try in range(20):
            x = rng.uniform(2, img.shape[1] - w - 2)
            y = rng.uniform(0.55 * H, 0.88 * H - h)
            if _boxes_clear((x, y, w, h), keepout, 4.0):
                break
        else:
            continue
        v = rng.uniform(0.45, 0.62)
        _paint_rect(img, x, y, w, h, (v + 0.02, v, v - 0.015))
        rl = rng.uniform(0.80, 0.95)
        r = rng.uniform(2.0, 4.5)
        for cx in (x + r + 1.5, x + w - r - 1.5):
            _paint_disc(img, cx, y + h - r - 1.0, r, (rl, rl * 0.13, rl * 0.07))
    for _ in range(rng.integers(0, cfg.max_signs + 1)):
        w = rng.uniform(6, 14)
        h = w * rng.uniform(1.2, 1.6)
        for _try in range(20):
            x = rng.uniform(2, img.shape[1] - w - 2)
            y = rng.uniform(0.25 * H, 0.85 * H - h)
            if _boxes_clear((x, y, w, h), keepout, 4.0):
                break
        else:
            continue
        v = rng.uniform(0.78, 0.92)
        _paint_rect(img, x, y, w, h, (v, v * 0.88, v * 0.40))
        _paint_rect(img, x + w * 0.25, y + h * 0.28, w * 0.5, h * 0.44,
                    (v, v * 0.97, v * 0.80))


def _gt_box_from_raw(raw: np.ndarray, footprint: Box) -> Box:
    """The housing rectangle in scene coordinates."""
    scale = footprint.w / K.PATCH
    cx = footprint.x + footprint.w / 2.0
    cy = footprint.y + footprint.h / 2.0 + K.VOFF_PX * raw[6] * scale
    w = 2 * K.HOUSING_HALF_W * scale
    h = 2 * K.HOUSING_HALF_H * scale
    return Box(cx - w / 2.0, cy - h / 2.0, w, h)


def render_raw(codec: TrafficLightCodec, raw: np.ndarray) -> Patch:
    """Render directly from raw attribute units (generation-side helper)."""
    out = np.empty((K.PATCH, K.PATCH, 3), np.float32)
    K.render_core(raw[:N_SEMANTIC], codec.noise_image(raw), out)
    return Patch(out)


def generate_dataset(config: DatasetConfig, seed: int,
                     stats: LatentStats | None = None,
                     texture_seed: int = 0) -> Dataset:
    """Build a deterministic dataset; same (config, seed) twice is identical.

    When ``stats`` is None (training split) the latent statistics are fit
    from this dataset's own objects; test splits must pass the training
    stats so both live in the same standardized space.
    """
    mix_classes = list(config.class_mix.keys())
    mix_p = np.array([config.class_mix[c] for c in mix_classes], dtype=np.float64)
    if mix_p.sum() <= 0:
        raise ValueError("class mix weights must sum to a positive value")
    mix_p /= mix_p.sum()
    for c in mix_classes:
        if c not in CLASSES:
            raise ValueError(f"unknown class {c!r} in class mix")

    plans = []  # (scene_index, light plans, distractor rng seed)
    all_raw = []
    skipped: list[str] = []
    for si in range(config.n_scenes):
        rng = np.random.default_rng(np.random.SeedSequence((seed, si)))
        n_lights = int(rng.integers(config.lights_min, config.lights_max + 1))
        lights = []
        footprints: list[tuple] = []
        failed = False
        for li in range(n_lights):
            cls = mix_classes[int(rng.choice(len(mix_classes), p=mix_p))]
            raw = sample_latent(cls, config, rng)
            cls = classify_raw(raw)  # honor overrides that move the band
            if config.size_skew:
                # inverse-square-falloff sizes: distant (small) lights dominate
                u = rng.uniform(0.0, 1.0)
                inv = 1.0 / config.size_min - u * (1.0 / config.size_min - 1.0 / config.size_max)
                size = 1.0 / inv
            else:
                size = rng.uniform(config.size_min, config.size_max)
            side = size * FOOTPRINT_SCALE
            placed = False
            for _try in range(100):
                fx = rng.uniform(2, config.scene_size - side - 2)
                fy = rng.uniform(2, 0.66 * config.scene_size - side / 2)
                if fy < 2:
                    fy = 2
                if _boxes_clear((fx, fy, side, side), footprints, 6.0):
                    placed = True
                    break
            if not placed:
                failed = True
                break
            footprints.append((fx, fy, side, side))
            lights.append((cls, raw, size, fx, fy, side))
        if failed:
            sid = f"s{seed}-{si:05d}"
            skipped.append(sid)
            warnings.warn(f"scene {sid}: could not place {n_lights} lights, skipped")
            continue
        plans.append((si, lights, footprints))
        for L in lights:
            all_raw.append(L[1])

    if stats is None:
        if len(all_raw) < 2:
            stats = LatentStats.identity(LATENT_DIM)
        else:
            stats = LatentStats.fit(np.asarray(all_raw))
    codec = TrafficLightCodec(LATENT_DIM, stats, texture_seed)

    scenes: list[SceneImage] = []
    objects: list[ObjectRecord] = []
    for si, lights, footprints in plans:
        rng = np.random.default_rng(np.random.SeedSequence((seed, si, 1)))
        sid = f"s{seed}-{si:05d}"
        img = _background(config.scene_size, rng)
        _draw_distractors(img, rng, footprints, config)
        for li, (cls, raw, size, fx, fy, side) in enumerate(lights):
            patch = render_raw(codec, raw)
            out = img.copy()
            K.insert_core(img, patch.pixels, fx, fy, side, side, out)
            img = out
            footprint = Box(fx, fy, side, side)
            gt_box = _gt_box_from_raw(raw, footprint)
            objects.append(ObjectRecord(
                object_id=f"{sid}:{li}",
                scene_id=sid,
                gt_box=gt_box,
                cls=cls,
                size=float(gt_box.h),
                footprint=footprint,
                latent=standardize(raw, stats),
                patch=patch,
            ))
        # snap to the 16-bit grid: scenes survive P6 serialization exactly
        img = (np.floor(img * 65535.0 + 0.5) / np.float32(65535.0)).astype(np.float32)
        scenes.append(SceneImage(sid, img, si))
    return Dataset(config, seed, stats, codec, scenes, objects, skipped)
