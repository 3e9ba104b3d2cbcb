"""Procedural traffic-light codec: a deterministic, analytically invertible
stand-in for a trained disentangled autoencoder.

The first seven latent dimensions control named visual attributes (hue,
brightness, lamp size, housing darkness, background tone, occlusion,
vertical offset); the remaining dimensions only perturb a low-amplitude
texture field. decode() renders a patch; encode() estimates the semantic
attributes back from pixels. Both sides share the constants in _kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .latent import (
    LATENT_DIM,
    N_SEMANTIC,
    LatentStats,
    check_latent,
    destandardize,
    dimension_labels,
    standardize,
)

NUISANCE_AMP = 0.0025  # pixel amplitude per raw unit per nuisance field
CLAMP_STD = 4.0  # decode clamps standardized inputs to +/- this

CLASS_HUE_RED = 1.0  # raw hue >= this renders in the red band
CLASS_HUE_GREEN = -1.0
CLASS_OFF_BRIGHTNESS = -2.5  # raw brightness below this is an unlit light


@dataclass
class Patch:
    """A PATCH x PATCH RGB object image with channel values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.shape != (K.PATCH, K.PATCH, 3):
            raise ValueError(f"patch must be {K.PATCH}x{K.PATCH}x3, got {px.shape}")
        self.pixels = np.clip(px, 0.0, 1.0)


@dataclass
class LatentEstimate:
    z: np.ndarray
    low_confidence: bool


def _nuisance_fields(n_fields: int, seed: int) -> np.ndarray:
    """Fixed smooth sinusoidal fields, zero-mean, unit RMS, (n, PATCH, PATCH)."""
    rng = np.random.default_rng(np.random.SeedSequence((0x7E9, seed)))
    yy, xx = np.mgrid[0:K.PATCH, 0:K.PATCH].astype(np.float64)
    fields = np.empty((n_fields, K.PATCH, K.PATCH), np.float64)
    for i in range(n_fields):
        f = np.zeros((K.PATCH, K.PATCH))
        for _ in range(3):
            fx, fy = rng.uniform(0.5, 3.0, size=2) / K.PATCH
            phase = rng.uniform(0, 2 * np.pi)
            f += np.cos(2 * np.pi * (fx * xx + fy * yy) + phase)
        f -= f.mean()
        f /= np.sqrt((f**2).mean())
        fields[i] = f
    return fields.astype(np.float32)


class TrafficLightCodec:
    """Decode/encode between the standardized latent space and patches.

    Immutable after construction; decode and encode are pure and safe to
    call concurrently. ``stats`` maps standardized latents to the codec's
    raw attribute units (identity by default).
    """

    def __init__(self, dim: int = LATENT_DIM, stats: LatentStats | None = None,
                 texture_seed: int = 0):
        if dim < N_SEMANTIC:
            raise ValueError(f"codec needs >= {N_SEMANTIC} dims")
        self.dim = dim
        self.stats = stats if stats is not None else LatentStats.identity(dim)
        if self.stats.dim != dim:
            raise ValueError("stats dimension mismatch")
        self.texture_seed = texture_seed
        self.labels = dimension_labels(dim)
        self._fields = _nuisance_fields(dim - N_SEMANTIC, texture_seed)
        # flattened view used for batch noise synthesis via one matmul
        self._fields_flat = self._fields.reshape(dim - N_SEMANTIC, -1)

    # -- decoding --------------------------------------------------------

    def raw_from_standardized(self, z: np.ndarray) -> np.ndarray:
        z = np.clip(np.asarray(z, dtype=np.float64), -CLAMP_STD, CLAMP_STD)
        return destandardize(z, self.stats)

    def noise_image(self, raw: np.ndarray) -> np.ndarray:
        w = raw[N_SEMANTIC:].astype(np.float32) * NUISANCE_AMP
        return (w @ self._fields_flat).reshape(K.PATCH, K.PATCH)

    def noise_images(self, raw_batch: np.ndarray) -> np.ndarray:
        w = raw_batch[:, N_SEMANTIC:].astype(np.float32) * NUISANCE_AMP
        return (w @ self._fields_flat).reshape(-1, K.PATCH, K.PATCH)

    def decode(self, z: np.ndarray) -> Patch:
        z = check_latent(z, self.dim)
        raw = self.raw_from_standardized(z)
        out = np.empty((K.PATCH, K.PATCH, 3), np.float32)
        K.render_core(raw[:N_SEMANTIC], self.noise_image(raw), out)
        return Patch(out)

    def classify(self, z: np.ndarray) -> str:
        """Class implied by the hue/brightness dims that generated an object."""
        raw = self.raw_from_standardized(check_latent(z, self.dim))
        if raw[1] < CLASS_OFF_BRIGHTNESS:
            return "off"
        if raw[0] >= CLASS_HUE_RED:
            return "red"
        if raw[0] <= CLASS_HUE_GREEN:
            return "green"
        return "yellow"

    def housing_box_in_patch(self, z: np.ndarray) -> tuple[float, float, float, float]:
        """The housing rectangle inside the patch, in patch pixel coords."""
        raw = self.raw_from_standardized(check_latent(z, self.dim))
        cy = K.PATCH / 2.0 + K.VOFF_PX * raw[6]
        cx = K.PATCH / 2.0
        return (cx - K.HOUSING_HALF_W, cy - K.HOUSING_HALF_H,
                2 * K.HOUSING_HALF_W, 2 * K.HOUSING_HALF_H)

    # -- encoding --------------------------------------------------------

    def encode(self, patch: Patch) -> LatentEstimate:
        """Analytic attribute estimation; nuisance dims come back as 0.

        Returns a low-confidence estimate when no lit lamp is detectable.
        """
        px = np.asarray(patch.pixels, dtype=np.float64)
        v = px.max(axis=2)
        chroma = v - px.min(axis=2)
        rb = px[:, :, 0] - px[:, :, 2]

        # occlusion: scan full-width warm-tinted rows from the bottom
        occ_rows = 0.0
        occ_full = 0
        for y in range(K.PATCH - 1, -1, -1):
            a = np.clip(rb[y].mean() / (K.OCC_R - K.OCC_B), 0.0, 1.0)
            if a < 0.04:
                break
            occ_rows += a
            occ_full += 1
        occ_frac = occ_rows / K.PATCH
        raw = np.zeros(self.dim)
        raw[5] = occ_frac / K.OCC_FRAC_PER_UNIT - 2.0
        y_lim = K.PATCH - occ_full  # rows below are occluder

        # background tone from housing-free border bands
        border = np.concatenate([
            px[0:3, 0:20].reshape(-1, 3),
            px[0:3, 44:].reshape(-1, 3),
            px[3:y_lim - 1, 0:3].reshape(-1, 3),
            px[3:y_lim - 1, 61:].reshape(-1, 3),
        ])
        bg_v = border.mean()
        raw[4] = (bg_v - K.BG_V0) / K.BG_V_SLOPE

        valid = np.zeros_like(v, dtype=bool)
        valid[:y_lim] = True
        lamp_mask = (chroma > 0.06) & valid
        low_confidence = lamp_mask.sum() < 4

        dark_mask = (v < K.DARK_V_THR) & valid
        ys, xs = np.nonzero(dark_mask)

        if low_confidence:
            raw[0] = 0.0
            raw[1] = -CLAMP_STD  # minimum clamp: nothing lit anywhere
            raw[2] = 0.0
            raw[6] = 0.0 if len(ys) == 0 else ((ys.min() + ys.max() + 1) / 2.0 - K.PATCH / 2.0) / K.VOFF_PX
            if len(ys) > 0:
                hv = v[dark_mask].mean()
                raw[3] = (K.HOUSING_V0 - hv) / (-K.HOUSING_V_SLOPE)
        else:
            cvals = chroma[lamp_mask]
            peak = np.percentile(cvals, 90)
            # fractional coverage from the anti-aliased edge: weight every
            # unoccluded pixel, not just the hard mask, so low-chroma lamps
            # keep their full area
            alpha = np.clip(chroma / max(peak, 1e-9), 0.0, 1.0) * valid
            area = alpha.sum()
            r_est = np.sqrt(area / np.pi)
            raw[2] = (r_est - K.LAMP_R0) / K.LAMP_R_SLOPE
            yy = np.arange(K.PATCH)[:, None] + 0.5
            cy_m = (alpha * yy).sum() / area
            raw[6] = (cy_m - K.PATCH / 2.0) / K.VOFF_PX
            v_p = np.percentile(v[lamp_mask], 85)
            raw[1] = (v_p - K.LAMP_V0) / K.LAMP_V_SLOPE
            interior = alpha > 0.85
            mr, mg, mb = (px[interior].mean(axis=0) if interior.sum() >= 1
                          else px[lamp_mask].mean(axis=0))
            raw[0] = (_hue_degrees(mr, mg, mb) - K.HUE_DEG0) / K.HUE_DEG_SLOPE

            # housing value from the lamp-free side strips of the dark region
            cy_est = cy_m
            xg = np.arange(K.PATCH)[None, :] + 0.5
            strip = (dark_mask
                     & (np.abs(xg - K.PATCH / 2.0) > r_est + 1.2)
                     & (np.abs(xg - K.PATCH / 2.0) < 8.0)
                     & (np.abs(yy - cy_est) < 20.0))
            sample = v[strip] if strip.sum() >= 10 else (v[dark_mask] if len(ys) else np.array([K.HOUSING_V0]))
            raw[3] = (K.HOUSING_V0 - sample.mean()) / (-K.HOUSING_V_SLOPE)

        z = standardize(raw, self.stats)
        z[N_SEMANTIC:] = 0.0
        z = np.clip(z, -CLAMP_STD, CLAMP_STD)
        return LatentEstimate(z, bool(low_confidence))


def _hue_degrees(r: float, g: float, b: float) -> float:
    mx = max(r, g, b)
    mn = min(r, g, b)
    c = mx - mn
    if c < 1e-12:
        return 0.0
    if mx == r:
        h = 60.0 * ((g - b) / c)
    elif mx == g:
        h = 60.0 * (2.0 + (b - r) / c)
    else:
        h = 60.0 * (4.0 + (r - g) / c)
    if h < 0:
        h += 360.0
    if h > 300.0:
        h -= 360.0
    return h
