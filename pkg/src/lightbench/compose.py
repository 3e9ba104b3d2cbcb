"""Inserting object patches into scenes and cropping them back out."""

from __future__ import annotations

import numpy as np

from . import _kernels as K
from .boxes import Box
from .codec import Patch


def _check_target(scene: np.ndarray, target: Box):
    h, w = scene.shape[:2]
    if target.w <= 0 or target.h <= 0:
        raise ValueError(f"target box must have positive area: {target}")
    if target.x < 0 or target.y < 0 or target.x2 > w or target.y2 > h:
        raise ValueError(f"target box {target} outside {w}x{h} scene")


def insert_patch(scene: np.ndarray, patch: Patch, target: Box) -> np.ndarray:
    """Blend a patch into a copy of the scene at the target box.

    The patch is resized to the box by bilinear sampling and blended with a
    2-pixel feathered border; pixels outside the box are untouched.
    """
    _check_target(scene, target)
    out = np.ascontiguousarray(scene, dtype=np.float32).copy()
    K.insert_core(scene.astype(np.float32), patch.pixels,
                  float(target.x), float(target.y),
                  float(target.w), float(target.h), out)
    return out


def crop_patch(scene: np.ndarray, source: Box) -> Patch:
    """Resample the scene content of a box into a patch-sized image."""
    _check_target(scene, source)
    out = np.empty((K.PATCH, K.PATCH, 3), np.float32)
    K.crop_core(scene.astype(np.float32), float(source.x), float(source.y),
                float(source.w), float(source.h), out)
    return Patch(out)
