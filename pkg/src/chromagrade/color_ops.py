"""The seven parametric color operators and their fixed composition.

Operator order: temperature -> brightness -> contrast -> clamp -> gamma ->
hue rotation -> saturation -> clamp, with the spatial unsharp mask applied
last at image level. Every operator has an exact identity setting, so the
IDENTITY parameter set maps any image to itself bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace

import numpy as np

from . import _kernels
from .imaging import RgbImage, VideoFrames, validate_image

# name -> (low, high, identity); order is canonical for vectors and JSON.
PARAM_RANGES: dict[str, tuple[float, float, float]] = {
    "brightness": (-0.5, 0.5, 0.0),
    "contrast": (0.5, 2.0, 1.0),
    "gamma": (0.33, 3.0, 1.0),
    "hue": (-math.pi / 4, math.pi / 4, 0.0),
    "saturation": (0.0, 2.0, 1.0),
    "sharpness": (0.0, 2.0, 0.0),
    "temperature": (-0.5, 0.5, 0.0),
}

PARAM_NAMES: tuple[str, ...] = tuple(PARAM_RANGES)


@dataclass(frozen=True)
class GradingParams:
    """The seven human-interpretable grading scalars.

    brightness: additive offset; contrast: gain about 0.5; gamma: exponent on
    clamped values; hue: rotation angle (radians) about the gray axis;
    saturation: lerp toward/away from luma; sharpness: unsharp-mask amount;
    temperature: warm/cool shift on the red and blue channels.
    """

    brightness: float = 0.0
    contrast: float = 1.0
    gamma: float = 1.0
    hue: float = 0.0
    saturation: float = 1.0
    sharpness: float = 0.0
    temperature: float = 0.0

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            lo, hi, _ = PARAM_RANGES[name]
            v = getattr(self, name)
            if not (math.isfinite(v) and lo <= v <= hi):
                raise ValueError(f"{name}={v} outside [{lo}, {hi}]")

    def as_array(self) -> np.ndarray:
        """Parameters as a float64 vector in canonical (alphabetical) order."""
        return np.array([getattr(self, n) for n in PARAM_NAMES], dtype=np.float64)

    @classmethod
    def from_array(cls, vec) -> "GradingParams":
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if vec.shape[0] != len(PARAM_NAMES):
            raise ValueError(f"expected {len(PARAM_NAMES)} values, got {vec.shape[0]}")
        return cls(**{n: float(v) for n, v in zip(PARAM_NAMES, vec)})

    @classmethod
    def clamped_from_array(cls, vec) -> "GradingParams":
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        clipped = {}
        for n, v in zip(PARAM_NAMES, vec):
            lo, hi, _ = PARAM_RANGES[n]
            clipped[n] = float(min(max(v, lo), hi))
        return cls(**clipped)

    def replace(self, **kwargs) -> "GradingParams":
        return replace(self, **kwargs)

    def to_json(self) -> str:
        return json.dumps({n: getattr(self, n) for n in PARAM_NAMES})

    @classmethod
    def from_json(cls, text: str) -> "GradingParams":
        obj = json.loads(text)
        return cls.from_dict(obj)

    @classmethod
    def from_dict(cls, obj: dict) -> "GradingParams":
        """Parse the canonical seven-field JSON object; unknown keys rejected."""
        if not isinstance(obj, dict):
            raise ValueError("grading params must be a JSON object")
        unknown = set(obj) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown grading parameter keys: {sorted(unknown)}")
        missing = set(PARAM_NAMES) - set(obj)
        if missing:
            raise ValueError(f"missing grading parameter keys: {sorted(missing)}")
        return cls(**{n: float(obj[n]) for n in PARAM_NAMES})


IDENTITY = GradingParams()


def hue_rotation_matrix(angle: float) -> np.ndarray:
    """Rotation by ``angle`` about the gray axis (1,1,1)/sqrt(3), as float32.

    At angle 0 the result is the exact identity matrix.
    """
    c = math.cos(angle)
    s = math.sin(angle)
    t = (1.0 - c) / 3.0
    u = s / math.sqrt(3.0)
    m = np.array(
        [
            [c + t, t - u, t + u],
            [t + u, c + t, t - u],
            [t - u, t + u, c + t],
        ],
        dtype=np.float64,
    )
    return m.astype(np.float32)


def apply_pointwise(rgb, p: GradingParams) -> np.ndarray:
    """Apply the pointwise chain to a single pixel or an (..., 3) array.

    Sharpness is spatial and is deliberately not part of this function.
    """
    arr = np.asarray(rgb, dtype=np.float32)
    if arr.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {arr.shape}")
    flat = arr.reshape(-1, 3)
    graded = _kernels.grade_pixels(
        flat, p.brightness, p.contrast, p.gamma, p.saturation, p.temperature,
        hue_rotation_matrix(p.hue),
    )
    return graded.reshape(arr.shape)


def apply_params(img: RgbImage, p: GradingParams) -> RgbImage:
    """Grade an image: pointwise chain per pixel, then the unsharp mask."""
    validate_image(img)
    out = apply_pointwise(img, p)
    if p.sharpness != 0.0:
        out = _kernels.unsharp(out, p.sharpness)
    return out


def grade_video(video: VideoFrames, p: GradingParams) -> VideoFrames:
    """Grade every frame with the same parameter set (frame count and rate kept)."""
    graded = np.stack([apply_params(video.frames[i], p) for i in range(len(video))])
    return VideoFrames(frames=graded, frame_rate=video.frame_rate)


def squash_config() -> tuple[np.ndarray, np.ndarray]:
    """(center, half_range) used to squash raw head outputs into the ranges.

    center is the identity value. half_range is the distance to the nearer
    bound, except for parameters whose identity sits on a bound (sharpness),
    where the nearer distance is zero and would freeze the parameter; those
    use the distance to the farther bound and rely on clamping.
    """
    center = np.empty(len(PARAM_NAMES))
    half = np.empty(len(PARAM_NAMES))
    for i, n in enumerate(PARAM_NAMES):
        lo, hi, ident = PARAM_RANGES[n]
        center[i] = ident
        near = min(ident - lo, hi - ident)
        half[i] = near if near > 0 else max(ident - lo, hi - ident)
    return center, half
