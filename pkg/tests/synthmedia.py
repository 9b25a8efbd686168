"""Deterministic synthetic images and clips used as test fixtures.

Everything here is a pure function of its seed so tests are reproducible
without binary assets in the repository.
"""

from __future__ import annotations

import numpy as np

from chromagrade.imaging import VideoFrames


def smooth_field(h: int, w: int, seed: int, t: float = 0.0) -> np.ndarray:
    """A smooth multi-frequency color field in [0.05, 0.95]; ``t`` pans it."""
    rng = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, h), np.linspace(0, 1, w), indexing="ij")
    img = np.empty((h, w, 3), dtype=np.float64)
    for c in range(3):
        acc = np.zeros((h, w))
        total_amp = 0.0
        for _ in range(4):
            fx, fy = rng.uniform(0.5, 3.0, size=2)
            phase = rng.uniform(0, 2 * np.pi)
            speed = rng.uniform(0.1, 0.6)
            amp = rng.uniform(0.3, 1.0)
            acc += amp * np.sin(2 * np.pi * (fx * xx + fy * yy + speed * t) + phase)
            total_amp += amp
        img[..., c] = 0.5 + 0.45 * acc / total_amp
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synth_image(h: int, w: int, seed: int,
                tint: tuple[float, float, float] = (1.0, 1.0, 1.0),
                lift: tuple[float, float, float] = (0.0, 0.0, 0.0),
                desat: float = 0.0) -> np.ndarray:
    """A structured test image with an optional palette shift."""
    img = smooth_field(h, w, seed).astype(np.float64)
    if desat:
        luma = img @ np.array([0.2126, 0.7152, 0.0722])
        img = (1 - desat) * img + desat * luma[..., None]
    img = img * np.asarray(tint) + np.asarray(lift)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def synth_video(n_frames: int, h: int, w: int, seed: int,
                frame_rate: float = 25.0) -> VideoFrames:
    """A smoothly panning clip (adjacent frames differ by small amounts)."""
    frames = [smooth_field(h, w, seed, t=i / frame_rate) for i in range(n_frames)]
    return VideoFrames(frames=np.stack(frames), frame_rate=frame_rate)


# Five style palettes with clearly distinct color statistics.
STYLE_PRESETS: dict[str, dict] = {
    "warm": {"tint": (1.15, 0.95, 0.70), "lift": (0.06, 0.02, 0.0)},
    "cool": {"tint": (0.75, 0.95, 1.20), "lift": (0.0, 0.02, 0.08)},
    "forest": {"tint": (0.80, 1.15, 0.75), "lift": (0.0, 0.05, 0.0)},
    "faded": {"tint": (0.85, 0.85, 0.85), "lift": (0.10, 0.10, 0.10), "desat": 0.5},
    "crush": {"tint": (1.05, 0.90, 1.10), "lift": (-0.05, -0.05, 0.0)},
}


def style_image(name: str, h: int = 96, w: int = 96, seed: int = 77) -> np.ndarray:
    preset = STYLE_PRESETS[name]
    return synth_image(h, w, seed, tint=preset["tint"], lift=preset["lift"],
                       desat=preset.get("desat", 0.0))
