"""Image and video IO, resizing, and color primitives shared by the rest of the package.

Images are plain numpy arrays of shape (H, W, 3), float32, RGB, values in [0, 1].
Videos are exchanged as directories of ``frame_%06d.png`` files plus a small
JSON manifest carrying the frame rate; common containers (mp4 etc.) are also
decodable behind the same interface.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

RgbImage = np.ndarray  # (H, W, 3) float32 in [0, 1]

# Rec. 709 luma weights; modern video sources are 709-coded.
LUMA_WEIGHTS = np.array([0.2126, 0.7152, 0.0722], dtype=np.float32)

FRAME_PATTERN = "frame_%06d.png"
MANIFEST_NAME = "manifest.json"
DEFAULT_FRAME_RATE = 25.0

_VIDEO_SUFFIXES = {".mp4", ".mov", ".avi", ".mkv", ".webm"}


class ImageFormatError(ValueError):
    """Raised when a file decodes to something we cannot treat as an RGB raster."""


def validate_image(img: np.ndarray) -> None:
    """Raise ValueError unless ``img`` is a valid (H, W, 3) float image in [0, 1]."""
    if not isinstance(img, np.ndarray) or img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) array, got shape {getattr(img, 'shape', None)}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if not np.issubdtype(img.dtype, np.floating):
        raise ValueError(f"expected float dtype, got {img.dtype}")
    if not np.isfinite(img).all():
        raise ValueError("image contains non-finite values")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError("image values outside [0, 1]")


def load_image(path: str | Path) -> RgbImage:
    """Decode an image file to float32 RGB in [0, 1].

    8-bit sources are scaled by 1/255, 16-bit by 1/65535. Grayscale is
    replicated to three channels, alpha is dropped.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError(f"could not decode {path} as an image")

    if raw.dtype == np.uint8:
        data = raw.astype(np.float32) / 255.0
    elif raw.dtype == np.uint16:
        data = raw.astype(np.float32) / 65535.0
    elif np.issubdtype(raw.dtype, np.floating):
        data = np.clip(raw.astype(np.float32), 0.0, 1.0)
    else:
        raise ImageFormatError(f"unsupported pixel dtype {raw.dtype} in {path}")

    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    elif data.ndim == 3 and data.shape[2] == 4:
        data = data[:, :, :3]
    if data.ndim != 3 or data.shape[2] != 3:
        raise ImageFormatError(f"unsupported channel layout {raw.shape} in {path}")
    # OpenCV decodes color images as BGR.
    return np.ascontiguousarray(data[:, :, ::-1])


def save_image(img: RgbImage, path: str | Path) -> None:
    """Write an image as 8-bit, quantizing with round(v * 255)."""
    validate_image(img)
    path = Path(path)
    quantized = np.rint(img * 255.0).astype(np.uint8)
    ok = cv2.imwrite(str(path), quantized[:, :, ::-1])
    if not ok:
        raise OSError(f"failed to write image to {path}")


def encode_png(img: RgbImage) -> bytes:
    """Encode an image to PNG bytes (deterministic for identical input)."""
    validate_image(img)
    quantized = np.rint(img * 255.0).astype(np.uint8)
    ok, buf = cv2.imencode(".png", quantized[:, :, ::-1])
    if not ok:
        raise OSError("PNG encoding failed")
    return buf.tobytes()


def decode_png(data: bytes) -> RgbImage:
    """Decode PNG/JPEG bytes to float32 RGB in [0, 1]."""
    raw = cv2.imdecode(np.frombuffer(data, dtype=np.uint8), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageFormatError("could not decode image payload")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageFormatError(f"unsupported payload dtype {raw.dtype}")
    data_f = raw.astype(np.float32) / scale
    if data_f.ndim == 2:
        data_f = np.repeat(data_f[:, :, None], 3, axis=2)
    elif data_f.shape[2] == 4:
        data_f = data_f[:, :, :3]
    return np.ascontiguousarray(data_f[:, :, ::-1])


def _axis_lerp(data: np.ndarray, out_size: int, in_size: int) -> np.ndarray:
    """Bilinear resample along axis 0 with half-pixel centers and edge clamping."""
    scale = in_size / out_size
    src = (np.arange(out_size, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, in_size - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, in_size - 1)
    frac = (src - i0).astype(np.float32)
    frac = frac.reshape((out_size,) + (1,) * (data.ndim - 1))
    lo = data[i0]
    return lo + frac * (data[i1] - lo)


def resize(img: RgbImage, h: int, w: int) -> RgbImage:
    """Bilinear resize to exactly (h, w).

    Uses half-pixel-center sampling. Resizing to the current size returns a
    bitwise-equal copy; constant images stay constant.
    """
    if h < 1 or w < 1:
        raise ValueError(f"target size must be >= 1, got {h}x{w}")
    in_h, in_w = img.shape[:2]
    if (h, w) == (in_h, in_w):
        return img.copy()
    out = _axis_lerp(img.astype(np.float32, copy=False), h, in_h)
    out = _axis_lerp(np.swapaxes(out, 0, 1), w, in_w)
    out = np.ascontiguousarray(np.swapaxes(out, 0, 1))
    return np.clip(out, 0.0, 1.0)


def luminance(img: RgbImage) -> np.ndarray:
    """Per-pixel Rec. 709 luma, clipped to [0, 1]. Returns an (H, W) float32 map."""
    lum = img.astype(np.float32, copy=False) @ LUMA_WEIGHTS
    return np.clip(lum, 0.0, 1.0)


@dataclass
class VideoFrames:
    """An ordered stack of same-sized frames plus a frame rate.

    ``frames`` has shape (T, H, W, 3), float32 RGB in [0, 1].
    """

    frames: np.ndarray
    frame_rate: float = DEFAULT_FRAME_RATE

    def __post_init__(self) -> None:
        if self.frames.ndim != 4 or self.frames.shape[3] != 3:
            raise ValueError(f"expected (T, H, W, 3) frame stack, got {self.frames.shape}")
        if self.frames.shape[0] < 1:
            raise ValueError("video must contain at least one frame")
        if not (np.isfinite(self.frame_rate) and self.frame_rate > 0):
            raise ValueError(f"invalid frame rate {self.frame_rate}")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def frame_size(self) -> tuple[int, int]:
        return self.frames.shape[1], self.frames.shape[2]

    def frame(self, index: int) -> RgbImage:
        return self.frames[index]

    @classmethod
    def from_list(cls, frames: list[RgbImage], frame_rate: float = DEFAULT_FRAME_RATE) -> "VideoFrames":
        for f in frames:
            validate_image(f)
        return cls(frames=np.stack(frames).astype(np.float32), frame_rate=frame_rate)


def _load_frame_dir(path: Path) -> VideoFrames:
    frame_paths = sorted(path.glob("frame_*.png"))
    if not frame_paths:
        raise FileNotFoundError(f"no frame_*.png files in {path}")
    frame_rate = DEFAULT_FRAME_RATE
    manifest = path / MANIFEST_NAME
    if manifest.is_file():
        meta = json.loads(manifest.read_text())
        frame_rate = float(meta.get("frame_rate", DEFAULT_FRAME_RATE))
    frames = [load_image(p) for p in frame_paths]
    shapes = {f.shape for f in frames}
    if len(shapes) != 1:
        raise ValueError(f"mixed frame sizes in {path}: {sorted(shapes)}")
    return VideoFrames(frames=np.stack(frames), frame_rate=frame_rate)


def _load_container(path: Path) -> VideoFrames:
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise ImageFormatError(f"could not open video container {path}")
    fps = cap.get(cv2.CAP_PROP_FPS) or DEFAULT_FRAME_RATE
    frames = []
    while True:
        ok, bgr = cap.read()
        if not ok:
            break
        frames.append(bgr[:, :, ::-1].astype(np.float32) / 255.0)
    cap.release()
    if not frames:
        raise ImageFormatError(f"no decodable frames in {path}")
    return VideoFrames(frames=np.stack(frames), frame_rate=float(fps))


def load_video(path: str | Path) -> VideoFrames:
    """Load a video from a frame directory or a container file."""
    path = Path(path)
    if path.is_dir():
        return _load_frame_dir(path)
    if path.is_file():
        if path.suffix.lower() in _VIDEO_SUFFIXES:
            return _load_container(path)
        # A single image acts as a one-frame video.
        return VideoFrames(frames=load_image(path)[None], frame_rate=DEFAULT_FRAME_RATE)
    raise FileNotFoundError(f"no such video: {path}")


def save_video(video: VideoFrames, out_dir: str | Path) -> list[Path]:
    """Write a video as a frame_%06d.png sequence plus manifest.json."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(len(video)):
        p = out_dir / (FRAME_PATTERN % i)
        save_image(video.frames[i], p)
        paths.append(p)
    manifest = {
        "frame_rate": video.frame_rate,
        "frame_count": len(video),
        "pattern": FRAME_PATTERN,
    }
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2) + "\n")
    return paths
