"""Pre-training on an image corpus and per-video test-on-time fine-tuning.

Both stages share the same step: predict parameters for a (content, style)
pair, grade the content with them, and descend the weighted style/content/
color-histogram loss with Adam. Fine-tuning cycles through histogram-selected
keyframes and reduces to a single parameter set (the per-keyframe prediction
mean), which is what keeps video output flicker-free.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch

from .color_ops import GradingParams
from .imaging import RgbImage, VideoFrames, load_image, resize, validate_image
from .losses import LossWeights, color_hist_loss_t, content_loss, soft_histogram_t, style_loss
from .predictor import (
    DEFAULT_ENCODER_SEED,
    FeatureEncoder,
    ParamPredictor,
    build_encoder,
    normalize_for_encoder,
    save_checkpoint,
)
from .torch_ops import apply_params_t, image_tensor

LOG_HEADER = "iter,loss_total,loss_style,loss_content,loss_color"


class ConfigError(ValueError):
    """Bad training configuration (empty corpus, invalid counts, ...)."""


class TrainingDivergedError(RuntimeError):
    """Raised when the loss turns non-finite; carries the offending iteration."""


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults follow the published recipe
    (Adam, lr 1e-4, pretrain batch 6 for 20k iterations, fine-tune batch 1
    for 500 iterations, 256x256 inputs)."""

    learning_rate: float = 1e-4
    batch_size_pretrain: int = 6
    iters_pretrain: int = 20000
    batch_size_finetune: int = 1
    iters_finetune: int = 500
    image_size: int = 256
    loss_weights: LossWeights = field(default_factory=LossWeights)
    n_bins: int = 64
    seed: int = 0
    corpus_dir: str | None = None
    keyframe_count: int = 4
    checkpoint_every: int = 1000
    encoder_weights: str | None = None
    encoder_seed: int = DEFAULT_ENCODER_SEED

    def __post_init__(self) -> None:
        counts = {
            "batch_size_pretrain": self.batch_size_pretrain,
            "batch_size_finetune": self.batch_size_finetune,
            "image_size": self.image_size,
            "n_bins": self.n_bins,
            "keyframe_count": self.keyframe_count,
            "checkpoint_every": self.checkpoint_every,
        }
        for name, v in counts.items():
            if v < 1:
                raise ConfigError(f"{name} must be >= 1, got {v}")
        if self.iters_pretrain < 0 or self.iters_finetune < 0:
            raise ConfigError("iteration counts must be >= 0")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")

    def replace(self, **kw) -> "TrainConfig":
        return replace(self, **kw)

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["loss_weights"] = self.loss_weights.to_dict()
        return d

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "loss_weights" in obj:
            obj["loss_weights"] = LossWeights.from_dict(obj["loss_weights"])
        return cls(**obj)

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def encoder_ref(self) -> dict:
        return {"weights": self.encoder_weights, "seed": self.encoder_seed}


# ---------------------------------------------------------------------------
# Shared training step
# ---------------------------------------------------------------------------


class _LossLog:
    def __init__(self, path: str | Path | None):
        self._fh = open(path, "w") if path else None
        if self._fh:
            self._fh.write(LOG_HEADER + "\n")

    def write(self, it: int, parts: dict[str, float]) -> None:
        if self._fh:
            self._fh.write(
                f"{it},{parts['total']:.6f},{parts['style']:.6f},"
                f"{parts['content']:.6f},{parts['color']:.6f}\n"
            )
            self._fh.flush()

    def close(self) -> None:
        if self._fh:
            self._fh.close()


def _step_losses(encoder: FeatureEncoder, model: ParamPredictor,
                 content_t: torch.Tensor, taps_c: list, taps_s: list,
                 style_hat: torch.Tensor, w: LossWeights, n_bins: int):
    params = model(taps_c, taps_s)
    stylized = apply_params_t(content_t, params)
    feats_out = encoder(normalize_for_encoder(stylized))
    ls = style_loss(feats_out, taps_s)
    lc = content_loss(feats_out[-1], taps_c[-1])
    lcolor = color_hist_loss_t(stylized, style_hat, n_bins)
    total = w.lambda_s * ls + w.lambda_c * lc + w.lambda_color * lcolor
    parts = {"total": total.detach().item(), "style": ls.detach().item(),
             "content": lc.detach().item(), "color": lcolor.detach().item()}
    return total, parts


def _check_finite(it: int, parts: dict[str, float]) -> None:
    if not all(math.isfinite(v) for v in parts.values()):
        raise TrainingDivergedError(f"non-finite loss at iteration {it}: {parts}")


def _corpus_paths(corpus_dir: str | Path) -> list[Path]:
    exts = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}
    root = Path(corpus_dir)
    if not root.is_dir():
        raise ConfigError(f"corpus_dir {corpus_dir} is not a directory")
    paths = sorted(p for p in root.iterdir() if p.suffix.lower() in exts)
    if len(paths) < 2:
        raise ConfigError(f"corpus at {corpus_dir} needs >= 2 images, found {len(paths)}")
    return paths


def pretrain(cfg: TrainConfig, out_dir: str | Path | None = None,
             log_path: str | Path | None = None,
             progress: Callable[[int, dict], None] | None = None) -> ParamPredictor:
    """Pre-train a fresh predictor on random (content, style) pairs from the corpus.

    Reproducible for a fixed seed/config/corpus. Writes a CSV loss log when
    ``log_path`` is given and periodic checkpoints when ``out_dir`` is given.
    """
    if cfg.corpus_dir is None:
        raise ConfigError("corpus_dir is required for pretraining")
    paths = _corpus_paths(cfg.corpus_dir)

    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    encoder = build_encoder(cfg.encoder_ref())
    model = ParamPredictor()
    model.train()
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999))

    cache: dict[int, np.ndarray] = {}

    def fetch(idx: int) -> np.ndarray:
        if idx not in cache:
            cache[idx] = resize(load_image(paths[idx]), cfg.image_size, cfg.image_size)
        return cache[idx]

    out_dir = Path(out_dir) if out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    log = _LossLog(log_path)
    try:
        for it in range(cfg.iters_pretrain):
            pairs = [rng.choice(len(paths), size=2, replace=False) for _ in range(cfg.batch_size_pretrain)]
            content_t = torch.cat([image_tensor(fetch(c)) for c, _ in pairs])
            style_t = torch.cat([image_tensor(fetch(s)) for _, s in pairs])
            with torch.no_grad():
                taps_c = encoder(normalize_for_encoder(content_t))
                taps_s = encoder(normalize_for_encoder(style_t))
                style_hat = soft_histogram_t(style_t, cfg.n_bins)

            total, parts = _step_losses(encoder, model, content_t, taps_c, taps_s,
                                        style_hat, cfg.loss_weights, cfg.n_bins)
            _check_finite(it, parts)
            opt.zero_grad()
            total.backward()
            opt.step()
            log.write(it, parts)
            if progress:
                progress(it, parts)
            if out_dir and (it + 1) % cfg.checkpoint_every == 0:
                save_checkpoint(model, out_dir / f"checkpoint_{it + 1:06d}.pt", cfg.encoder_ref())
        if out_dir:
            save_checkpoint(model, out_dir / "model.pt", cfg.encoder_ref())
    finally:
        log.close()
    model.eval()
    return model


# ---------------------------------------------------------------------------
# Keyframe selection
# ---------------------------------------------------------------------------

KEYFRAME_HIST_BINS = 32


@dataclass(frozen=True)
class KeyframeSet:
    """Strictly increasing frame indices chosen to represent a video's colors."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.indices:
            raise ValueError("keyframe set may not be empty")
        if any(b <= a for a, b in zip(self.indices, self.indices[1:])):
            raise ValueError(f"indices must be strictly increasing: {self.indices}")
        if self.indices[0] < 0:
            raise ValueError("negative frame index")

    @property
    def k(self) -> int:
        return len(self.indices)


def frame_histogram(frame: RgbImage, bins: int = KEYFRAME_HIST_BINS) -> np.ndarray:
    """Hard per-channel histogram normalized by pixel count, shape (3, bins)."""
    flat = frame.reshape(-1, 3)
    out = np.empty((3, bins))
    for c in range(3):
        out[c] = np.histogram(flat[:, c], bins=bins, range=(0.0, 1.0))[0]
    return out / flat.shape[0]


def select_keyframes(video: VideoFrames, k: int) -> KeyframeSet:
    """Greedy farthest-point selection under L1 histogram distance.

    Seeded with frame 0; ties broken by lowest index.
    """
    n = len(video)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    hists = np.stack([frame_histogram(video.frames[i]) for i in range(n)])
    selected = [0]
    dist = np.abs(hists - hists[0]).sum(axis=(1, 2))
    dist[0] = -np.inf
    while len(selected) < k:
        nxt = int(np.argmax(dist))
        selected.append(nxt)
        dist = np.minimum(dist, np.abs(hists - hists[nxt]).sum(axis=(1, 2)))
        dist[nxt] = -np.inf
    return KeyframeSet(indices=tuple(sorted(selected)))


def extract_keyframes(video: VideoFrames, ks: KeyframeSet) -> list[RgbImage]:
    return [video.frames[i] for i in ks.indices]


# ---------------------------------------------------------------------------
# Test-on-time fine-tuning
# ---------------------------------------------------------------------------


def finetune(model: ParamPredictor, keyframes: Sequence[RgbImage], style: RgbImage,
             cfg: TrainConfig, encoder: FeatureEncoder | None = None,
             log_path: str | Path | None = None,
             progress: Callable[[int, dict], None] | None = None,
             ) -> tuple[ParamPredictor, GradingParams]:
    """Adapt a copy of the model to one video's keyframes and a style image.

    Returns the adapted model and a single parameter set: the per-keyframe
    prediction mean, clamped to the declared ranges. One parameter set per
    video is what guarantees flicker-free output.
    """
    if not keyframes:
        raise ValueError("need at least one keyframe")
    for f in keyframes:
        validate_image(f)
    validate_image(style)
    if encoder is None:
        encoder = build_encoder(cfg.encoder_ref())

    torch.manual_seed(cfg.seed)
    adapted = copy.deepcopy(model)
    adapted.train()
    opt = torch.optim.Adam(adapted.parameters(), lr=cfg.learning_rate, betas=(0.9, 0.999))

    size = cfg.image_size
    frames_t = [image_tensor(resize(f, size, size)) for f in keyframes]
    style_t = image_tensor(resize(style, size, size))
    with torch.no_grad():
        taps_s = encoder(normalize_for_encoder(style_t))
        style_hat = soft_histogram_t(style_t, cfg.n_bins)
        taps_per_frame = [encoder(normalize_for_encoder(ft)) for ft in frames_t]

    log = _LossLog(log_path)
    try:
        for it in range(cfg.iters_finetune):
            ki = it % len(keyframes)
            total, parts = _step_losses(encoder, adapted, frames_t[ki], taps_per_frame[ki],
                                        taps_s, style_hat, cfg.loss_weights, cfg.n_bins)
            _check_finite(it, parts)
            opt.zero_grad()
            total.backward()
            opt.step()
            log.write(it, parts)
            if progress:
                progress(it, parts)
    finally:
        log.close()

    adapted.eval()
    with torch.no_grad():
        preds = [adapted(taps, taps_s)[0].numpy() for taps in taps_per_frame]
    params = GradingParams.clamped_from_array(np.mean(preds, axis=0))
    return adapted, params
