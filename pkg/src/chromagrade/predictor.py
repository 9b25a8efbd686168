"""The parameter-prediction network: a frozen VGG-19 feature encoder tapped at
four scales, per-scale trainable conv blocks on the content and style paths,
AdaIN fusion, pooling, and a zero-initialized head squashed into the declared
parameter ranges (so a fresh model always predicts the identity grade).

Pretrained backbone weights are loaded from a torchvision-format state dict
when a path is configured; otherwise a deterministic seeded He-style init is
used so the artifact works offline (transfer quality then depends only on the
histogram loss; see README).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .color_ops import PARAM_NAMES, PARAM_RANGES, GradingParams, squash_config
from .imaging import RgbImage, resize, validate_image

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

ENCODER_INPUT_SIZE = 256
DEFAULT_ENCODER_SEED = 1234

# VGG-19 conv stack through relu4_1; 'M' is a 2x2 max-pool.
_VGG19_CFG = (64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512)
SCALE_CHANNELS = (64, 128, 256, 512)
# Indices of relu1_1, relu2_1, relu3_1, relu4_1 within the sequential stack.
_TAP_INDICES = (1, 6, 11, 20)


def normalize_for_encoder(x: torch.Tensor) -> torch.Tensor:
    """Apply the backbone's published channel normalization to a [0,1] tensor."""
    mean = torch.tensor(IMAGENET_MEAN, dtype=x.dtype, device=x.device).view(1, 3, 1, 1)
    std = torch.tensor(IMAGENET_STD, dtype=x.dtype, device=x.device).view(1, 3, 1, 1)
    return (x - mean) / std


class FeatureEncoder(nn.Module):
    """Frozen VGG-19 trunk producing feature maps at four scales.

    For a 256x256 input the taps have spatial sizes 256/128/64/32 and channel
    counts 64/128/256/512. Weights are immutable after construction.
    """

    def __init__(self) -> None:
        super().__init__()
        layers: list[nn.Module] = []
        in_ch = 3
        for v in _VGG19_CFG:
            if v == "M":
                layers.append(nn.MaxPool2d(kernel_size=2, stride=2))
            else:
                layers.append(nn.Conv2d(in_ch, v, kernel_size=3, padding=1))
                layers.append(nn.ReLU(inplace=True))
                in_ch = v
        self.features = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> list[torch.Tensor]:
        taps = []
        for i, layer in enumerate(self.features):
            x = layer(x)
            if i in _TAP_INDICES:
                taps.append(x)
        return taps

    def _freeze(self) -> None:
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def _seeded_init(self, seed: int) -> None:
        gen = torch.Generator().manual_seed(seed)
        for m in self.features:
            if isinstance(m, nn.Conv2d):
                fan_in = m.in_channels * 9
                w = torch.randn(m.weight.shape, generator=gen) * (2.0 / fan_in) ** 0.5
                with torch.no_grad():
                    m.weight.copy_(w)
                    m.bias.zero_()

    @classmethod
    def load(cls, weights_path: str | Path | None = None,
             seed: int = DEFAULT_ENCODER_SEED) -> "FeatureEncoder":
        """Build the encoder from a torchvision-format VGG-19 state dict, or
        from the deterministic seeded fallback when no path is given."""
        enc = cls()
        if weights_path is not None:
            state = torch.load(str(weights_path), map_location="cpu", weights_only=True)
            own = enc.state_dict()
            filtered = {k: v for k, v in state.items() if k in own}
            missing = set(own) - set(filtered)
            if missing:
                raise ValueError(f"encoder weights at {weights_path} missing keys: {sorted(missing)}")
            enc.load_state_dict(filtered)
        else:
            enc._seeded_init(seed)
        enc._freeze()
        return enc


def encode(encoder: FeatureEncoder, img: RgbImage) -> list[torch.Tensor]:
    """Feature taps F_1..F_4 of a numpy image (deepest last). Inference-only."""
    from .torch_ops import image_tensor

    validate_image(img)
    with torch.no_grad():
        return encoder(normalize_for_encoder(image_tensor(img)))


def adain(content_feat: torch.Tensor, style_feat: torch.Tensor, eps: float = 1e-5) -> torch.Tensor:
    """Re-statistic content features to the style features' per-channel moments."""
    squeeze = content_feat.dim() == 3
    c = content_feat.unsqueeze(0) if squeeze else content_feat
    s = style_feat.unsqueeze(0) if style_feat.dim() == 3 else style_feat
    if c.shape[1] != s.shape[1]:
        raise ValueError(f"channel mismatch: {c.shape[1]} vs {s.shape[1]}")
    # The 1e-10 floor keeps sqrt's gradient finite for constant channels.
    c_mean = c.mean(dim=(2, 3), keepdim=True)
    c_std = torch.sqrt(c.var(dim=(2, 3), unbiased=False, keepdim=True) + 1e-10)
    s_mean = s.mean(dim=(2, 3), keepdim=True)
    s_std = torch.sqrt(s.var(dim=(2, 3), unbiased=False, keepdim=True) + 1e-10)
    out = (c - c_mean) / (c_std + eps) * s_std + s_mean
    return out.squeeze(0) if squeeze else out


def _scale_block(in_channels: int, out_channels: int) -> nn.Sequential:
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, kernel_size=3, padding=1),
        nn.ReLU(inplace=True),
        nn.Conv2d(out_channels, out_channels, kernel_size=3, padding=1),
    )


class ParamPredictor(nn.Module):
    """Trainable fusion network mapping encoder taps to grading parameters.

    Taps are average-pooled to ``pool_size`` and the per-scale blocks narrow
    to ``block_channels`` before fusion (see README on CPU budget); fusion is
    AdaIN of the content path against the style path, pooled to 1x1,
    concatenated, and passed through a small head whose final layer is
    zero-initialized. Raw outputs are squashed as
    ``clamp(identity + half_range * tanh(z))`` so predictions are always in
    range and a fresh model predicts the exact identity grade.
    """

    def __init__(self, pool_size: int = 16, hidden: int = 128, block_channels: int = 64) -> None:
        super().__init__()
        self.pool_size = pool_size
        self.hidden = hidden
        self.block_channels = block_channels
        self.content_blocks = nn.ModuleList(_scale_block(c, block_channels) for c in SCALE_CHANNELS)
        self.style_blocks = nn.ModuleList(_scale_block(c, block_channels) for c in SCALE_CHANNELS)
        self.head = nn.Sequential(
            nn.Linear(block_channels * len(SCALE_CHANNELS), hidden),
            nn.ReLU(inplace=True),
            nn.Linear(hidden, len(PARAM_NAMES)),
        )
        nn.init.zeros_(self.head[-1].weight)
        nn.init.zeros_(self.head[-1].bias)

        center, half = squash_config()
        lo = np.array([PARAM_RANGES[n][0] for n in PARAM_NAMES])
        hi = np.array([PARAM_RANGES[n][1] for n in PARAM_NAMES])
        self.register_buffer("squash_center", torch.tensor(center, dtype=torch.float32))
        self.register_buffer("squash_half", torch.tensor(half, dtype=torch.float32))
        self.register_buffer("param_lo", torch.tensor(lo, dtype=torch.float32))
        self.register_buffer("param_hi", torch.tensor(hi, dtype=torch.float32))

    def squash(self, z: torch.Tensor) -> torch.Tensor:
        p = self.squash_center + self.squash_half * torch.tanh(z)
        return torch.clamp(p, self.param_lo, self.param_hi)

    def forward(self, content_taps: list[torch.Tensor], style_taps: list[torch.Tensor]) -> torch.Tensor:
        vecs = []
        for j in range(len(SCALE_CHANNELS)):
            fc = F.adaptive_avg_pool2d(content_taps[j], self.pool_size)
            fs = F.adaptive_avg_pool2d(style_taps[j], self.pool_size)
            fused = adain(self.content_blocks[j](fc), self.style_blocks[j](fs))
            vecs.append(F.adaptive_avg_pool2d(fused, 1).flatten(1))
        z = self.head(torch.cat(vecs, dim=1))
        return self.squash(z)


def predict_params(model: ParamPredictor, encoder: FeatureEncoder,
                   content: RgbImage, style: RgbImage,
                   image_size: int = ENCODER_INPUT_SIZE) -> GradingParams:
    """Predict grading parameters for a (content, style) image pair."""
    validate_image(content)
    validate_image(style)
    from .torch_ops import image_tensor

    c = image_tensor(resize(content, image_size, image_size))
    s = image_tensor(resize(style, image_size, image_size))
    model.eval()
    with torch.no_grad():
        taps_c = encoder(normalize_for_encoder(c))
        taps_s = encoder(normalize_for_encoder(s))
        vec = model(taps_c, taps_s)[0].numpy()
    return GradingParams.clamped_from_array(vec)


# ---------------------------------------------------------------------------
# Checkpoints: trainable weights + squash config; backbone weights are only
# ever referenced by path, never embedded.
# ---------------------------------------------------------------------------

CHECKPOINT_FORMAT = 1


def save_checkpoint(model: ParamPredictor, path: str | Path, encoder_ref: dict | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "pool_size": model.pool_size,
        "hidden": model.hidden,
        "block_channels": model.block_channels,
        "param_names": list(PARAM_NAMES),
        "model_state": model.state_dict(),
        "encoder": encoder_ref or {"weights": None, "seed": DEFAULT_ENCODER_SEED},
    }
    torch.save(payload, str(path))


def load_checkpoint(path: str | Path) -> tuple[ParamPredictor, dict]:
    payload = torch.load(str(path), map_location="cpu", weights_only=True)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"unsupported checkpoint format in {path}")
    if payload.get("param_names") != list(PARAM_NAMES):
        raise ValueError(f"checkpoint {path} was built for different parameters")
    model = ParamPredictor(pool_size=payload["pool_size"], hidden=payload["hidden"],
                           block_channels=payload.get("block_channels", 64))
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model, payload.get("encoder", {"weights": None, "seed": DEFAULT_ENCODER_SEED})


def build_encoder(encoder_ref: dict | None = None) -> FeatureEncoder:
    ref = encoder_ref or {}
    return FeatureEncoder.load(ref.get("weights"), seed=int(ref.get("seed", DEFAULT_ENCODER_SEED)))
