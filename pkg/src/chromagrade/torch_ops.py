"""Differentiable torch twin of the grading chain, used by training and the
gradient checks. Mirrors the numpy/numba kernels operator-for-operator; the
two paths are cross-checked in the test suite.

Layout conventions: images are (B, 3, H, W) tensors in [0, 1]; parameter
vectors are (B, 7) in the canonical order of color_ops.PARAM_NAMES.
"""

from __future__ import annotations

import math

import numpy as np
import torch

from . import _kernels
from .color_ops import PARAM_NAMES, GradingParams
from .imaging import LUMA_WEIGHTS

_IDX = {name: i for i, name in enumerate(PARAM_NAMES)}
GAMMA_FLOOR = 1e-6


def image_tensor(img: np.ndarray, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    """(H, W, 3) numpy image -> (1, 3, H, W) tensor."""
    t = torch.from_numpy(np.ascontiguousarray(img)).to(dtype)
    return t.permute(2, 0, 1).unsqueeze(0)


def tensor_image(t: torch.Tensor) -> np.ndarray:
    """(1, 3, H, W) or (3, H, W) tensor -> (H, W, 3) float32 numpy image."""
    if t.dim() == 4:
        t = t.squeeze(0)
    return t.detach().permute(1, 2, 0).to(torch.float32).cpu().numpy()


def params_tensor(p: GradingParams, dtype: torch.dtype = torch.float32) -> torch.Tensor:
    return torch.tensor(p.as_array(), dtype=dtype)


def _col(params: torch.Tensor, name: str) -> torch.Tensor:
    # (B,) -> (B, 1, 1, 1) for broadcasting over (B, 3, H, W)
    return params[:, _IDX[name]].view(-1, 1, 1, 1)


def _hue_matrix(angle: torch.Tensor) -> torch.Tensor:
    """(B,) angles -> (B, 3, 3) rotation matrices about the gray axis."""
    c = torch.cos(angle)
    s = torch.sin(angle)
    t = (1.0 - c) / 3.0
    u = s / math.sqrt(3.0)
    rows = [
        torch.stack([c + t, t - u, t + u], dim=-1),
        torch.stack([t + u, c + t, t - u], dim=-1),
        torch.stack([t - u, t + u, c + t], dim=-1),
    ]
    return torch.stack(rows, dim=-2)


def _blur5(x: torch.Tensor) -> torch.Tensor:
    """Separable 5-tap Gaussian blur with replicate borders, per channel."""
    w = torch.as_tensor(_kernels.GAUSS5, dtype=x.dtype, device=x.device)
    kv = w.view(1, 1, 5, 1).expand(3, 1, 5, 1)
    kh = w.view(1, 1, 1, 5).expand(3, 1, 1, 5)
    x = torch.nn.functional.pad(x, (0, 0, 2, 2), mode="replicate")
    x = torch.nn.functional.conv2d(x, kv, groups=3)
    x = torch.nn.functional.pad(x, (2, 2, 0, 0), mode="replicate")
    return torch.nn.functional.conv2d(x, kh, groups=3)


def apply_pointwise_t(img: torch.Tensor, params: torch.Tensor) -> torch.Tensor:
    """Pointwise grading chain on (B, 3, H, W) given (B, 7) parameters."""
    shift = 0.3 * _col(params, "temperature")
    r = img[:, 0:1] + shift
    g = img[:, 1:2]
    b = img[:, 2:3] - shift
    x = torch.cat([r, g, b], dim=1)

    x = x + _col(params, "brightness")

    c = _col(params, "contrast")
    x = x * c + (0.5 - 0.5 * c)

    x = torch.clamp(x, 0.0, 1.0)
    gam = _col(params, "gamma")
    x = torch.exp(gam * torch.log(torch.clamp(x, min=GAMMA_FLOOR)))

    rot = _hue_matrix(params[:, _IDX["hue"]])
    x = torch.einsum("bij,bjhw->bihw", rot, x)

    lw = torch.as_tensor(LUMA_WEIGHTS, dtype=x.dtype, device=x.device).view(1, 3, 1, 1)
    luma = (x * lw).sum(dim=1, keepdim=True)
    s = _col(params, "saturation")
    x = x * s + luma * (1.0 - s)

    return torch.clamp(x, 0.0, 1.0)


def apply_params_t(img: torch.Tensor, params: torch.Tensor) -> torch.Tensor:
    """Full grading (pointwise chain + unsharp mask), differentiable in both inputs.

    Accepts (3, H, W)/(7,) or batched (B, 3, H, W)/(B, 7).
    """
    squeeze = img.dim() == 3
    if squeeze:
        img = img.unsqueeze(0)
    if params.dim() == 1:
        params = params.unsqueeze(0).expand(img.shape[0], -1)

    x = apply_pointwise_t(img, params)
    amount = _col(params, "sharpness")
    x = torch.clamp(x + amount * (x - _blur5(x)), 0.0, 1.0)
    return x.squeeze(0) if squeeze else x
