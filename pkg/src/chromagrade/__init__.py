"""chromagrade: parametric color style transfer for images and video.

A small network predicts seven human-interpretable grading parameters
(brightness, contrast, gamma, hue, saturation, sharpness, temperature) from a
content/style image pair; the parameters grade whole videos flicker-free and
can be baked into standard `.cube` 3D LUTs.
"""

from .color_ops import IDENTITY, PARAM_NAMES, PARAM_RANGES, GradingParams, apply_params, apply_pointwise, grade_video
from .imaging import RgbImage, VideoFrames, load_image, load_video, luminance, resize, save_image, save_video
from .losses import LossWeights, color_hist_loss, content_loss, soft_histogram, style_loss, total_loss
from .lut import Lut3D, apply_lut, bake_lut, read_cube, write_cube
from .predictor import FeatureEncoder, ParamPredictor, adain, encode, load_checkpoint, predict_params, save_checkpoint
from .training import KeyframeSet, TrainConfig, finetune, pretrain, select_keyframes

__version__ = "0.1.0"

__all__ = [
    "GradingParams", "IDENTITY", "PARAM_NAMES", "PARAM_RANGES",
    "apply_params", "apply_pointwise", "grade_video",
    "RgbImage", "VideoFrames", "load_image", "save_image", "load_video", "save_video",
    "resize", "luminance",
    "LossWeights", "style_loss", "content_loss", "soft_histogram", "color_hist_loss", "total_loss",
    "Lut3D", "bake_lut", "apply_lut", "read_cube", "write_cube",
    "FeatureEncoder", "ParamPredictor", "adain", "encode", "predict_params",
    "save_checkpoint", "load_checkpoint",
    "TrainConfig", "KeyframeSet", "pretrain", "finetune", "select_keyframes",
    "__version__",
]
