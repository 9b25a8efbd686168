import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from chromagrade import _kernels, torch_ops
from chromagrade.color_ops import (
    IDENTITY,
    PARAM_NAMES,
    PARAM_RANGES,
    GradingParams,
    apply_params,
    apply_pointwise,
    grade_video,
    hue_rotation_matrix,
    squash_config,
)
from chromagrade.imaging import VideoFrames, luminance

from oracles import pointwise_oracle

MODERATE = GradingParams(brightness=0.08, contrast=1.25, gamma=1.3, hue=0.25,
                         saturation=1.4, sharpness=0.7, temperature=0.12)


class TestGradingParams:
    def test_identity_constant(self):
        assert IDENTITY.as_array().tolist() == [0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0]

    @pytest.mark.parametrize("name", PARAM_NAMES)
    def test_out_of_range_rejected(self, name):
        lo, hi, _ = PARAM_RANGES[name]
        with pytest.raises(ValueError):
            GradingParams(**{name: hi + 0.01})
        with pytest.raises(ValueError):
            GradingParams(**{name: lo - 0.01})

    def test_json_round_trip(self):
        p = MODERATE
        q = GradingParams.from_json(p.to_json())
        assert p == q
        keys = list(json.loads(p.to_json()))
        assert keys == list(PARAM_NAMES)

    def test_unknown_key_rejected(self):
        obj = json.loads(IDENTITY.to_json())
        obj["vibrance"] = 1.0
        with pytest.raises(ValueError, match="unknown"):
            GradingParams.from_dict(obj)

    def test_missing_key_rejected(self):
        obj = json.loads(IDENTITY.to_json())
        del obj["hue"]
        with pytest.raises(ValueError, match="missing"):
            GradingParams.from_dict(obj)

    def test_squash_config(self):
        center, half = squash_config()
        for i, name in enumerate(PARAM_NAMES):
            lo, hi, ident = PARAM_RANGES[name]
            assert center[i] == ident
            assert half[i] > 0
            # squashed extremes stay in range after clamping
            assert lo <= max(min(ident + half[i], hi), lo) <= hi


class TestPointwise:
    def test_identity_is_noop(self, rand_image):
        assert np.array_equal(apply_pointwise(rand_image, IDENTITY), rand_image)

    def test_brightness_on_gray(self):
        got = apply_pointwise(np.array([0.5, 0.5, 0.5], np.float32),
                              GradingParams(brightness=0.1))
        assert np.allclose(got, 0.6, atol=1e-7)

    def test_contrast_derived_example(self):
        got = apply_pointwise(np.array([0.2, 0.4, 0.8], np.float32),
                              GradingParams(contrast=2.0))
        assert np.allclose(got, [0.0, 0.3, 1.0], atol=1e-6)

    def test_full_desaturation_is_luma(self, rng):
        px = rng.random(3).astype(np.float32)
        got = apply_pointwise(px, GradingParams(saturation=0.0))
        y = luminance(px[None, None])[0, 0]
        assert np.allclose(got, y, atol=1e-6)

    def test_matches_scalar_oracle(self, rng):
        img = rng.random((8, 8, 3)).astype(np.float32)
        p = MODERATE.replace(sharpness=0.0)
        got = apply_params(img, p)
        for y in range(8):
            for x in range(8):
                want = pointwise_oracle(img[y, x], p)
                assert np.abs(got[y, x] - want).max() < 1e-5, (y, x)

    def test_hue_rotation_inverts(self, rng):
        # near-gray pixels stay unclamped under +/- pi/4 rotations
        px = (0.4 + 0.2 * rng.random((32, 3))).astype(np.float32)
        theta = 0.6
        fwd = apply_pointwise(px, GradingParams(hue=theta))
        back = apply_pointwise(fwd, GradingParams(hue=-theta))
        assert np.abs(back - px).max() <= 1e-5

    def test_brightness_monotone_on_gray(self):
        gray = np.full((4, 4, 3), 0.5, np.float32)
        prev = apply_params(gray, GradingParams(brightness=-0.2))
        for b in (-0.1, 0.0, 0.1, 0.2):
            cur = apply_params(gray, GradingParams(brightness=b))
            assert (cur >= prev - 1e-7).all()
            prev = cur

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_identity_exact_property(self, seed):
        img = np.random.default_rng(seed).random((6, 7, 3)).astype(np.float32)
        # include exact endpoints
        img[0, 0] = 0.0
        img[-1, -1] = 1.0
        assert np.array_equal(apply_params(img, IDENTITY), img)

    def test_output_always_in_range(self, rng):
        img = rng.random((8, 8, 3)).astype(np.float32)
        for _ in range(20):
            vec = [rng.uniform(lo, hi) for lo, hi, _ in PARAM_RANGES.values()]
            out = apply_params(img, GradingParams.from_array(vec))
            assert out.min() >= 0.0 and out.max() <= 1.0
            assert np.isfinite(out).all()


class TestSharpness:
    def test_constant_image_unchanged(self):
        img = np.full((10, 10, 3), 0.42, np.float32)
        out = apply_params(img, GradingParams(sharpness=1.7))
        assert np.abs(out - img).max() <= 1e-6

    def test_sharpening_increases_local_contrast(self):
        img = np.zeros((16, 16, 3), np.float32)
        img[:, 8:] = 1.0
        img = _kernels.unsharp(img, 0.0)  # soften the edge first
        soft = img.copy()
        sharp = apply_params(soft, GradingParams(sharpness=1.0))
        edge = slice(6, 10)
        assert np.abs(sharp[:, edge] - 0.5).mean() >= np.abs(soft[:, edge] - 0.5).mean()


class TestGradeVideo:
    def test_identity_video(self, rng):
        frames = rng.random((3, 4, 4, 3)).astype(np.float32)
        video = VideoFrames(frames=frames, frame_rate=25.0)
        out = grade_video(video, IDENTITY)
        assert np.array_equal(out.frames, frames)
        assert out.frame_rate == 25.0

    def test_duplicate_frames_identical(self, rng):
        frame = rng.random((4, 4, 3)).astype(np.float32)
        video = VideoFrames(frames=np.stack([frame, frame]), frame_rate=25.0)
        out = grade_video(video, MODERATE)
        assert np.array_equal(out.frames[0], out.frames[1])

    def test_matches_per_frame_oracle(self, rng):
        frames = rng.random((3, 4, 4, 3)).astype(np.float32)
        video = VideoFrames(frames=frames, frame_rate=12.0)
        out = grade_video(video, MODERATE)
        for i in range(3):
            assert np.array_equal(out.frames[i], apply_params(frames[i], MODERATE))


class TestKernelPaths:
    @pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")
    def test_grade_parity(self, rng):
        img = rng.random((32, 32, 3)).astype(np.float32)
        for p in (IDENTITY, MODERATE, GradingParams(gamma=0.5, contrast=1.9)):
            fast = apply_params(img, p)
            with _kernels.pure_numpy():
                slow = apply_params(img, p)
            assert np.abs(fast - slow).max() < 1e-5

    @pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba unavailable")
    def test_unsharp_parity(self, rng):
        img = rng.random((20, 24, 3)).astype(np.float32)
        fast = _kernels.unsharp(img, 1.3)
        with _kernels.pure_numpy():
            slow = _kernels.unsharp(img, 1.3)
        assert np.abs(fast - slow).max() < 1e-5

    def test_env_flag_selects_numpy(self):
        code = (
            "import chromagrade._kernels as k; "
            "print(k.numba_active())"
        )
        env = dict(os.environ, CHROMAGRADE_PURE_NUMPY="1")
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True, check=True)
        assert out.stdout.strip() == "False"

    def test_hue_matrix_identity_exact(self):
        assert np.array_equal(hue_rotation_matrix(0.0), np.eye(3, dtype=np.float32))


class TestTorchTwin:
    def test_matches_numpy_chain(self, rng):
        img = rng.random((12, 14, 3)).astype(np.float32)
        for p in (IDENTITY, MODERATE, GradingParams(gamma=0.6, saturation=0.2)):
            ref = apply_params(img, p)
            out = torch_ops.tensor_image(
                torch_ops.apply_params_t(torch_ops.image_tensor(img), torch_ops.params_tensor(p))
            )
            assert np.abs(out - ref).max() < 1e-5

    def test_batched_matches_single(self, rng):
        imgs = rng.random((2, 8, 8, 3)).astype(np.float32)
        ps = np.stack([MODERATE.as_array(), IDENTITY.as_array()])
        batch = torch.stack([torch_ops.image_tensor(i).squeeze(0) for i in imgs])
        out = torch_ops.apply_params_t(batch, torch.tensor(ps, dtype=torch.float32))
        for i in range(2):
            single = torch_ops.apply_params_t(
                torch_ops.image_tensor(imgs[i]),
                torch.tensor(ps[i], dtype=torch.float32),
            )
            assert torch.allclose(out[i], single.squeeze(0), atol=1e-6)


# Fixture grades chosen so no pixel saturates a clamp (gradients stay clean).
_GRAD_PARAMS = GradingParams(brightness=0.04, contrast=1.12, gamma=1.15, hue=0.1,
                             saturation=1.15, sharpness=0.3, temperature=0.06)


def _mean_after_grading(img64: torch.Tensor, vec: torch.Tensor, weights=None) -> torch.Tensor:
    out = torch_ops.apply_params_t(img64, vec)
    if weights is None:
        return out.mean()
    return (out * weights).mean()


class TestParamGradients:
    @pytest.mark.parametrize("weighted", [False, True])
    def test_autograd_matches_finite_differences(self, rng, weighted):
        img = (0.2 + 0.6 * rng.random((12, 12, 3))).astype(np.float32)
        img64 = torch_ops.image_tensor(img, dtype=torch.float64)
        weights = None
        if weighted:
            weights = torch.tensor(rng.random((1, 3, 12, 12)), dtype=torch.float64)
        base = torch.tensor(_GRAD_PARAMS.as_array(), dtype=torch.float64)

        vec = base.clone().requires_grad_(True)
        _mean_after_grading(img64, vec, weights).backward()
        analytic = vec.grad.numpy()

        h = 1e-3
        for i, name in enumerate(PARAM_NAMES):
            plus, minus = base.clone(), base.clone()
            plus[i] += h
            minus[i] -= h
            fd = (_mean_after_grading(img64, plus, weights)
                  - _mean_after_grading(img64, minus, weights)).item() / (2 * h)
            scale = max(abs(fd), 1e-4 if not weighted else 1e-6)
            rel = abs(analytic[i] - fd) / scale
            assert rel <= 1e-2, f"{name}: analytic={analytic[i]:.6g} fd={fd:.6g} rel={rel:.3g}"
