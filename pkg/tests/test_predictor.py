import numpy as np
import pytest
import torch

from chromagrade.color_ops import IDENTITY, PARAM_NAMES, PARAM_RANGES
from chromagrade.predictor import (
    FeatureEncoder,
    ParamPredictor,
    adain,
    build_encoder,
    encode,
    load_checkpoint,
    normalize_for_encoder,
    predict_params,
    save_checkpoint,
)
from chromagrade.torch_ops import image_tensor

import synthmedia


def _taps_for(encoder, rng, size=64):
    img = rng.random((size, size, 3)).astype(np.float32)
    return encode(encoder, img)


class TestFeatureEncoder:
    def test_tap_shapes_at_training_resolution(self, encoder):
        x = torch.zeros(1, 3, 256, 256)
        taps = encoder(normalize_for_encoder(x))
        spatial = [t.shape[-1] for t in taps]
        channels = [t.shape[1] for t in taps]
        assert spatial == [256, 128, 64, 32]
        assert channels == [64, 128, 256, 512]

    def test_scales_strictly_ordered(self, encoder, rng):
        taps = _taps_for(encoder, rng, size=128)
        sizes = [t.shape[-1] for t in taps]
        chans = [t.shape[1] for t in taps]
        assert all(a > b for a, b in zip(sizes, sizes[1:]))
        assert all(a < b for a, b in zip(chans, chans[1:]))

    def test_deterministic_for_identical_inputs(self, encoder, rng):
        img = rng.random((64, 64, 3)).astype(np.float32)
        a = encode(encoder, img)
        b = encode(encoder, img.copy())
        for ta, tb in zip(a, b):
            assert torch.equal(ta, tb)

    def test_same_seed_same_weights(self):
        a = FeatureEncoder.load(None, seed=7)
        b = FeatureEncoder.load(None, seed=7)
        for pa, pb in zip(a.parameters(), b.parameters()):
            assert torch.equal(pa, pb)

    def test_zero_image_finite(self, encoder):
        taps = encode(encoder, np.zeros((64, 64, 3), np.float32))
        for t in taps:
            assert torch.isfinite(t).all()

    def test_frozen(self, encoder):
        assert not encoder.training
        assert all(not p.requires_grad for p in encoder.parameters())

    def test_loads_backbone_format_state_dict(self, tmp_path, encoder):
        path = tmp_path / "vgg.pth"
        # torchvision-format keys: features.<idx>.weight/bias
        torch.save(encoder.state_dict(), path)
        loaded = FeatureEncoder.load(path)
        for pa, pb in zip(loaded.parameters(), encoder.parameters()):
            assert torch.equal(pa, pb)

    def test_missing_keys_rejected(self, tmp_path):
        torch.save({"features.0.weight": torch.zeros(64, 3, 3, 3)}, tmp_path / "partial.pth")
        with pytest.raises(ValueError, match="missing"):
            FeatureEncoder.load(tmp_path / "partial.pth")


class TestAdain:
    def test_fixed_point_when_stats_match(self, rng):
        c = torch.tensor(rng.random((1, 4, 8, 8)), dtype=torch.float32)
        # same values spatially shuffled: identical per-channel moments
        perm = rng.permutation(64)
        s = c.reshape(1, 4, -1)[:, :, perm].reshape(1, 4, 8, 8)
        out = adain(c, s)
        assert (out - c).abs().max() <= 1e-4

    def test_constant_style_collapses(self, rng):
        c = torch.tensor(rng.random((1, 3, 6, 6)), dtype=torch.float32)
        s = torch.ones(1, 3, 6, 6) * torch.tensor([0.1, 0.5, 0.9]).view(1, 3, 1, 1)
        out = adain(c, s)
        for ch, v in enumerate((0.1, 0.5, 0.9)):
            assert torch.allclose(out[0, ch], torch.tensor(v), atol=1e-5)

    def test_output_moments_match_style(self, rng):
        c = torch.tensor(rng.random((1, 4, 8, 8)), dtype=torch.float32)
        s = torch.tensor(2.0 * rng.random((1, 4, 8, 8)) - 0.5, dtype=torch.float32)
        out = adain(c, s)[0].numpy()
        for ch in range(4):
            vals = out[ch].reshape(-1).astype(np.float64)
            want = s[0, ch].numpy().reshape(-1).astype(np.float64)
            assert vals.mean() == pytest.approx(want.mean(), abs=1e-4)
            assert vals.std() == pytest.approx(want.std(), abs=1e-4)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            adain(torch.zeros(1, 3, 4, 4), torch.zeros(1, 4, 4, 4))


class TestParamPredictor:
    def test_fresh_model_predicts_identity(self, encoder, rng):
        torch.manual_seed(123)
        model = ParamPredictor()
        for _ in range(5):
            content = rng.random((48, 48, 3)).astype(np.float32)
            style = rng.random((48, 48, 3)).astype(np.float32)
            p = predict_params(model, encoder, content, style, image_size=64)
            assert p == IDENTITY

    def test_prediction_deterministic(self, encoder, rng):
        torch.manual_seed(5)
        model = ParamPredictor()
        with torch.no_grad():
            model.head[-1].weight.normal_(std=2.0)
            model.head[-1].bias.normal_(std=2.0)
        content = synthmedia.synth_image(64, 64, seed=1)
        style = synthmedia.style_image("warm", 64, 64)
        a = predict_params(model, encoder, content, style, image_size=64)
        b = predict_params(model, encoder, content, style, image_size=64)
        assert a == b

    def test_outputs_in_range_for_wild_weights(self, encoder, rng):
        torch.manual_seed(9)
        model = ParamPredictor()
        content = rng.random((48, 48, 3)).astype(np.float32)
        style = rng.random((48, 48, 3)).astype(np.float32)
        taps_c = encode(encoder, content)
        taps_s = encode(encoder, style)
        for trial in range(100):
            gen = torch.Generator().manual_seed(trial)
            with torch.no_grad():
                for p in model.head.parameters():
                    p.copy_(torch.randn(p.shape, generator=gen) * 10.0)
            with torch.no_grad():
                vec = model(taps_c, taps_s)[0].numpy()
            for i, name in enumerate(PARAM_NAMES):
                lo, hi, _ = PARAM_RANGES[name]
                assert lo <= vec[i] <= hi, (trial, name, vec[i])

    def test_gradient_reaches_head(self, encoder, rng):
        torch.manual_seed(11)
        model = ParamPredictor()
        taps_c = encode(encoder, rng.random((48, 48, 3)).astype(np.float32))
        taps_s = encode(encoder, rng.random((48, 48, 3)).astype(np.float32))
        params = model(taps_c, taps_s)
        probe = (params * torch.arange(1.0, 8.0)).sum()
        probe.backward()
        grad = model.head[-1].weight.grad
        assert grad is not None and float(grad.abs().max()) > 0

    def test_checkpoint_round_trip(self, tmp_path, encoder, rng):
        torch.manual_seed(3)
        model = ParamPredictor()
        with torch.no_grad():
            model.head[-1].weight.normal_(std=1.0)
        ref = {"weights": None, "seed": 42}
        save_checkpoint(model, tmp_path / "m.pt", ref)
        loaded, enc_ref = load_checkpoint(tmp_path / "m.pt")
        assert enc_ref == ref
        content = rng.random((48, 48, 3)).astype(np.float32)
        style = rng.random((48, 48, 3)).astype(np.float32)
        a = predict_params(model, encoder, content, style, image_size=64)
        b = predict_params(loaded, encoder, content, style, image_size=64)
        assert a == b

    def test_bad_checkpoint_rejected(self, tmp_path):
        torch.save({"format": 99}, tmp_path / "bad.pt")
        with pytest.raises(ValueError):
            load_checkpoint(tmp_path / "bad.pt")

    def test_build_encoder_from_ref(self):
        enc = build_encoder({"weights": None, "seed": 7})
        ref = FeatureEncoder.load(None, seed=7)
        for pa, pb in zip(enc.parameters(), ref.parameters()):
            assert torch.equal(pa, pb)
