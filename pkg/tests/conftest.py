from __future__ import annotations

import numpy as np
import pytest
import torch

from chromagrade.predictor import FeatureEncoder

import synthmedia


@pytest.fixture(scope="session", autouse=True)
def _single_thread_torch():
    # The sandbox exposes one core; pinning keeps training runs reproducible.
    torch.set_num_threads(max(1, torch.get_num_threads()))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(0)


@pytest.fixture
def rand_image(rng) -> np.ndarray:
    return rng.random((16, 16, 3)).astype(np.float32)


@pytest.fixture(scope="session")
def encoder() -> FeatureEncoder:
    # Deterministic seeded backbone (no pretrained weights in this environment).
    return FeatureEncoder.load(None)


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """Ten small structured images with mild distinct palettes, on disk.

    Mild tints keep per-pair loss magnitudes comparable, so running-loss
    descent is measurable over short pretraining runs.
    """
    from chromagrade.imaging import save_image

    root = tmp_path_factory.mktemp("corpus")
    tint_rng = np.random.default_rng(7)
    for i in range(10):
        tint = tuple(1.0 + tint_rng.uniform(-0.25, 0.25, 3))
        lift = tuple(tint_rng.uniform(-0.05, 0.08, 3))
        img = synthmedia.synth_image(64, 64, seed=200 + i, tint=tint, lift=lift)
        save_image(img, root / f"img_{i:02d}.png")
    return root


@pytest.fixture(scope="session")
def fixture_pair():
    """The bundled content/style pair used by training tests."""
    content = synthmedia.synth_image(96, 96, seed=11)
    style = synthmedia.style_image("warm", 96, 96, seed=12)
    return content, style


@pytest.fixture(scope="session")
def sample_video_dir(tmp_path_factory):
    """The bundled 6-frame 25 fps sample clip as a frame directory."""
    from chromagrade.imaging import save_video

    root = tmp_path_factory.mktemp("sample_clip")
    video = synthmedia.synth_video(6, 48, 64, seed=21)
    save_video(video, root)
    return root


@pytest.fixture(scope="session")
def style_png(tmp_path_factory):
    from chromagrade.imaging import save_image

    root = tmp_path_factory.mktemp("style")
    path = root / "style.png"
    save_image(synthmedia.style_image("cool", 64, 64, seed=31), path)
    return path
