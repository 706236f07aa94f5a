import numpy as np
import pytest

import evflow as ef


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def sharp_scene():
    """64x64 checkerboard translating by (2, 0) px with a sharp (T = 0) frame."""
    spec = ef.SceneSpec(width=64, height=64, texture="checkerboard",
                        velocity=(2.0, 0.0), exposure_T=0.0, window_dt=1.0,
                        threshold=0.22, substeps=17)
    return ef.render_scene(spec, seed=0)


@pytest.fixture(scope="session")
def blurred_scene():
    """128x128 blob texture, 17-substep exposure average, (8, 0) px motion."""
    spec = ef.SceneSpec(width=128, height=128, texture="blobs",
                        velocity=(8.0, 0.0), exposure_T=1.0, window_dt=1.0,
                        threshold=0.22, substeps=17, feature_scale=5.0)
    return ef.render_scene(spec, seed=1)
