import numpy as np
import pytest

from stylecore.image import ImageBuffer
from stylecore.synth import shapes, textured


@pytest.fixture
def rng():
    return np.random.default_rng(np.random.PCG64(1234))


@pytest.fixture
def smoke_pair():
    """A fixed small content/style pair used by descent tests."""
    return textured(11, 64, 64), shapes(12, 64, 64)


@pytest.fixture
def tiny_image(rng):
    return ImageBuffer(rng.random((16, 16, 3)))
