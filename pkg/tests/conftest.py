import numpy as np
import pytest

from mfspf import GrayImage


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def random_image(rng):
    def make(h=32, w=32):
        return GrayImage(rng.random((h, w)))
    return make


def write_pgm(path, pixels, maxval=255):
    pixels = np.asarray(pixels, dtype=np.uint8)
    h, w = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode())
        fh.write(pixels.tobytes())
