"""Windowed texture features: local entropy, standard deviation, range, gradient.

Every windowed map replicates edge pixels outward so the output has the
same shape as the input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage as ndi

from mfspf.image_core import GrayImage

ENTROPY_BINS = 256


def as_field(x) -> np.ndarray:
    """Return the float64 array behind a GrayImage, or ``x`` itself as an array."""
    if isinstance(x, GrayImage):
        return x.data
    return np.asarray(x, dtype=np.float64)


def check_window(size: int, shape: tuple[int, int], name: str = "n") -> None:
    if int(size) != size or size % 2 == 0:
        raise ValueError(f"window width {name}={size} must be an odd integer")
    if not 3 <= size <= min(shape):
        raise ValueError(f"window width {name}={size} must lie in [3, {min(shape)}] for a {shape[1]}x{shape[0]} image")


def quantize(img: np.ndarray, bins: int = ENTROPY_BINS) -> np.ndarray:
    """Map intensities in [0, 1] to ``bins`` uniform integer levels."""
    return np.minimum((img * bins).astype(np.int64), bins - 1)


def _window_sums(arr: np.ndarray, n: int) -> np.ndarray:
    # arr is already padded by n // 2; integer cumulative sums keep counts exact
    s = np.zeros((arr.shape[0] + 1, arr.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(arr, axis=0), axis=1, out=s[1:, 1:])
    return s[n:, n:] - s[:-n, n:] - s[n:, :-n] + s[:-n, :-n]


def entropy_map(img, n: int) -> np.ndarray:
    """Shannon entropy (bits) of the 256-bin histogram in each n x n window.

    Bins are visited in ascending order and empty bins contribute nothing.
    """
    I = as_field(img)
    check_window(n, I.shape)
    q = np.pad(quantize(I), n // 2, mode="edge")
    total = float(n * n)
    out = np.zeros(I.shape, dtype=np.float64)
    for level in np.unique(q):
        counts = _window_sums((q == level).astype(np.int64), n)
        hit = counts > 0
        p = counts[hit] / total
        out[hit] -= p * np.log2(p)
    return out


def std_map(img, n: int) -> np.ndarray:
    """Population standard deviation over each n x n window."""
    I = as_field(img)
    check_window(n, I.shape)
    win = sliding_window_view(np.pad(I, n // 2, mode="edge"), (n, n))
    return win.std(axis=(-2, -1))


def range_map(img, m: int) -> np.ndarray:
    """Max minus min over each m x m window."""
    I = as_field(img)
    check_window(m, I.shape, name="m")
    return ndi.maximum_filter(I, size=m, mode="nearest") - ndi.minimum_filter(I, size=m, mode="nearest")


def gradient_map(img) -> np.ndarray:
    """Forward-difference gradient magnitude; differences past the last row/column are 0."""
    I = as_field(img)
    dx = np.zeros_like(I)
    dy = np.zeros_like(I)
    dx[:, :-1] = I[:, 1:] - I[:, :-1]
    dy[:-1, :] = I[1:, :] - I[:-1, :]
    return np.sqrt(dx * dx + dy * dy)


@dataclass(frozen=True, eq=False)
class FeatureStack:
    entropy: np.ndarray
    std: np.ndarray
    grad: np.ndarray
    range: np.ndarray

    def __post_init__(self) -> None:
        shapes = {a.shape for a in (self.entropy, self.std, self.grad, self.range)}
        if len(shapes) != 1:
            raise ValueError(f"feature maps disagree in shape: {sorted(shapes)}")

    @property
    def shape(self) -> tuple[int, int]:
        return self.entropy.shape


def compute_features(img, n: int = 9, m: int = 5) -> FeatureStack:
    """All feature maps for ``img``: entropy/std over n x n, range over m x m."""
    return FeatureStack(
        entropy=entropy_map(img, n),
        std=std_map(img, n),
        grad=gradient_map(img),
        range=range_map(img, m),
    )
