"""Grayscale images, binary masks, file I/O and synthetic test images.

Intensities are held as float64 arrays in [0, 1], indexed ``[row, col]``.
Files are 8-bit: binary PGM (P5, maxval 255) is the canonical format and
8-bit grayscale PNG is accepted as well.

Synthetic images draw their noise from numpy's ``default_rng`` (PCG64)
seeded with the caller's integer seed, so a given argument tuple always
yields the same pixels.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

SYNTHETIC_KINDS = ("disk-ramp", "homogeneous", "two-object")

_MIN_SIDE = 3
_MIN_SYNTH_SIDE = 64


class ImageFormatError(ValueError):
    """Raised for files that are not 8-bit single-channel images."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _check_shape(shape: tuple[int, ...]) -> None:
    if len(shape) != 2:
        raise ValueError(f"expected a 2D field, got shape {shape}")
    h, w = shape
    if w < _MIN_SIDE or h < _MIN_SIDE:
        raise ValueError(f"image must be at least {_MIN_SIDE}x{_MIN_SIDE}, got {w}x{h}")


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable grayscale image with intensities in [0, 1]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        _check_shape(arr.shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("image contains non-finite intensities")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "data", _frozen(arr))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Immutable boolean mask; ``True`` marks object pixels."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data)
        _check_shape(arr.shape)
        object.__setattr__(self, "data", _frozen(arr.astype(bool)))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def area(self) -> int:
        return int(self.data.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))


@dataclass(frozen=True)
class RectRegion:
    """Axis-aligned rectangle given by its center pixel and size.

    The covered columns are ``cx - width // 2`` up to (but excluding)
    ``cx - width // 2 + width``, and likewise for rows.
    """

    cx: int
    cy: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"region size must be positive, got {self.width}x{self.height}")

    @property
    def col_slice(self) -> slice:
        x0 = self.cx - self.width // 2
        return slice(x0, x0 + self.width)

    @property
    def row_slice(self) -> slice:
        y0 = self.cy - self.height // 2
        return slice(y0, y0 + self.height)

    def fits(self, shape: tuple[int, int]) -> bool:
        h, w = shape
        cs, rs = self.col_slice, self.row_slice
        return cs.start >= 0 and rs.start >= 0 and cs.stop <= w and rs.stop <= h

    @classmethod
    def centered(cls, shape: tuple[int, int], width: int = 40, height: int = 40) -> "RectRegion":
        h, w = shape
        return cls(cx=w // 2, cy=h // 2, width=width, height=height)

    @classmethod
    def parse(cls, text: str) -> "RectRegion":
        """Parse ``"cx,cy,w,h"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected cx,cy,w,h but got {text!r}")
        return cls(*(int(p) for p in parts))


def load_image(path: str | Path) -> GrayImage:
    """Read an 8-bit grayscale PGM or PNG file, scaling intensities to [0, 1].

    Raises
    ------
    FileNotFoundError
        If ``path`` does not exist.
    ImageFormatError
        If the file cannot be decoded, or is not 8-bit single-channel.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("1", "I;16", "I;16B", "I;16L", "I", "F"):
                raise ImageFormatError(f"{path}: unsupported bit depth (mode {mode!r}); expected 8-bit")
            if mode != "L":
                raise ImageFormatError(
                    f"{path}: unsupported color format (mode {mode!r}); expected single-channel grayscale"
                )
            raw = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"{path}: not a readable PGM/PNG image") from exc
    return GrayImage(raw.astype(np.float64) / 255.0)


def load_mask(path: str | Path, threshold: float = 0.5) -> BinaryMask:
    """Read a mask file; pixels brighter than ``threshold`` are object."""
    return BinaryMask(load_image(path).data > threshold)


def _write_u8(arr: np.ndarray, path: str | Path) -> None:
    path = Path(path)
    fmt = "PNG" if path.suffix.lower() == ".png" else "PPM"
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint8), mode="L").save(path, format=fmt)


def save_mask(mask: BinaryMask, path: str | Path) -> None:
    """Write a mask as 8-bit grayscale (object 255, background 0).

    The format follows the suffix: ``.png`` writes PNG, anything else P5 PGM.
    """
    _write_u8(np.where(mask.data, 255, 0), path)


def save_image(img: GrayImage, path: str | Path) -> None:
    """Write an image quantized to 8 bits (round to nearest)."""
    _write_u8(np.rint(img.data * 255.0), path)


def _ramp_disk(xx, yy, cx, cy, r, out, support):
    inside = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
    # 0.55 at the left edge of the disk, 0.95 at the right edge
    t = (xx - (cx - r)) / (2.0 * r)
    ramp = 0.55 * (1.0 - t) + 0.95 * t
    out[inside] = ramp[inside]
    support |= inside


def make_synthetic(
    kind: str, width: int, height: int, noise_sigma: float = 0.0, seed: int = 0
) -> tuple[GrayImage, BinaryMask]:
    """Generate a test image together with its exact object mask.

    ``homogeneous``
        Centered disk at 0.8 on a flat 0.2 background.
    ``disk-ramp``
        Centered disk whose intensity rises linearly from 0.55 to 0.95
        left to right across its diameter, on a background shaded
        linearly from 0.15 (top row) to 0.30 (bottom row).
    ``two-object``
        Two smaller disjoint ramp disks on the same shaded background.

    Disk radius is ``min(width, height) / 4`` (``/ 6`` for two-object).
    Gaussian noise of std ``noise_sigma`` is added and the result clamped
    to [0, 1].
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {', '.join(SYNTHETIC_KINDS)}")
    if width < _MIN_SYNTH_SIDE or height < _MIN_SYNTH_SIDE:
        raise ValueError(f"synthetic images need width, height >= {_MIN_SYNTH_SIDE}, got {width}x{height}")
    if noise_sigma < 0 or not np.isfinite(noise_sigma):
        raise ValueError(f"noise sigma must be a finite non-negative number, got {noise_sigma}")

    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    support = np.zeros((height, width), dtype=bool)
    cx, cy = width // 2, height // 2

    if kind == "homogeneous":
        r = min(width, height) / 4.0
        support = (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        img = np.where(support, 0.8, 0.2)
    else:
        img = 0.15 + 0.15 * yy / (height - 1)
        if kind == "disk-ramp":
            _ramp_disk(xx, yy, cx, cy, min(width, height) / 4.0, img, support)
        else:
            r = min(width, height) / 6.0
            for ox in (width // 4, width - width // 4):
                _ramp_disk(xx, yy, ox, cy, r, img, support)

    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        img = np.clip(img + rng.normal(0.0, noise_sigma, size=img.shape), 0.0, 1.0)
    return GrayImage(img), BinaryMask(support)
