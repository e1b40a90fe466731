"""Soft region membership, Gaussian smoothing and region-fitted maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage as ndi

from mfspf.features import FeatureStack, as_field

DIV_GUARD = 1e-10
MASS_GUARD = 1e-6


def heaviside(phi, epsilon: float = 1.0):
    """Arctan-regularized Heaviside step, ``0.5 * (1 + 2/pi * atan(phi / eps))``."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return 0.5 * (1.0 + (2.0 / math.pi) * np.arctan(np.asarray(phi, dtype=np.float64) / epsilon))


@dataclass(frozen=True, eq=False)
class GaussianKernel:
    """Truncated, unit-sum, separable 2D Gaussian."""

    sigma: float
    radius: int
    profile: np.ndarray  # 1D, unit sum

    @property
    def size(self) -> int:
        return 2 * self.radius + 1

    @property
    def weights(self) -> np.ndarray:
        return np.outer(self.profile, self.profile)


def build_kernel(sigma: float) -> GaussianKernel:
    """Gaussian of std ``sigma`` truncated at radius ``ceil(2 sigma)``."""
    if not sigma > 0:
        raise ValueError(f"kernel sigma must be positive, got {sigma}")
    radius = int(math.ceil(2.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    profile = g / g.sum()
    profile.setflags(write=False)
    return GaussianKernel(sigma=float(sigma), radius=radius, profile=profile)


def convolve(field, kernel: GaussianKernel) -> np.ndarray:
    """Edge-replicating convolution with a (symmetric) Gaussian kernel."""
    f = as_field(field)
    if kernel.size > min(f.shape):
        raise ValueError(f"{kernel.size}x{kernel.size} kernel is larger than the {f.shape[1]}x{f.shape[0]} field")
    out = ndi.correlate1d(f, kernel.profile, axis=0, mode="nearest")
    return ndi.correlate1d(out, kernel.profile, axis=1, mode="nearest")


class RegionMeans(NamedTuple):
    c1: float
    c2: float
    degenerate: bool


def global_means(img, phi, epsilon: float = 1.0) -> RegionMeans:
    """Soft-membership mean intensity inside (``phi > 0``) and outside.

    A side whose total membership falls below ``MASS_GUARD`` takes the
    whole-image mean and sets ``degenerate``.
    """
    I = as_field(img)
    phi = np.asarray(phi, dtype=np.float64)
    if phi.shape != I.shape:
        raise ValueError(f"level set shape {phi.shape} does not match image shape {I.shape}")
    h = heaviside(phi, epsilon)
    mass_in = h.sum()
    mass_out = (1.0 - h).sum()
    degenerate = False
    if mass_in < MASS_GUARD:
        c1 = float(I.mean())
        degenerate = True
    else:
        c1 = float((I * h).sum() / mass_in)
    if mass_out < MASS_GUARD:
        c2 = float(I.mean())
        degenerate = True
    else:
        c2 = float((I * (1.0 - h)).sum() / mass_out)
    return RegionMeans(c1, c2, degenerate)


@dataclass(frozen=True, eq=False)
class FitPair:
    """Kernel-weighted inside/outside fits of one field.

    ``mass_in`` and ``mass_out`` are the smoothed memberships that served
    as denominators.
    """

    inside: np.ndarray
    outside: np.ndarray
    mass_in: np.ndarray
    mass_out: np.ndarray

    def low_mass(self, threshold: float = MASS_GUARD) -> tuple[np.ndarray, np.ndarray]:
        """Pixels where the inside / outside fit rests on negligible mass."""
        return self.mass_in < threshold, self.mass_out < threshold

    def blend(self, h: np.ndarray) -> np.ndarray:
        return self.inside * h + self.outside * (1.0 - h)


def _fit(field, m1, m2, km1, km2, kernel) -> FitPair:
    inside = convolve(m1 * field, kernel) / (km1 + DIV_GUARD)
    outside = convolve(m2 * field, kernel) / (km2 + DIV_GUARD)
    return FitPair(inside, outside, km1, km2)


def _memberships(phi, kernel, epsilon):
    m1 = heaviside(phi, epsilon)
    m2 = 1.0 - m1
    return m1, m2, convolve(m1, kernel), convolve(m2, kernel)


def fit_pair(field, phi, kernel: GaussianKernel, epsilon: float = 1.0) -> FitPair:
    """Local inside/outside fitted maps ``K*(M f) / (K*M + guard)``."""
    f = as_field(field)
    phi = np.asarray(phi, dtype=np.float64)
    if f.shape != phi.shape:
        raise ValueError(f"field shape {f.shape} does not match level set shape {phi.shape}")
    return _fit(f, *_memberships(phi, kernel, epsilon), kernel)


def feature_fit_pairs(
    features: FeatureStack, phi, kernel: GaussianKernel, epsilon: float = 1.0
) -> tuple[FitPair, FitPair, FitPair]:
    """Fits of the entropy, std and gradient maps, in that order."""
    phi = np.asarray(phi, dtype=np.float64)
    if features.shape != phi.shape:
        raise ValueError(f"feature shape {features.shape} does not match level set shape {phi.shape}")
    mem = _memberships(phi, kernel, epsilon)
    return tuple(_fit(f, *mem, kernel) for f in (features.entropy, features.std, features.grad))
