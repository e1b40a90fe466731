"""Signed pressure force assembly: global term, feature-driven local term, blend."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from mfspf.features import FeatureStack, as_field
from mfspf.fitting import FitPair, global_means, heaviside

ZERO_GUARD = 1e-12


@dataclass(frozen=True, eq=False)
class SpfField:
    """Signed pressure values.

    ``vanished`` is set when normalization found nothing to normalize
    (the force is zero everywhere, a convergence candidate).
    ``degenerate`` is set when one of the global regions had no mass.
    """

    values: np.ndarray
    normalized: bool = False
    vanished: bool = False
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class WeightMap:
    values: np.ndarray


def normalize(values: np.ndarray, degenerate: bool = False) -> SpfField:
    """Scale by the max absolute value into [-1, 1]; near-zero fields become exactly zero."""
    peak = float(np.max(np.abs(values)))
    if peak < ZERO_GUARD:
        return SpfField(np.zeros_like(values), normalized=True, vanished=True, degenerate=degenerate)
    return SpfField(values / peak, normalized=True, degenerate=degenerate)


def global_spf(img, phi, epsilon: float = 1.0) -> SpfField:
    """Image minus its two-mean fitting image ``c1 H + c2 (1 - H)``."""
    I = as_field(img)
    c1, c2, degenerate = global_means(I, phi, epsilon)
    h = heaviside(phi, epsilon)
    return SpfField(I - (c1 * h + c2 * (1.0 - h)), degenerate=degenerate)


def local_spf(
    features: FeatureStack,
    fits: tuple[FitPair, FitPair, FitPair],
    phi,
    epsilon: float = 1.0,
    scales: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> SpfField:
    """Sum over entropy, std and gradient of (feature - fitted feature image).

    ``scales`` multiplies each feature's term; all ones gives the plain sum.
    """
    h = heaviside(phi, epsilon)
    total = np.zeros(features.shape, dtype=np.float64)
    maps = (features.entropy, features.std, features.grad)
    for fmap, pair, scale in zip(maps, fits, scales):
        term = fmap - pair.blend(h)
        total += term if scale == 1.0 else scale * term
    return SpfField(total)


def adaptive_weight(range_map, lam: float) -> WeightMap:
    """Per-pixel global weight ``1 / (1 + lam * range)``."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    r = np.asarray(range_map, dtype=np.float64)
    if np.any(r < 0):
        raise ValueError("range map must be non-negative")
    return WeightMap(1.0 / (1.0 + lam * r))


def blend(global_term: SpfField, local_term: SpfField, weights: WeightMap) -> np.ndarray:
    w = weights.values
    return w * global_term.values + (1.0 - w) * local_term.values


def total_spf(global_term: SpfField, local_term: SpfField, weights: WeightMap) -> SpfField:
    """Weighted blend of the global and local terms, normalized to [-1, 1]."""
    if not (global_term.values.shape == local_term.values.shape == weights.values.shape):
        raise ValueError("global term, local term and weights must share a shape")
    return normalize(blend(global_term, local_term, weights), degenerate=global_term.degenerate)
