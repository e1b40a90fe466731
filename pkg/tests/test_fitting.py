import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mfspf import (
    FeatureStack,
    GrayImage,
    build_kernel,
    convolve,
    feature_fit_pairs,
    fit_pair,
    global_means,
    heaviside,
)
from mfspf.fitting import MASS_GUARD


def test_heaviside_values():
    assert heaviside(0.0, 1.0) == 0.5
    for eps in (0.3, 1.0, 2.5):
        assert heaviside(eps, eps) == pytest.approx(0.75, abs=1e-15)
        assert heaviside(-eps, eps) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("eps", [0.0, -1.0])
def test_heaviside_rejects_bad_epsilon(eps):
    with pytest.raises(ValueError):
        heaviside(1.0, eps)


@settings(max_examples=200)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 10))
def test_heaviside_complement(phi, eps):
    assert abs(heaviside(phi, eps) + heaviside(-phi, eps) - 1.0) <= 1e-15


@settings(max_examples=200)
@given(st.floats(-20, 20), st.floats(1e-3, 20), st.floats(0.1, 10))
def test_heaviside_monotone(a, gap, eps):
    assert heaviside(a, eps) < heaviside(a + gap, eps)


def test_kernel_sigma3():
    k = build_kernel(3.0)
    assert k.radius == 6 and k.weights.shape == (13, 13)
    assert abs(k.weights.sum() - 1.0) <= 1e-12
    w = k.weights
    assert w[6, 6] == w.max()
    assert np.array_equal(w, w.T)
    assert np.array_equal(w, w[::-1]) and np.array_equal(w, w[:, ::-1])


def test_kernel_matches_oracle_weights():
    for sigma in (0.7, 1.0, 3.0):
        assert np.allclose(build_kernel(sigma).weights, oracles.gaussian_weights(sigma), atol=1e-15)


def test_kernel_rejects_bad_sigma():
    with pytest.raises(ValueError):
        build_kernel(0.0)


def test_convolve_constant_fixed_point():
    out = convolve(np.full((20, 25), 0.42), build_kernel(3.0))
    assert np.max(np.abs(out - 0.42)) <= 1e-12


def test_convolve_impulse_response():
    k = build_kernel(1.5)
    f = np.zeros((21, 21))
    f[10, 10] = 1.0
    out = convolve(f, k)
    r = k.radius
    assert np.allclose(out[10 - r:11 + r, 10 - r:11 + r], k.weights, atol=1e-15)
    assert out.sum() == pytest.approx(1.0, abs=1e-12)


def test_convolve_matches_oracle(rng):
    f = rng.random((32, 32))
    k = build_kernel(3.0)
    assert np.max(np.abs(convolve(f, k) - oracles.convolve(f, oracles.gaussian_weights(3.0)))) <= 1e-10


def test_convolve_kernel_too_large():
    with pytest.raises(ValueError):
        convolve(np.zeros((10, 40)), build_kernel(3.0))


def test_convolve_linear(rng):
    x, y = rng.random((24, 24)), rng.random((24, 24))
    k = build_kernel(2.0)
    lhs = convolve(2.5 * x - 0.7 * y, k)
    rhs = 2.5 * convolve(x, k) - 0.7 * convolve(y, k)
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


def test_global_means_uniform():
    c1, c2, deg = global_means(GrayImage(np.full((10, 10), 0.6)), np.linspace(-3, 3, 100).reshape(10, 10))
    assert c1 == pytest.approx(0.6, abs=1e-15) and c2 == pytest.approx(0.6, abs=1e-15)
    assert not deg


def test_global_means_sharp_two_level():
    img = np.full((40, 40), 0.2)
    img[10:30, 10:30] = 0.8
    phi = np.where(img > 0.5, 1e6, -1e6)
    c1, c2, _ = global_means(GrayImage(img), phi, epsilon=1.0)
    assert c1 == pytest.approx(0.8, abs=1e-3)
    assert c2 == pytest.approx(0.2, abs=1e-3)


def test_global_means_oracle(rng):
    img = rng.random((32, 32))
    phi = rng.normal(0, 2, (32, 32))
    c1, c2, _ = global_means(GrayImage(img), phi, 0.7)
    o1, o2 = oracles.global_means(img, phi, 0.7)
    assert abs(c1 - o1) <= 1e-12 and abs(c2 - o2) <= 1e-12


def test_global_means_degenerate_region():
    img = np.linspace(0, 1, 64).reshape(8, 8)
    c1, c2, deg = global_means(GrayImage(img), np.full((8, 8), 1e12), 1.0)
    assert deg
    assert c2 == pytest.approx(img.mean())
    assert c1 == pytest.approx(img.mean(), abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 3))
def test_global_means_within_range(seed, eps):
    r = np.random.default_rng(seed)
    img = r.random((9, 9))
    phi = r.normal(0, 3, (9, 9))
    c1, c2, deg = global_means(GrayImage(img), phi, eps)
    assert not deg
    assert img.min() - 1e-12 <= c1 <= img.max() + 1e-12
    assert img.min() - 1e-12 <= c2 <= img.max() + 1e-12


def test_fit_pair_constant_field(rng):
    phi = rng.normal(0, 1, (20, 20))
    fp = fit_pair(np.full((20, 20), 0.3), phi, build_kernel(3.0), 1.0)
    assert np.max(np.abs(fp.inside - 0.3)) <= 1e-9
    assert np.max(np.abs(fp.outside - 0.3)) <= 1e-9


def test_fit_pair_all_inside(rng):
    field = rng.random((20, 20))
    k = build_kernel(2.0)
    fp = fit_pair(field, np.full((20, 20), 1e15), k, 1.0)
    assert np.allclose(fp.inside, convolve(field, k), atol=1e-12)
    low_in, low_out = fp.low_mass()
    assert not low_in.any() and low_out.all()
    assert np.all(np.isfinite(fp.outside))


def test_fit_pair_oracle(rng):
    field = rng.random((32, 32))
    phi = rng.normal(0, 1.5, (32, 32))
    fp = fit_pair(field, phi, build_kernel(3.0), 0.8)
    oin, oout = oracles.fit_pair(field, phi, 3.0, 0.8)
    assert np.max(np.abs(fp.inside - oin)) <= 1e-10
    assert np.max(np.abs(fp.outside - oout)) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_fit_pair_within_field_range(seed):
    r = np.random.default_rng(seed)
    field = r.random((16, 16))
    phi = r.normal(0, 2, (16, 16))
    fp = fit_pair(field, phi, build_kernel(1.5), 0.5)
    for fit, mass in ((fp.inside, fp.mass_in), (fp.outside, fp.mass_out)):
        ok = mass > 1e-6
        assert np.all(fit[ok] >= field.min() - 1e-9) and np.all(fit[ok] <= field.max() + 1e-9)


def _stack(rng, shape=(32, 32)):
    return FeatureStack(rng.random(shape) * 6, rng.random(shape) * 0.4, rng.random(shape), rng.random(shape))


def test_feature_fit_pairs_match_single_calls(rng):
    fs = _stack(rng)
    phi = rng.normal(0, 1, fs.shape)
    k = build_kernel(3.0)
    pairs = feature_fit_pairs(fs, phi, k, 1.0)
    for pair, fmap in zip(pairs, (fs.entropy, fs.std, fs.grad)):
        single = fit_pair(fmap, phi, k, 1.0)
        assert np.array_equal(pair.inside, single.inside)
        assert np.array_equal(pair.outside, single.outside)


def test_feature_fit_pairs_constant_maps(rng):
    shape = (20, 20)
    fs = FeatureStack(np.full(shape, 3.0), np.full(shape, 0.1), np.full(shape, 0.05), np.zeros(shape))
    pairs = feature_fit_pairs(fs, rng.normal(0, 1, shape), build_kernel(2.0), 1.0)
    for pair, c in zip(pairs, (3.0, 0.1, 0.05)):
        assert np.max(np.abs(pair.inside - c)) <= 1e-9 * max(1, c) * 10
        assert np.max(np.abs(pair.outside - c)) <= 1e-9 * max(1, c) * 10


def test_feature_fit_pairs_oracle(rng):
    fs = _stack(rng)
    phi = rng.normal(0, 1, fs.shape)
    pairs = feature_fit_pairs(fs, phi, build_kernel(3.0), 1.0)
    for pair, fmap in zip(pairs, (fs.entropy, fs.std, fs.grad)):
        oin, oout = oracles.fit_pair(fmap, phi, 3.0, 1.0)
        assert np.max(np.abs(pair.inside - oin)) <= 1e-10
        assert np.max(np.abs(pair.outside - oout)) <= 1e-10


def test_shape_mismatch():
    with pytest.raises(ValueError):
        fit_pair(np.zeros((10, 10)), np.zeros((10, 11)), build_kernel(1.0))
    with pytest.raises(ValueError):
        global_means(np.zeros((10, 10)), np.zeros((11, 10)))
