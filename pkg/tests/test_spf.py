import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mfspf import (
    FeatureStack,
    GrayImage,
    SpfField,
    WeightMap,
    adaptive_weight,
    build_kernel,
    feature_fit_pairs,
    global_spf,
    local_spf,
    total_spf,
)
from mfspf.spf import blend, normalize


def test_global_spf_uniform_is_zero(rng):
    out = global_spf(GrayImage(np.full((16, 16), 0.37)), rng.normal(0, 1, (16, 16)), 1.0)
    assert np.max(np.abs(out.values)) <= 1e-15
    assert not out.normalized


def test_global_spf_sharp_two_level():
    img = np.full((40, 40), 0.2)
    img[12:28, 12:28] = 0.8
    phi = np.where(img > 0.5, 1e6, -1e6)
    out = global_spf(GrayImage(img), phi, 1.0)
    assert np.max(np.abs(out.values)) <= 1e-2


def test_global_spf_oracle(rng):
    img = rng.random((24, 24))
    phi = rng.normal(0, 2, (24, 24))
    c1, c2 = oracles.global_means(img, phi, 0.5)
    h = np.vectorize(lambda p: oracles.heaviside(p, 0.5))(phi)
    expect = img - (c1 * h + c2 * (1 - h))
    assert np.max(np.abs(global_spf(GrayImage(img), phi, 0.5).values - expect)) <= 1e-12


def _fits(fs, phi, sigma=2.0, eps=1.0):
    return feature_fit_pairs(fs, phi, build_kernel(sigma), eps)


def test_local_spf_constant_maps(rng):
    shape = (24, 24)
    fs = FeatureStack(np.full(shape, 2.0), np.full(shape, 0.3), np.full(shape, 0.1), np.zeros(shape))
    phi = rng.normal(0, 1, shape)
    out = local_spf(fs, _fits(fs, phi), phi, 1.0)
    assert np.max(np.abs(out.values)) <= 1e-9


def test_local_spf_single_feature(rng):
    shape = (24, 24)
    z = np.zeros(shape)
    ent = rng.random(shape) * 4
    fs = FeatureStack(ent, z, z, z)
    phi = rng.normal(0, 1, shape)
    fits = _fits(fs, phi)
    h = np.vectorize(lambda p: oracles.heaviside(p, 1.0))(phi)
    lone = ent - (fits[0].inside * h + fits[0].outside * (1 - h))
    assert np.max(np.abs(local_spf(fs, fits, phi, 1.0).values - lone)) <= 1e-12


def test_local_spf_oracle(rng):
    shape = (20, 20)
    maps = [rng.random(shape) * 5, rng.random(shape) * 0.5, rng.random(shape)]
    fs = FeatureStack(*maps, rng.random(shape))
    phi = rng.normal(0, 1.5, shape)
    h = np.vectorize(lambda p: oracles.heaviside(p, 0.7))(phi)
    expect = np.zeros(shape)
    for fmap in maps:
        fin, fout = oracles.fit_pair(fmap, phi, 2.0, 0.7)
        expect += fmap - (np.array(fin) * h + np.array(fout) * (1 - h))
    got = local_spf(fs, _fits(fs, phi, 2.0, 0.7), phi, 0.7).values
    assert np.max(np.abs(got - expect)) <= 1e-10


def test_local_spf_feature_scales(rng):
    shape = (16, 16)
    fs = FeatureStack(rng.random(shape), rng.random(shape), rng.random(shape), rng.random(shape))
    phi = rng.normal(0, 1, shape)
    fits = _fits(fs, phi)
    parts = [local_spf(fs, fits, phi, 1.0, s).values for s in ((1, 0, 0), (0, 1, 0), (0, 0, 1))]
    scaled = local_spf(fs, fits, phi, 1.0, (2.0, 0.5, 3.0)).values
    assert np.allclose(scaled, 2 * parts[0] + 0.5 * parts[1] + 3 * parts[2], atol=1e-12)


def test_adaptive_weight_examples():
    assert adaptive_weight(np.zeros((3, 3)), 2.0).values.tolist() == [[1.0] * 3] * 3
    assert adaptive_weight(np.full((3, 3), 2.0), 0.5).values[1, 1] == 0.5
    r = np.random.default_rng(1).random((5, 5)) * 10
    assert np.all(adaptive_weight(r, 0.0).values == 1.0)


def test_adaptive_weight_errors():
    with pytest.raises(ValueError):
        adaptive_weight(np.zeros((3, 3)), -0.1)
    with pytest.raises(ValueError):
        adaptive_weight(np.full((3, 3), -1.0), 0.5)


def test_adaptive_weight_in_unit_interval(rng):
    w = adaptive_weight(rng.random((30, 30)), 3.0).values
    assert np.all(w > 0) and np.all(w <= 1)


@settings(max_examples=300)
@given(st.floats(1e-3, 10), st.floats(0, 1), st.floats(1e-3, 1))
def test_weight_decreasing_in_range(lam, r, gap):
    w = adaptive_weight(np.array([r, r + gap]), lam).values
    assert w[1] < w[0]


@settings(max_examples=300)
@given(st.floats(1e-3, 1), st.floats(0, 10), st.floats(1e-3, 10))
def test_weight_decreasing_in_lambda(r, lam, gap):
    assert adaptive_weight(np.array([r]), lam + gap).values[0] < adaptive_weight(np.array([r]), lam).values[0]


def test_total_spf_pure_global(rng):
    g = SpfField(rng.normal(0, 1, (12, 12)))
    loc = SpfField(rng.normal(0, 5, (12, 12)))
    out = total_spf(g, loc, WeightMap(np.ones((12, 12))))
    assert np.array_equal(out.values, normalize(g.values).values)


def test_total_spf_cancellation():
    out = total_spf(SpfField(np.full((8, 8), 0.2)), SpfField(np.full((8, 8), -0.2)), WeightMap(np.full((8, 8), 0.5)))
    assert out.vanished and np.all(out.values == 0)


def test_total_spf_unit_peak(rng):
    for _ in range(20):
        out = total_spf(SpfField(rng.normal(0, 1, (10, 10))), SpfField(rng.normal(0, 1, (10, 10))),
                        WeightMap(rng.random((10, 10))))
        assert abs(np.max(np.abs(out.values)) - 1.0) <= 1e-12


def test_total_spf_shape_mismatch():
    with pytest.raises(ValueError):
        total_spf(SpfField(np.zeros((4, 4))), SpfField(np.zeros((4, 5))), WeightMap(np.ones((4, 4))))


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_total_spf_properties(seed, scale):
    r = np.random.default_rng(seed)
    g, loc = r.normal(0, 1, (8, 8)), r.normal(0, 1, (8, 8))
    w = WeightMap(r.random((8, 8)))
    raw = blend(SpfField(g), SpfField(loc), w)
    # pointwise between the two terms
    assert np.all(raw >= np.minimum(g, loc) - 1e-15) and np.all(raw <= np.maximum(g, loc) + 1e-15)
    out = total_spf(SpfField(g), SpfField(loc), w).values
    assert np.array_equal(np.sign(out), np.sign(raw))
    scaled = total_spf(SpfField(g * scale), SpfField(loc * scale), w).values
    assert np.max(np.abs(scaled - out)) <= 1e-12
