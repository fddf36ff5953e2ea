import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from divopt.errors import ConfigurationError, UnsupportedDimensionError
from divopt.features import (
    DEFAULT_EMBEDDING,
    SQRT2_4,
    FeatureBounds,
    derive_reference_point,
    dimension_double,
    normalize,
    plane_embed,
    weakly_dominates,
)
from divopt.refsets import grid, transform_refset
from divopt.tsp import default_bounds

unit = st.floats(0.0, 1.0, allow_nan=False)
pair = arrays(float, 2, elements=unit)


def test_normalize_examples():
    b = default_bounds(["f2", "f4"])
    out = normalize([0.47, 0.20], b)
    assert out[0] == pytest.approx(0.5, abs=1e-15)
    assert out[1] == 1.0
    assert normalize([0.24, 0.06], b).tolist() == [0.0, 0.0]


def test_normalize_clamps_below():
    assert normalize([-3.0, 0.5], FeatureBounds.unit(2)).tolist() == [0.0, 0.5]


@given(arrays(float, 3, elements=unit))
def test_normalize_idempotent_on_unit_bounds(x):
    b = FeatureBounds.unit(3)
    once = normalize(x, b)
    np.testing.assert_array_equal(once, x)
    np.testing.assert_array_equal(normalize(once, b), once)


@given(arrays(float, 2, elements=st.floats(-10, 10)))
def test_normalize_always_in_unit_interval(x):
    out = normalize(x, default_bounds(["f1", "f3"]))
    assert np.all((out >= 0) & (out <= 1))


def test_bounds_validation():
    with pytest.raises(ConfigurationError):
        FeatureBounds((1.0,), (1.0,))
    with pytest.raises(ConfigurationError):
        FeatureBounds((0.0, 0.0), (1.0,))
    with pytest.raises(ConfigurationError):
        normalize([0.1, 0.2, 0.3], FeatureBounds.unit(2))


def test_embedding_basis_orthonormal():
    u, v = DEFAULT_EMBEDDING.basis_u, DEFAULT_EMBEDDING.basis_v
    one = np.ones(3)
    for val in (u @ u - 1, v @ v - 1, u @ v, u @ one, v @ one):
        assert abs(val) <= 1e-12
    # the centre is a multiple of (1, 1, 1): its normal line hits the origin
    c = DEFAULT_EMBEDDING.center
    np.testing.assert_allclose(np.cross(c, one), 0, atol=1e-15)


def test_plane_embed_centre_and_origin_corner():
    np.testing.assert_allclose(plane_embed([0.5, 0.5]), [SQRT2_4] * 3, atol=1e-12)
    # centre - 0.5 u - 0.5 v, computed by hand from the basis vectors
    r2, r6 = math.sqrt(2), math.sqrt(6)
    expected = [
        SQRT2_4 - 0.5 / r2 - 0.5 / r6,
        SQRT2_4 + 0.5 / r2 - 0.5 / r6,
        SQRT2_4 + 1.0 / r6,
    ]
    img = plane_embed([0.0, 0.0])
    np.testing.assert_allclose(img, expected, atol=1e-12)
    np.testing.assert_allclose(img, [-0.2041241452, 0.5029826360, 0.7618016811], atol=1e-9)
    assert img.sum() == pytest.approx(3 * math.sqrt(2) / 4, abs=1e-12)


@given(pair, pair)
def test_plane_embed_isometric_and_non_dominated(a, b):
    ea, eb = plane_embed(a), plane_embed(b)
    assert np.linalg.norm(ea - eb) == pytest.approx(np.linalg.norm(a - b), abs=1e-9)
    assert ea.sum() == pytest.approx(3 * math.sqrt(2) / 4, abs=1e-9)
    if np.any(a != b) and np.linalg.norm(a - b) > 1e-12:
        assert not weakly_dominates(ea, eb) and not weakly_dominates(eb, ea)
        assert not weakly_dominates(ea, eb, True) and not weakly_dominates(eb, ea, True)


def test_plane_embed_rejects_other_dimensions():
    with pytest.raises(UnsupportedDimensionError):
        plane_embed([0.1, 0.2, 0.3])


def test_dimension_double_examples():
    assert dimension_double([0.25, 0.75]).tolist() == [0.25, 0.75, -0.25, -0.75]
    assert np.all(dimension_double([0.0, 0.0]) == 0)
    a, b = dimension_double([0, 1]), dimension_double([1, 0])
    assert a.tolist() == [0, 1, 0, -1] and b.tolist() == [1, 0, -1, 0]
    assert not weakly_dominates(a, b) and not weakly_dominates(b, a)


@given(arrays(float, 3, elements=unit), arrays(float, 3, elements=unit))
def test_dimension_double_injective_non_dominated(a, b):
    da, db = dimension_double(a), dimension_double(b)
    np.testing.assert_array_equal(da[:3], a)
    if np.any(a != b):
        assert np.any(da != db)
        assert not weakly_dominates(da, db) and not weakly_dominates(db, da)


def test_derive_reference_point_examples():
    emb = transform_refset(grid(2, 11), "plane-embed").points
    assert emb.shape == (121, 3)
    oracle = np.array([min(row[k] for row in emb) for k in range(3)]) - 1e-6
    np.testing.assert_array_equal(derive_reference_point(emb), oracle)
    q = np.array([[0.3, 0.4, 0.5]])
    np.testing.assert_allclose(derive_reference_point(q), q[0] - 1e-6, atol=0)
    assert derive_reference_point([[1, 2, 3], [3, 2, 1]], margin=0).tolist() == [1, 2, 1]


@given(arrays(float, (5, 3), elements=st.floats(-5, 5)), st.floats(0, 1))
def test_reference_point_weakly_dominated_by_all(refset, margin):
    r = derive_reference_point(refset, margin)
    for p in refset:
        assert weakly_dominates(p, r, maximize=True)
