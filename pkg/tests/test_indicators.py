import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from divopt.errors import IndicatorDomainError, UnsupportedDimensionError
from divopt.features import dimension_double
from divopt.indicators import (
    MAXIMIZE,
    MINIMIZE,
    EpsSequence,
    IndicatorSpec,
    all_scores,
    eps_compare,
    eps_sequence,
    evaluate_indicator,
    hypervolume,
    hypervolume_oracle_ie,
    hypervolume_oracle_mc,
    igd,
    make_indicator,
    removal_values,
    star_discrepancy,
    star_discrepancy_scan,
)
from divopt.refsets import grid

unit = st.floats(0.0, 1.0, allow_nan=False)


def point_sets(max_n=8, d=None):
    dims = st.just(d) if d else st.sampled_from([2, 3, 4])
    return dims.flatmap(
        lambda k: st.integers(1, max_n).flatmap(lambda n: arrays(float, (n, k), elements=unit))
    )


# ---------------------------------------------------------------- hypervolume


def test_hypervolume_examples():
    assert hypervolume([[1, 2], [2, 1]], [0, 0], MAXIMIZE) == 3.0
    single = dimension_double([[0.25, 0.75]])
    assert hypervolume(single, [2, 2, 1, 1]) == 4.78515625
    two = dimension_double([[0, 1], [1, 0]])
    assert hypervolume(two, [2, 2, 1, 1]) == 7.0
    assert hypervolume_oracle_ie(two, [2, 2, 1, 1]) == 7.0
    assert hypervolume_oracle_ie(single, [2, 2, 1, 1]) == 4.78515625


def test_hypervolume_one_objective():
    assert hypervolume([[0.3], [0.6]], [1.0]) == pytest.approx(0.7)


def test_hypervolume_rejects_points_not_dominating_reference():
    with pytest.raises(IndicatorDomainError, match="coordinate"):
        hypervolume([[0.5, 1.0]], [1.0, 1.0])
    with pytest.raises(IndicatorDomainError):
        hypervolume([[0.5, 0.5, 0.5]], [1.0, 1.0])


@given(point_sets())
def test_hypervolume_matches_inclusion_exclusion(pts):
    ref = np.full(pts.shape[1], 1.5)
    assert hypervolume(pts, ref) == pytest.approx(hypervolume_oracle_ie(pts, ref), abs=1e-9)


@given(point_sets(max_n=7), st.randoms(use_true_random=False))
def test_hypervolume_permutation_and_duplicate_invariant(pts, rnd):
    ref = np.full(pts.shape[1], 1.2)
    base = hypervolume(pts, ref)
    order = list(range(len(pts)))
    rnd.shuffle(order)
    assert hypervolume(pts[order], ref) == base
    assert hypervolume(np.vstack([pts, pts[:1]]), ref) == base


@given(point_sets(max_n=6), arrays(float, 4, elements=unit))
def test_hypervolume_monotone_under_insertion(pts, extra):
    pts = np.hstack([pts, np.zeros((len(pts), 4 - pts.shape[1]))]) if pts.shape[1] < 4 else pts
    ref = np.full(4, 1.1)
    assert hypervolume(np.vstack([pts, extra]), ref) >= hypervolume(pts, ref) - 1e-12


def test_hypervolume_monte_carlo_agreement():
    rng = np.random.default_rng(0)
    pts = rng.random((20, 6))
    ref = np.full(6, 1.0 + 1e-6)
    exact = hypervolume(pts, ref)
    mc = hypervolume_oracle_mc(pts, ref, samples=400_000, seed=1)
    assert abs(mc - exact) / exact < 0.02
    one = [[0.2, 0.4, 0.1]]
    assert hypervolume_oracle_mc(one, [1, 1, 1], samples=100_000) == pytest.approx(hypervolume(one, [1, 1, 1]))


# ------------------------------------------------------------------------ IGD


def test_igd_examples():
    assert igd([[0, 0], [1, 1]], [[0, 0]]) == pytest.approx(math.sqrt(2) / 2, abs=1e-12)
    R = grid(2, 3).points
    expected = (4 * math.sqrt(2) / 2 + 4 * 0.5) / 9
    assert igd(R, [[0.5, 0.5]]) == pytest.approx(expected, abs=1e-12)
    assert igd(R, R) == 0.0


def test_igd_rejects_empty_or_mismatched():
    with pytest.raises(IndicatorDomainError):
        igd([[0, 0]], np.empty((0, 2)))
    with pytest.raises(IndicatorDomainError):
        igd([[0, 0]], [[0, 0, 0]])


@given(point_sets(max_n=10, d=2), point_sets(max_n=6, d=2), arrays(float, 2, elements=unit))
def test_igd_adding_a_point_never_increases(R, S, extra):
    assert igd(R, np.vstack([S, extra])) <= igd(R, S)


@given(point_sets(max_n=10, d=2), point_sets(max_n=6, d=2))
def test_igd_zero_iff_exact_matches(R, S):
    val = igd(R, S)
    covered = all(any(np.array_equal(r, s) for s in S) for r in R)
    assert (val == 0.0) == covered
    assert igd(R[::-1], S[::-1]) == pytest.approx(val, abs=1e-15)


# ------------------------------------------------------------------------ EPS


def test_eps_examples():
    assert eps_sequence([[0, 0], [1, 1]], [[0.5, 0.5]]).values.tolist() == [0.5, -0.5]
    R = np.array([[0, 1], [0.5, 0.5], [1, 0]])
    assert np.all(eps_sequence(R, R).values == 0)


def test_eps_compare_examples():
    a, b = EpsSequence([0.5, -0.5]), EpsSequence([0.5, -0.4])
    assert eps_compare(a, b) == -1 and a < b
    assert eps_compare(a, EpsSequence([0.5, -0.5])) == 0
    assert eps_compare(EpsSequence([0.4, 0.3]), EpsSequence([0.5, -1.0])) == -1
    with pytest.raises(IndicatorDomainError):
        eps_compare(a, EpsSequence([0.1]))


def test_eps_triple_loop_oracle():
    rng = np.random.default_rng(3)
    R, S = rng.random((3, 2)), rng.random((5, 2))
    naive = sorted(
        (min(max(s[i] - r[i] for i in range(2)) for s in S) for r in R), reverse=True
    )
    assert eps_sequence(R, S).values.tolist() == naive


@given(point_sets(max_n=8, d=2), point_sets(max_n=5, d=2), arrays(float, 2, elements=unit))
def test_eps_sequence_sorted_and_insertion_never_worse(R, S, extra):
    seq = eps_sequence(R, S)
    assert np.all(np.diff(seq.values) <= 0)
    alpha = max(min(max(s[i] - r[i] for i in range(2)) for s in S) for r in R)
    assert seq.first == alpha
    assert eps_compare(eps_sequence(R, np.vstack([S, extra])), seq) <= 0


# ----------------------------------------------------------- star discrepancy


def test_star_discrepancy_examples():
    assert star_discrepancy([[0.0, 0.0]]) == 1.0
    assert star_discrepancy([[0.5, 0.5]]) == 0.75


def test_star_discrepancy_hand_placed_points():
    pts = np.array(
        [[0.0, 0.0], [0.5, 0.5], [0.75, 0.25], [0.25, 0.75],
         [0.375, 0.375], [0.875, 0.875], [0.625, 0.125], [0.125, 0.625]]
    )
    exact = star_discrepancy(pts)
    scan = star_discrepancy_scan(pts, 400)
    assert 0 <= exact - scan <= 2 / 399


def test_star_discrepancy_regular_grid_against_scan():
    pts = grid(2, 11).points
    exact = star_discrepancy(pts)
    assert 0 <= exact - star_discrepancy_scan(pts, 400) <= 2 / 399


def test_star_discrepancy_domain_errors():
    with pytest.raises(IndicatorDomainError):
        star_discrepancy([[1.5, 0.2]])
    with pytest.raises(UnsupportedDimensionError):
        star_discrepancy(np.full((2, 4), 0.5))


@given(point_sets(max_n=12, d=2), st.randoms(use_true_random=False))
def test_star_discrepancy_bounded_and_permutation_invariant(pts, rnd):
    val = star_discrepancy(pts)
    assert 0.0 <= val <= 1.0
    order = list(range(len(pts)))
    rnd.shuffle(order)
    assert star_discrepancy(pts[order]) == val


def _discrepancy_by_definition(pts):
    # every corner built from point coordinates and 1, evaluated box by box
    n, d = pts.shape
    axes = [sorted(set(pts[:, k]) | {1.0}) for k in range(d)]
    best = 0.0
    for q in itertools.product(*axes):
        vol = float(np.prod(q))
        closed = np.sum(np.all(pts <= q, axis=1))
        opened = np.sum(np.all(pts < q, axis=1))
        best = max(best, closed / n - vol, vol - opened / n)
    return best


@given(point_sets(max_n=8, d=3))
def test_star_discrepancy_matches_corner_enumeration(pts):
    assert star_discrepancy(pts) == pytest.approx(_discrepancy_by_definition(pts), abs=1e-12)


# ------------------------------------------------------------ indicator specs


def test_spec_wiring():
    assert make_indicator("HYP2D", 2).transform == "plane-embed"
    assert make_indicator("HYP", 3).reference.tolist() == [2, 2, 2, 1, 1, 1]
    assert make_indicator("IGD", 3).reference.shape == (1331, 3)
    assert make_indicator("EPS", 2).reference.shape == (10_201, 3)
    assert make_indicator("DIS", 2).reference is None
    with pytest.raises(UnsupportedDimensionError):
        make_indicator("HYP2D", 3)
    with pytest.raises(Exception):
        IndicatorSpec("IGD", MAXIMIZE, "identity", grid(2, 3).points, 2)


def test_evaluate_indicator_examples():
    g = grid(2, 101).points
    assert evaluate_indicator(make_indicator("IGD", 2), g) == 0.0
    assert evaluate_indicator(make_indicator("HYP", 2), [[0.25, 0.75]]) == 4.78515625
    rng = np.random.default_rng(1)
    pts = rng.random((7, 2))
    assert evaluate_indicator(make_indicator("DIS", 2), pts) == star_discrepancy(pts)
    hyp2d = make_indicator("HYP2D", 2)
    assert evaluate_indicator(hyp2d, pts) > evaluate_indicator(hyp2d, pts[:3]) > 0


def test_removal_example():
    R = np.array([[0, 0], [0.5, 0.5], [1, 1]])
    spec = IndicatorSpec("IGD", MINIMIZE, "identity", R, 2)
    feats = np.array([[0, 0], [1, 1], [0.5, 0.45]])
    vals = removal_values(spec, feats)
    d0 = math.hypot(0.5, 0.45)
    d1 = math.hypot(0.5, 0.55)
    expected = [(d0 + 0.05) / 3, (d1 + 0.05) / 3, math.sqrt(2) / 2 / 3]
    assert vals == pytest.approx(expected, abs=1e-15)
    assert int(np.argmin(vals)) == 2


@pytest.mark.parametrize("kind", ["IGD", "EPS", "HYP", "DIS"])
def test_removal_values_equal_fresh_evaluation(kind):
    rng = np.random.default_rng(5)
    spec = make_indicator(kind, 2, grid_k=21)
    feats = rng.random((9, 2))
    fast = removal_values(spec, feats)
    for j, v in enumerate(fast):
        fresh = evaluate_indicator(spec, np.delete(feats, j, axis=0))
        assert (v == fresh) if kind != "EPS" else (eps_compare(v, fresh) == 0)


def test_all_scores_keys():
    rng = np.random.default_rng(2)
    assert list(all_scores(rng.random((5, 2)))) == ["HYP2D", "HYP", "IGD", "EPS", "DIS"]
    assert list(all_scores(rng.random((5, 3)))) == ["HYP", "IGD", "DIS"]
    assert all_scores([[0.25, 0.75]])["HYP"] == 4.78515625
