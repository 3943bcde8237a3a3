import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasepat.cluster import (
    ClusteringResult,
    CutPolicy,
    Dendrogram,
    Merge,
    agglomerate,
    agglomerate_matrix,
    average_link_distance,
    choose_k,
    cut,
    flat_labels,
    manhattan,
    manhattan_matrix,
)
from phasepat.errors import ConfigError, InputError
from phasepat.features import FeatureVector

from oracles import manhattan_loop, naive_average_linkage


def features(points):
    return [FeatureVector(f"f{i}", np.asarray(p, dtype=float), 1.0, (1.0,) * 4) for i, p in enumerate(points)]


def partition(labels):
    groups = {}
    for i, c in enumerate(labels):
        groups.setdefault(int(c), set()).add(i)
    return frozenset(frozenset(g) for g in groups.values())


def test_manhattan_examples():
    assert manhattan([1, 2], [1, 2]) == 0
    assert manhattan([1, 2], [3, 5]) == 5
    with pytest.raises(ValueError):
        manhattan([1], [1, 2])


@pytest.mark.parametrize("seed", range(5))
def test_manhattan_matches_loop_oracle(seed):
    rng = np.random.default_rng(seed)
    p, q = rng.normal(size=(2, 17))
    assert manhattan(p, q) == pytest.approx(manhattan_loop(p, q), rel=1e-15)


def test_manhattan_matrix_symmetric():
    x = np.random.default_rng(0).normal(size=(30, 5))
    m = manhattan_matrix(x, block=7)
    assert np.array_equal(m, m.T)
    assert m[3, 11] == pytest.approx(manhattan_loop(x[3], x[11]))


def test_average_link_examples():
    d = {("x", "y"): 2.0, ("x", "z"): 4.0}
    assert average_link_distance({"x"}, {"y"}, d) == 2.0
    assert average_link_distance({"x"}, {"y", "z"}, d) == 3.0
    with pytest.raises(ValueError):
        average_link_distance(set(), {"y"}, d)


@pytest.mark.parametrize("seed", range(5))
def test_average_link_matches_double_loop(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(16, 3))
    r = list(rng.choice(16, size=int(rng.integers(1, 9)), replace=False))
    s = [i for i in range(16) if i not in r][: int(rng.integers(1, 9))]
    total = sum(manhattan_loop(pts[i], pts[j]) for i in r for j in s)
    got = average_link_distance(r, s, lambda i, j: manhattan(pts[i], pts[j]))
    assert got == pytest.approx(total / (len(r) * len(s)), rel=1e-12)


def test_forced_merge_order():
    dist = np.array([[0, 1, 10], [1, 0, 10], [10, 10, 0]], dtype=float)
    tree = agglomerate_matrix(dist, ["a", "b", "c"])
    assert [(m.left, m.right) for m in tree.merges] == [(0, 1), (2, 3)]
    np.testing.assert_array_equal(tree.heights, [1, 10])
    assert tree.merges[-1].size == 3


def test_duplicate_points_merge_at_zero():
    tree = agglomerate(features([[1, 2], [5, 5], [1, 2]]))
    assert tree.heights[0] == 0


def test_too_few_points():
    with pytest.raises(InputError):
        agglomerate(features([[1, 2]]))


def tree_with_heights(heights):
    n = len(heights) + 1
    merges, node = [], 0
    for i, h in enumerate(heights):
        left = 0 if i == 0 else n + i - 1
        merges.append(Merge(left, i + 1, h, i + 2))
    dist = np.zeros((n, n))
    return Dendrogram(tuple(f"x{i}" for i in range(n)), tuple(merges), dist)


def test_largest_gap_picks_dominant_gap():
    tree = tree_with_heights([0.1, 0.2, 5.0])
    assert choose_k(tree, CutPolicy(k_min=2, k_max=3)) == 2


def test_fixed_k_gives_exact_count():
    tree = agglomerate(features(np.random.default_rng(1).normal(size=(5, 3))))
    res = cut(tree, CutPolicy.fixed(3))
    assert res.k == 3 and len(set(res.assignment.values())) == 3
    with pytest.raises(ConfigError):
        cut(tree, CutPolicy.fixed(6))


def test_height_cut():
    dist = np.array([[0, 1, 10], [1, 0, 10], [10, 10, 0]], dtype=float)
    tree = agglomerate_matrix(dist, ["a", "b", "c"])
    assert cut(tree, CutPolicy.at_height(5)).k == 2
    assert cut(tree, CutPolicy.at_height(0.5)).k == 3
    assert cut(tree, CutPolicy.at_height(10)).k == 1


def test_identical_points_degenerate_to_one_cluster():
    tree = agglomerate(features([[1.0, 2.0]] * 10))
    res = cut(tree)
    assert res.k == 1
    assert math.isinf(res.inter_cluster_df)
    assert set(res.assignment.values()) == {0}


def test_cut_extremes():
    tree = agglomerate(features(np.random.default_rng(2).normal(size=(6, 2))))
    singles = cut(tree, CutPolicy.fixed(6))
    assert sorted(len(m) for m in singles.members()) == [1] * 6
    one = cut(tree, CutPolicy.fixed(1))
    assert one.k == 1 and math.isinf(one.inter_cluster_df)


def test_inter_cluster_df_is_min_average_link():
    pts = np.array([[0.0], [0.5], [10.0], [10.5], [30.0]])
    tree = agglomerate(features(pts))
    res = cut(tree, CutPolicy.fixed(3))
    assert res.inter_cluster_df == pytest.approx(10.0)


def test_policy_validation():
    with pytest.raises(ConfigError):
        CutPolicy(k_min=1)
    with pytest.raises(ConfigError):
        CutPolicy(kind="fixed-k")
    with pytest.raises(ConfigError):
        CutPolicy(kind="spectral")


@pytest.mark.parametrize("seed", range(20))
def test_matches_naive_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 21))
    pts = rng.normal(size=(n, 3))
    heights, partitions = naive_average_linkage(pts)
    tree = agglomerate(features(pts))
    np.testing.assert_allclose(tree.heights, heights, atol=1e-9)
    for k in range(1, n + 1):
        assert partition(flat_labels(tree, k)) == partitions[n - k]


# --- properties

point_sets = st.integers(0, 2**16).flatmap(
    lambda seed: st.integers(2, 25).map(lambda n: np.random.default_rng(seed).normal(size=(n, 3)))
)


@given(point_sets)
def test_heights_are_non_decreasing(pts):
    tree = agglomerate(features(pts))
    assert np.all(np.diff(tree.heights) >= 0)


@given(point_sets, st.integers(0, 2**16))
def test_permutation_invariance(pts, seed):
    perm = np.random.default_rng(seed).permutation(len(pts))
    a = agglomerate(features(pts))
    fb = features(pts)
    b = agglomerate([fb[i] for i in perm])
    np.testing.assert_allclose(a.heights, b.heights, atol=1e-9)
    for k in range(1, len(pts) + 1):
        la = cut(a, CutPolicy.fixed(k)).members()
        lb = cut(b, CutPolicy.fixed(k)).members()
        assert {frozenset(g) for g in la} == {frozenset(g) for g in lb}


@given(point_sets)
def test_largest_gap_result_within_range_or_degenerate(pts):
    res = cut(agglomerate(features(pts)), CutPolicy(k_min=2, k_max=10))
    assert res.k == 1 or 2 <= res.k <= min(10, len(pts))
    assert isinstance(res, ClusteringResult)
    assert sum(len(m) for m in res.members()) == len(pts)
