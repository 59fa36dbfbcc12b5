import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from tgsr.predictor import classify, classify_batch, project_simplex, score

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vectors = st.integers(1, 8).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def simplex_oracle(v):
    """Exhaustive active-set enumeration: best equality-constrained fit over every support."""
    n = v.size
    best, best_dist = None, np.inf
    for mask in itertools.product([0, 1], repeat=n):
        S = np.flatnonzero(mask)
        if S.size == 0:
            continue
        l = np.zeros(n)
        l[S] = v[S] - (v[S].sum() - 1.0) / S.size
        if np.all(l >= -1e-15):
            dist = np.sum((l - v) ** 2)
            if dist < best_dist:
                best, best_dist = np.maximum(l, 0), dist
    return best


def test_projection_hand_case():
    np.testing.assert_allclose(project_simplex([0.5, 0.4, -0.1]), [0.55, 0.45, 0.0], atol=1e-12)
    np.testing.assert_allclose(simplex_oracle(np.array([0.5, 0.4, -0.1])), [0.55, 0.45, 0.0], atol=1e-12)


def test_projection_fixed_points():
    v = np.array([0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(v), v, atol=1e-15)
    np.testing.assert_array_equal(project_simplex([2.0, 0.0, 0.0]), [1.0, 0.0, 0.0])
    np.testing.assert_allclose(project_simplex(np.zeros(4)), np.full(4, 0.25))


def test_projection_rejects_non_finite():
    with pytest.raises(ValueError):
        project_simplex([0.1, np.nan])
    with pytest.raises(ValueError):
        project_simplex([np.inf, 0.0])


@settings(max_examples=300)
@given(vectors)
def test_projection_matches_enumeration_oracle(v):
    np.testing.assert_allclose(project_simplex(v), simplex_oracle(v), atol=1e-10)


@settings(max_examples=300)
@given(vectors)
def test_projection_lands_on_simplex(v):
    p = project_simplex(v)
    assert p.min() >= 0
    assert abs(p.sum() - 1) <= 1e-12


@settings(max_examples=200)
@given(vectors)
def test_projection_preserves_order(v):
    p = project_simplex(v)
    for a, b in itertools.combinations(range(v.size), 2):
        if v[a] >= v[b]:
            assert p[a] >= p[b]
        if v[b] >= v[a]:
            assert p[b] >= p[a]


def test_projection_is_optimal_against_feasible_points(rng):
    for _ in range(50):
        v = rng.normal(scale=2, size=5)
        p = project_simplex(v)
        feas = rng.dirichlet(np.ones(5), size=100)
        assert np.all(np.linalg.norm(feas - v, axis=1) >= np.linalg.norm(p - v) - 1e-12)


def test_score_trivial_and_group_wise(rng):
    assert np.all(score(np.zeros((6, 3)), rng.normal(size=6)) == 0)
    x = rng.normal(size=4)
    np.testing.assert_array_equal(score(np.eye(4), x), x)
    C = rng.normal(size=(12, 3))
    x = rng.normal(size=12)
    np.testing.assert_allclose(score(C, x, K=4), C.T @ x, rtol=1e-12, atol=1e-14)
    with pytest.raises(ValueError):
        score(C, rng.normal(size=11))


def test_classify_argmax_and_ties():
    C = np.eye(3)
    assert classify(C, np.array([0.1, 0.7, 0.2]), ["a", "b", "c"]).class_index == 1
    tied = classify(C, np.array([0.4, 0.4, 0.4]), ["a", "b", "c"])
    assert tied.class_index == 0 and tied.category_name == "a"
    np.testing.assert_allclose(tied.distribution, [1 / 3] * 3)


def test_argmax_survives_projection(rng):
    for _ in range(1000):
        v = rng.normal(size=int(rng.integers(2, 7)))
        if rng.random() < 0.2:
            v[int(rng.integers(v.size))] = v.max()
        assert np.argmax(project_simplex(v)) == np.argmax(v)


def test_classify_batch_matches_single(rng):
    C = rng.normal(size=(10, 4))
    X = rng.normal(size=(10, 7))
    idx, dists = classify_batch(C, X)
    for j in range(7):
        single = classify(C, X[:, j])
        assert single.class_index == idx[j]
        np.testing.assert_allclose(single.distribution, dists[j], atol=1e-14)
    with pytest.raises(ValueError):
        classify_batch(C, X[:9])
