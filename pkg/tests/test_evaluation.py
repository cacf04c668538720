import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from manifold_repair import (
    DegenerateReference,
    ShapeMismatch,
    accuracy,
    evaluate_embeddings,
    knn_classify,
    neighborhood_preservation,
    procrustes_align,
    relative_error,
)


def _rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_procrustes_recovers_similarity_transform() -> None:
    rng = np.random.default_rng(0)
    ref = rng.normal(size=(25, 2))
    cand = 2.0 * ref @ _rotation(0.7) + [3.0, -1.0]
    result = procrustes_align(ref, cand)
    assert result.scale == pytest.approx(0.5)
    assert result.relative_error < 1e-12
    assert_allclose(result.aligned, ref, atol=1e-12)
    assert_allclose(result.rotation @ result.rotation.T, np.eye(2), atol=1e-12)
    assert_allclose(
        result.scale * cand @ result.rotation + result.translation, result.aligned
    )


def test_procrustes_handles_reflection() -> None:
    rng = np.random.default_rng(1)
    ref = rng.normal(size=(10, 3))
    cand = ref * [1.0, -1.0, 1.0]
    result = procrustes_align(ref, cand)
    assert result.relative_error < 1e-12
    assert np.linalg.det(result.rotation) == pytest.approx(-1.0)


def test_procrustes_beats_rotation_search() -> None:
    rng = np.random.default_rng(2)
    ref = rng.normal(size=(30, 2))
    cand = ref @ _rotation(1.1) * 0.8 + rng.normal(scale=0.2, size=(30, 2))
    result = procrustes_align(ref, cand)

    x0 = ref - ref.mean(axis=0)
    y0 = cand - cand.mean(axis=0)
    best = np.inf
    for theta in np.linspace(0, 2 * np.pi, 3600, endpoint=False):
        for flip in (np.eye(2), np.diag([1.0, -1.0])):
            yr = y0 @ flip @ _rotation(theta)
            scale = (x0 * yr).sum() / (yr**2).sum()
            err = np.linalg.norm(x0 - scale * yr) / np.linalg.norm(ref)
            best = min(best, err)
    assert result.relative_error <= best + 1e-12
    assert result.relative_error == pytest.approx(best, rel=1e-3)


def test_procrustes_errors() -> None:
    with pytest.raises(DegenerateReference):
        procrustes_align(np.ones((4, 2)), np.random.default_rng(0).normal(size=(4, 2)))
    with pytest.raises(ShapeMismatch):
        procrustes_align(np.zeros((4, 2)), np.zeros((3, 2)))


def test_collapsed_candidate_keeps_unit_scale() -> None:
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    result = procrustes_align(ref, np.zeros((3, 2)))
    assert result.scale == 1.0
    assert_allclose(result.aligned, np.tile(ref.mean(axis=0), (3, 1)))


def test_relative_error() -> None:
    assert relative_error([[3.0, 4.0]], [[3.0, 4.0]]) == 0.0
    assert relative_error([[3.0, 4.0]], [[0.0, 0.0]]) == 1.0
    # one-dimensional input is a single column
    assert relative_error([1.0, 0.0], [0.0, 0.0]) == 1.0
    with pytest.raises(DegenerateReference):
        relative_error(np.zeros((2, 2)), np.ones((2, 2)))


def test_neighborhood_preservation() -> None:
    rng = np.random.default_rng(3)
    x = rng.normal(size=(40, 2))
    assert neighborhood_preservation(x, x, k=5) == 1.0
    # invariant under similarity transforms
    assert neighborhood_preservation(x, 3 * x @ _rotation(0.3) + 1, k=5) == 1.0
    shuffled = x[rng.permutation(40)]
    assert neighborhood_preservation(x, shuffled, k=5) < 0.5
    with pytest.raises(ValueError, match="k must satisfy"):
        neighborhood_preservation(x, x, k=40)


def test_neighborhood_preservation_partial() -> None:
    ref = np.array([[0.0], [1.0], [3.0]])
    cand = np.array([[0.0], [1.0], [-3.0]])
    # ref neighbors: 0->1, 1->0, 2->1; cand neighbors: 0->1, 1->0, 2->0
    assert neighborhood_preservation(ref, cand, k=1) == pytest.approx(2 / 3)


def test_knn_classify() -> None:
    train = [[0.0], [1.0], [10.0], [11.0]]
    labels = [0, 0, 1, 1]
    assert_array_equal(knn_classify(train, labels, [[0.4], [10.6]], k=1), [0, 1])
    assert_array_equal(knn_classify(train, labels, [[2.0]], k=3), [0])
    assert knn_classify(train, labels, [[2.0]]).dtype == np.int64


def test_knn_classify_ties() -> None:
    train = [[0.0], [2.0]]
    # equidistant: the lower training index wins
    assert_array_equal(knn_classify(train, [5, 3], [[1.0]], k=1), [5])
    # one vote each: the smallest label wins
    assert_array_equal(knn_classify(train, [5, 3], [[1.0]], k=2), [3])


def test_knn_classify_errors() -> None:
    with pytest.raises(ValueError, match="empty"):
        knn_classify(np.zeros((0, 2)), [], [[0.0, 0.0]])
    with pytest.raises(ShapeMismatch):
        knn_classify([[0.0], [1.0]], [0], [[0.0]])
    with pytest.raises(ShapeMismatch):
        knn_classify([[0.0], [1.0]], [0, 1], [[0.0, 1.0]])
    with pytest.raises(ValueError, match="k must satisfy"):
        knn_classify([[0.0], [1.0]], [0, 1], [[0.0]], k=3)


def test_accuracy() -> None:
    assert accuracy([1, 2, 3, 4], [1, 2, 0, 0]) == 0.5
    with pytest.raises(ShapeMismatch):
        accuracy([1], [1, 2])
    with pytest.raises(ValueError, match="no labels"):
        accuracy([], [])


def test_evaluate_embeddings() -> None:
    rng = np.random.default_rng(4)
    ref = rng.normal(size=(20, 2))
    metrics = evaluate_embeddings(ref, -ref * 4, k=3)
    assert metrics["relative_error"] < 1e-12
    assert metrics["neighborhood_preservation_k3"] == 1.0
    assert metrics["scale"] == pytest.approx(0.25)
    assert metrics["n"] == 20
    assert metrics["dim"] == 2
    assert evaluate_embeddings(ref, ref, k=20)["neighborhood_preservation_k20"] is None
