import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from manifold_repair import (
    Dissimilarity,
    MaskedDataset,
    ShapeMismatch,
    masked_cross_distances,
    masked_euclidean,
    overlap_counts,
    zero_overlap_pairs,
)
from manifold_repair import _masked


def _random_dataset(
    rng: np.random.Generator, n: int, m: int, p: float
) -> MaskedDataset:
    values = rng.normal(size=(n, m)) * rng.uniform(0.1, 10)
    return MaskedDataset(values, rng.random((n, m)) < p)


def test_dataset_validates_shapes() -> None:
    with pytest.raises(ShapeMismatch, match="does not match"):
        MaskedDataset(np.zeros((3, 2)), np.ones((2, 3), dtype=bool))
    with pytest.raises(ShapeMismatch, match="2-dimensional"):
        MaskedDataset(np.zeros(3), np.ones(3, dtype=bool))


def test_dataset_is_read_only() -> None:
    data = MaskedDataset.full(np.ones((2, 2)))
    with pytest.raises(ValueError):
        data.values[0, 0] = 5
    with pytest.raises(AttributeError):
        data.values = np.zeros((2, 2))  # type: ignore [misc]


def test_from_array_masks_nan() -> None:
    data = MaskedDataset.from_array([[1.0, np.nan], [np.nan, np.nan]])
    assert_array_equal(data.mask, [[True, False], [False, False]])
    assert data.degenerate_rows == [1]
    assert data.missing_fraction == 0.75
    assert_array_equal(data.filled(), [[1.0, 0.0], [0.0, 0.0]])
    assert data.n == 2
    assert data.m == 2


def test_full_mask_gives_euclidean() -> None:
    x = np.array([[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]])
    d = masked_euclidean(MaskedDataset.full(x))
    assert_allclose(d.d, [[0, 5, 10], [5, 0, 5], [10, 5, 0]], atol=1e-12)


def test_masked_coordinates_are_ignored() -> None:
    values = [[0.0, 0.0], [3.0, 100.0]]
    mask = [[True, True], [True, False]]
    d = masked_euclidean(MaskedDataset(values, mask))
    assert d.d[0, 1] == 3.0


def test_zero_overlap_pairs_are_zero_and_warn() -> None:
    data = MaskedDataset([[1.0, 0.0], [0.0, 7.0]], [[True, False], [False, True]])
    with pytest.warns(UserWarning, match="share no observed coordinate"):
        d = masked_euclidean(data)
    assert d.d[0, 1] == 0.0
    assert zero_overlap_pairs(data) == 1
    # silent when asked
    assert masked_euclidean(data, warn=False).d[0, 1] == 0.0


def test_overlap_counts() -> None:
    mask = np.array([[1, 1, 0], [1, 0, 0], [0, 0, 1]], dtype=bool)
    counts = overlap_counts(MaskedDataset(np.zeros((3, 3)), mask))
    assert_array_equal(counts, [[2, 1, 0], [1, 1, 0], [0, 0, 1]])


def test_contraction_property() -> None:
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, m = rng.integers(2, 12), rng.integers(1, 8)
        data = _random_dataset(rng, n, m, rng.uniform(0.2, 1.0))
        masked = masked_euclidean(data, warn=False).d
        exact = masked_euclidean(MaskedDataset.full(data.values)).d
        assert (masked <= exact).all()


def test_monotone_in_mask() -> None:
    rng = np.random.default_rng(1)
    data = _random_dataset(rng, 20, 6, 0.8)
    fewer = data.with_mask(data.mask & (rng.random(data.mask.shape) < 0.5))
    assert (
        masked_euclidean(fewer, warn=False).d <= masked_euclidean(data, warn=False).d
    ).all()


def test_blocks_do_not_change_result(monkeypatch: pytest.MonkeyPatch) -> None:
    rng = np.random.default_rng(2)
    data = _random_dataset(rng, 30, 5, 0.9)
    whole = masked_euclidean(data, warn=False).d
    monkeypatch.setattr(_masked, "_BLOCK_ELEMENTS", 7)
    assert_allclose(masked_euclidean(data, warn=False).d, whole, rtol=1e-14)


def test_cross_distances_match_pairwise() -> None:
    rng = np.random.default_rng(3)
    data = _random_dataset(rng, 12, 4, 0.7)
    a = MaskedDataset(data.values[:5], data.mask[:5])
    b = MaskedDataset(data.values[5:], data.mask[5:])
    cross = masked_cross_distances(a, b)
    assert cross.shape == (5, 7)
    assert_allclose(cross, masked_euclidean(data, warn=False).d[:5, 5:], rtol=1e-12)
    with pytest.raises(ShapeMismatch):
        masked_cross_distances(a, MaskedDataset.full(np.zeros((2, 3))))


def test_dissimilarity_validation() -> None:
    with pytest.raises(ShapeMismatch):
        Dissimilarity(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="symmetric"):
        Dissimilarity([[0, 1], [2, 0]])
    with pytest.raises(ValueError, match="diagonal"):
        Dissimilarity([[1, 1], [1, 0]])
    with pytest.raises(ValueError, match="nonnegative"):
        Dissimilarity([[0, -1], [-1, 0]])
    with pytest.raises(ValueError, match="finite"):
        Dissimilarity([[0, np.inf], [np.inf, 0]])


def test_dissimilarity_from_points() -> None:
    d = Dissimilarity.from_points([[0.0, 0.0], [1.0, 0.0]])
    assert d.n == 2
    assert d.max == 1.0
    assert_array_equal(np.asarray(d), [[0, 1], [1, 0]])
    assert "n=2" in repr(d)


def test_empty_and_single_point() -> None:
    d = masked_euclidean(MaskedDataset.full(np.ones((1, 3))))
    assert_array_equal(d.d, [[0.0]])
