"""Masked datasets and distances that ignore missing coordinates.

The distance between two points is computed over the coordinates observed in
*both* points only:

```
d(x, y) = sqrt(sum_k q_x[k] * q_y[k] * (x[k] - y[k]) ** 2)
```

Pairs that share no observed coordinate get distance 0 (the empty sum).  Because
every term is nonnegative, masked distances never exceed the distance computed on
the complete values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from ._exceptions import ShapeMismatch

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._repair import RepairDelta

__all__ = [
    "Dissimilarity",
    "MaskedDataset",
    "masked_cross_distances",
    "masked_euclidean",
    "overlap_counts",
    "zero_overlap_pairs",
]

# rows per block when computing distances; bounds the temporary (block, n, m) size
_BLOCK_ELEMENTS = 1 << 22


def _frozen(a: NDArray) -> NDArray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False, init=False)
class MaskedDataset:
    """An ``(n, m)`` matrix of values with an ``(n, m)`` presence mask.

    Parameters
    ----------
    values : ArrayLike
        Real values. Entries where `mask` is False are ignored and may hold any
        placeholder, including NaN.
    mask : ArrayLike
        Boolean presence mask, True where the value is observed.

    Raises
    ------
    ShapeMismatch
        If `values` and `mask` are not two-dimensional arrays of the same shape.
    """

    values: NDArray[np.float64]
    mask: NDArray[np.bool_]

    def __init__(self, values: ArrayLike, mask: ArrayLike) -> None:
        vals = np.array(values, dtype=np.float64)
        msk = np.array(mask, dtype=bool)
        if vals.ndim != 2:
            raise ShapeMismatch(f"values must be 2-dimensional, got shape {vals.shape}")
        if vals.shape != msk.shape:
            raise ShapeMismatch(
                f"values shape {vals.shape} does not match mask shape {msk.shape}"
            )
        object.__setattr__(self, "values", _frozen(vals))
        object.__setattr__(self, "mask", _frozen(msk))

    @classmethod
    def full(cls, values: ArrayLike) -> MaskedDataset:
        """Dataset with every entry present."""
        vals = np.asarray(values, dtype=np.float64)
        return cls(vals, np.ones(vals.shape, dtype=bool))

    @classmethod
    def from_array(cls, values: ArrayLike) -> MaskedDataset:
        """Dataset whose mask marks every non-finite entry (e.g. NaN) as missing."""
        vals = np.asarray(values, dtype=np.float64)
        return cls(vals, np.isfinite(vals))

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.values.shape[0])

    @property
    def m(self) -> int:
        """Ambient dimension."""
        return int(self.values.shape[1])

    @property
    def degenerate_rows(self) -> list[int]:
        """Indices of rows with no observed entry."""
        return [int(i) for i in np.flatnonzero(~self.mask.any(axis=1))]

    @property
    def missing_fraction(self) -> float:
        """Fraction of entries that are missing."""
        if self.mask.size == 0:
            return 0.0
        return float(1.0 - self.mask.mean())

    def filled(self, fill_value: float = 0.0) -> NDArray[np.float64]:
        """Return a copy of the values with missing entries set to `fill_value`."""
        return np.where(self.mask, self.values, fill_value)

    def with_mask(self, mask: ArrayLike) -> MaskedDataset:
        """Return a dataset with the same values and a new mask."""
        return MaskedDataset(self.values, mask)

    def __repr__(self) -> str:
        return (
            f"MaskedDataset(n={self.n}, m={self.m}, "
            f"missing={self.missing_fraction:.3f})"
        )


@dataclass(frozen=True, eq=False, init=False)
class Dissimilarity:
    """A symmetric, nonnegative ``(n, n)`` matrix with a zero diagonal.

    Construction validates the invariants exactly (no tolerance) and stores a
    read-only float64 copy.
    """

    d: NDArray[np.float64]

    def __init__(self, d: ArrayLike) -> None:
        arr = np.array(d, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeMismatch(f"dissimilarity must be square, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            raise ValueError("dissimilarity entries must be finite")
        if (arr < 0).any():
            raise ValueError("dissimilarity entries must be nonnegative")
        if (np.diagonal(arr) != 0).any():
            raise ValueError("dissimilarity diagonal must be zero")
        if not np.array_equal(arr, arr.T):
            raise ValueError("dissimilarity must be exactly symmetric")
        object.__setattr__(self, "d", _frozen(arr))

    @classmethod
    def from_points(cls, points: ArrayLike) -> Dissimilarity:
        """Exact Euclidean distances between the rows of `points`."""
        return masked_euclidean(MaskedDataset.full(np.atleast_2d(points)))

    @property
    def n(self) -> int:
        """Number of points."""
        return int(self.d.shape[0])

    @property
    def max(self) -> float:
        """Largest entry (0 for empty matrices)."""
        return float(self.d.max()) if self.d.size else 0.0

    def __add__(self, other: RepairDelta) -> Dissimilarity:
        return Dissimilarity(self.d + other.p)

    def __array__(self, dtype: object = None, copy: object = None) -> NDArray:
        return self.d if dtype is None else self.d.astype(dtype)

    def __repr__(self) -> str:
        return f"Dissimilarity(n={self.n}, max={self.max:.6g})"


def _block_rows(n: int, m: int) -> int:
    return max(1, _BLOCK_ELEMENTS // max(1, n * m))


def _masked_rows(
    x: NDArray, qx: NDArray, y: NDArray, qy: NDArray
) -> NDArray[np.float64]:
    """Distances from each row of `x` to each row of `y` over shared coordinates."""
    diff = x[:, None, :] - y[None, :, :]
    both = qx[:, None, :] & qy[None, :, :]
    # zeroing the masked terms (rather than dropping them) keeps the summation
    # order of the full computation, so the masked sum can never round above it
    diff = np.where(both, diff, 0.0)
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def masked_euclidean(data: MaskedDataset, *, warn: bool = True) -> Dissimilarity:
    """Pairwise distances over jointly observed coordinates.

    Only the upper triangle is computed; it is mirrored so the result is exactly
    symmetric.  A `UserWarning` is issued when some pairs share no observed
    coordinate (their distance is 0).

    Parameters
    ----------
    data : MaskedDataset
        The dataset.
    warn : bool
        Whether to warn about pairs with no shared observed coordinate,
        by default True.

    Returns
    -------
    Dissimilarity
        The ``(n, n)`` masked distance matrix.
    """
    x = data.filled()
    q = data.mask
    n, m = x.shape
    out = np.zeros((n, n), dtype=np.float64)
    step = _block_rows(n, m)
    for start in range(0, n, step):
        stop = min(n, start + step)
        # columns from `start` cover the upper triangle of this row block
        block = _masked_rows(x[start:stop], q[start:stop], x[start:], q[start:])
        out[start:stop, start:] = block
    upper = np.triu(out, k=1)
    out = upper + upper.T

    if warn and n > 1 and (zero := zero_overlap_pairs(data)):
        warnings.warn(
            f"{zero} pair(s) of points share no observed coordinate; their masked "
            "distance is 0",
            UserWarning,
            stacklevel=2,
        )
    return Dissimilarity(out)


def masked_cross_distances(a: MaskedDataset, b: MaskedDataset) -> NDArray[np.float64]:
    """Masked distances from every point of `a` to every point of `b`.

    Returns an ``(a.n, b.n)`` array.  Used to place new points relative to a
    training set.
    """
    if a.m != b.m:
        raise ShapeMismatch(
            f"datasets have different ambient dimensions: {a.m} != {b.m}"
        )
    xa, xb = a.filled(), b.filled()
    out = np.empty((a.n, b.n), dtype=np.float64)
    step = _block_rows(b.n, a.m)
    for start in range(0, a.n, step):
        stop = min(a.n, start + step)
        out[start:stop] = _masked_rows(xa[start:stop], a.mask[start:stop], xb, b.mask)
    return out


def overlap_counts(data: MaskedDataset) -> NDArray[np.int64]:
    """Number of coordinates observed in both points, for every pair.

    The diagonal holds the number of observed coordinates of each point.
    """
    q = data.mask.astype(np.float64)
    # counts are at most m, so the float product is exact
    return np.rint(q @ q.T).astype(np.int64)


def zero_overlap_pairs(data: MaskedDataset) -> int:
    """Number of unordered pairs ``i < j`` that share no observed coordinate."""
    counts = overlap_counts(data)
    return int(np.count_nonzero(np.triu(counts == 0, k=1)))
