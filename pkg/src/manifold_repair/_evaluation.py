"""Comparing embeddings: Procrustes alignment, errors and k-NN scores."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy.linalg import orthogonal_procrustes
from scipy.spatial.distance import cdist

from ._exceptions import DegenerateReference, ShapeMismatch

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "AlignmentResult",
    "accuracy",
    "evaluate_embeddings",
    "knn_classify",
    "neighborhood_preservation",
    "procrustes_align",
    "relative_error",
]


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    """Similarity transform ``aligned = scale * candidate @ rotation + translation``.

    Attributes
    ----------
    rotation : NDArray
        ``(d, d)`` orthogonal matrix.
    scale : float
        Isotropic scale factor.
    translation : NDArray
        ``(d,)`` offset.
    aligned : NDArray
        The transformed candidate.
    relative_error : float
        ``||reference - aligned||_F / ||reference||_F``.
    """

    rotation: NDArray[np.float64]
    scale: float
    translation: NDArray[np.float64]
    aligned: NDArray[np.float64]
    relative_error: float


def _pair(
    reference: ArrayLike, candidate: ArrayLike
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    ref = np.asarray(reference, dtype=np.float64)
    cand = np.asarray(candidate, dtype=np.float64)
    if ref.ndim == 1:
        ref = ref[:, None]
    if cand.ndim == 1:
        cand = cand[:, None]
    if ref.shape != cand.shape or ref.ndim != 2:
        raise ShapeMismatch(
            f"reference shape {ref.shape} does not match candidate shape {cand.shape}"
        )
    return ref, cand


def relative_error(reference: ArrayLike, aligned: ArrayLike) -> float:
    """Frobenius ratio ``||reference - aligned|| / ||reference||``."""
    ref, al = _pair(reference, aligned)
    norm = float(np.linalg.norm(ref))
    if norm == 0:
        raise DegenerateReference("reference has zero norm")
    return float(np.linalg.norm(ref - al)) / norm


def procrustes_align(reference: ArrayLike, candidate: ArrayLike) -> AlignmentResult:
    """Align `candidate` to `reference` with rotation, scaling and translation.

    Solves ``min ||X - a Y Q - 1 mu^T||_F`` in closed form: both configurations
    are centered, ``Q`` comes from the SVD of the centered cross product and
    ``a`` is the sum of its singular values divided by ``||Y_centered||^2``.

    Parameters
    ----------
    reference : ArrayLike
        ``(n, d)`` target configuration ``X``.
    candidate : ArrayLike
        ``(n, d)`` configuration ``Y`` to transform; rows are matched by index.

    Returns
    -------
    AlignmentResult

    Raises
    ------
    DegenerateReference
        If all reference points coincide.
    ShapeMismatch
        If the shapes differ.
    """
    ref, cand = _pair(reference, candidate)
    ref_mean = ref.mean(axis=0)
    cand_mean = cand.mean(axis=0)
    x0 = ref - ref_mean
    y0 = cand - cand_mean
    if float(np.linalg.norm(x0)) == 0:
        raise DegenerateReference("reference points all coincide (zero centered norm)")
    rotation, sv_sum = orthogonal_procrustes(y0, x0)
    y_norm2 = float((y0**2).sum())
    scale = float(sv_sum) / y_norm2 if y_norm2 > 0 else 1.0
    translation = ref_mean - scale * cand_mean @ rotation
    aligned = scale * cand @ rotation + translation
    return AlignmentResult(
        rotation=rotation,
        scale=scale,
        translation=translation,
        aligned=aligned,
        relative_error=relative_error(ref, aligned),
    )


def _knn_indices(x: NDArray[np.float64], k: int) -> NDArray[np.intp]:
    dist = cdist(x, x)
    np.fill_diagonal(dist, np.inf)
    return np.argsort(dist, axis=1, kind="stable")[:, :k]


def neighborhood_preservation(
    reference_coords: ArrayLike, candidate_coords: ArrayLike, k: int = 10
) -> float:
    """Mean fraction of each point's `k` nearest neighbors kept by the candidate.

    Neighbors are found by Euclidean distance in each space; ties are broken by
    the lower index.  The score is 1 exactly when all k-NN sets coincide.
    """
    ref, cand = _pair(reference_coords, candidate_coords)
    n = ref.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n={n}, got {k}")
    rows = np.arange(n)[:, None]
    in_ref = np.zeros((n, n), dtype=bool)
    in_ref[rows, _knn_indices(ref, k)] = True
    shared = in_ref[rows, _knn_indices(cand, k)].sum(axis=1)
    return float(shared.mean() / k)


def knn_classify(
    train_coords: ArrayLike,
    train_labels: ArrayLike,
    test_coords: ArrayLike,
    k: int = 1,
) -> NDArray[np.int64]:
    """Label each test point by majority vote of its `k` nearest training points.

    Distances are Euclidean; nearer neighbors win distance ties by lower index,
    and vote ties go to the smallest label.
    """
    train = np.atleast_2d(np.asarray(train_coords, dtype=np.float64))
    test = np.atleast_2d(np.asarray(test_coords, dtype=np.float64))
    labels = np.asarray(train_labels).astype(np.int64, copy=False).reshape(-1)
    if train.shape[0] == 0:
        raise ValueError("training set is empty")
    if labels.shape[0] != train.shape[0]:
        raise ShapeMismatch(
            f"{labels.shape[0]} labels for {train.shape[0]} training points"
        )
    if train.shape[1] != test.shape[1]:
        raise ShapeMismatch(
            f"train dimension {train.shape[1]} != test dimension {test.shape[1]}"
        )
    if not 1 <= k <= train.shape[0]:
        raise ValueError(f"k must satisfy 1 <= k <= {train.shape[0]}, got {k}")

    classes, codes = np.unique(labels, return_inverse=True)
    nearest = np.argsort(cdist(test, train), axis=1, kind="stable")[:, :k]
    votes = np.zeros((test.shape[0], classes.size), dtype=np.int64)
    np.add.at(votes, (np.arange(test.shape[0])[:, None], codes[nearest]), 1)
    # argmax returns the first maximum, i.e. the smallest label
    return classes[np.argmax(votes, axis=1)]


def accuracy(predicted: ArrayLike, truth: ArrayLike) -> float:
    """Fraction of matching labels."""
    pred = np.asarray(predicted).reshape(-1)
    true = np.asarray(truth).reshape(-1)
    if pred.shape != true.shape:
        raise ShapeMismatch(f"{pred.size} predictions for {true.size} labels")
    if pred.size == 0:
        raise ValueError("no labels to score")
    return float(np.mean(pred == true))


def evaluate_embeddings(
    reference: ArrayLike, candidate: ArrayLike, k: int = 10
) -> dict[str, Any]:
    """Metrics comparing `candidate` to `reference` after Procrustes alignment.

    Returns a dict with ``relative_error``, ``neighborhood_preservation_k{k}``
    (None when ``k >= n``), ``scale``, ``n`` and ``dim``.
    """
    result = procrustes_align(reference, candidate)
    n, dim = result.aligned.shape
    preservation = (
        neighborhood_preservation(reference, candidate, k) if 1 <= k < n else None
    )
    return {
        "relative_error": result.relative_error,
        f"neighborhood_preservation_k{k}": preservation,
        "scale": result.scale,
        "n": int(n),
        "dim": int(dim),
    }
