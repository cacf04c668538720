"""Isomap: neighborhood graphs, geodesic distances and classical MDS.

The stages compose as::

    graph = knn_graph(d, k)  # or epsilon_graph(d, eps)
    geodesics = geodesic_distances(graph)  # Floyd-Warshall
    component, kept = largest_component(geodesics)
    embedding = classical_mds(component, dim)

`isomap` runs the whole chain and `out_of_sample` places new points into an
existing embedding from their distances to the training points.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import TYPE_CHECKING, Literal

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._exceptions import EmptyComponent, ShapeMismatch
from ._masked import _frozen
from ._numba import HAS_NUMBA, njit, prange

if TYPE_CHECKING:
    from collections.abc import Iterator, Sequence

    from numpy.typing import ArrayLike, NDArray

    from ._masked import Dissimilarity

__all__ = [
    "Embedding",
    "GeodesicMatrix",
    "NeighborGraph",
    "Neighborhood",
    "classical_mds",
    "embed_dimensions",
    "epsilon_graph",
    "geodesic_distances",
    "geodesics_to_train",
    "isomap",
    "isomap_with_geodesics",
    "knn_graph",
    "largest_component",
    "out_of_sample",
]

RESIDUAL_RTOL = 1e-8


class Neighborhood(BaseModel):
    """Rule used to build the Isomap neighborhood graph.

    Parameters
    ----------
    kind : {"knn", "eps"}
        k-nearest neighbors (union symmetrized) or a fixed radius.
    k : int, optional
        Number of neighbors for ``kind="knn"``, by default 10.
    eps : float, optional
        Radius for ``kind="eps"``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["knn", "eps"] = "knn"
    k: int | None = 10
    eps: float | None = None

    @model_validator(mode="after")
    def _check_parameter(self) -> Neighborhood:
        if self.kind == "knn" and (self.k is None or self.k < 1):
            raise ValueError(f"knn neighborhood needs k >= 1, got {self.k}")
        if self.kind == "eps" and (self.eps is None or not self.eps > 0):
            raise ValueError(f"eps neighborhood needs eps > 0, got {self.eps}")
        return self

    @classmethod
    def knn(cls, k: int) -> Neighborhood:
        return cls(kind="knn", k=k)

    @classmethod
    def radius(cls, eps: float) -> Neighborhood:
        return cls(kind="eps", k=None, eps=eps)

    def build(self, d: Dissimilarity) -> NeighborGraph:
        """Build the neighborhood graph of `d` under this rule."""
        if self.kind == "knn":
            return knn_graph(d, self.k)  # type: ignore [arg-type]
        return epsilon_graph(d, self.eps)  # type: ignore [arg-type]


@dataclass(frozen=True, eq=False, init=False)
class NeighborGraph:
    """Weighted undirected graph on ``n`` vertices.

    Stored densely: `adjacency` marks edges (symmetric, empty diagonal) and
    `weights` holds their nonnegative weights.  Edges between coincident points
    have weight 0, which is why adjacency is kept separately from the weights.
    """

    adjacency: NDArray[np.bool_]
    weights: NDArray[np.float64]

    def __init__(self, adjacency: ArrayLike, weights: ArrayLike) -> None:
        adj = np.array(adjacency, dtype=bool)
        w = np.where(adj, np.asarray(weights, dtype=np.float64), 0.0)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1] or w.shape != adj.shape:
            raise ShapeMismatch("adjacency and weights must be matching square arrays")
        if np.diagonal(adj).any():
            raise ValueError("neighbor graph must not contain self-loops")
        if not np.array_equal(adj, adj.T) or not np.array_equal(w, w.T):
            raise ValueError("neighbor graph must be undirected (symmetric)")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ValueError("edge weights must be finite and nonnegative")
        object.__setattr__(self, "adjacency", _frozen(adj))
        object.__setattr__(self, "weights", _frozen(w))

    @classmethod
    def empty(cls, n: int) -> NeighborGraph:
        return cls(np.zeros((n, n), dtype=bool), np.zeros((n, n)))

    @property
    def n(self) -> int:
        return int(self.adjacency.shape[0])

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.adjacency, k=1)))

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield ``(i, j, weight)`` for every edge with ``i < j``."""
        for i, j in zip(*np.nonzero(np.triu(self.adjacency, k=1))):
            yield int(i), int(j), float(self.weights[i, j])

    def __repr__(self) -> str:
        return f"NeighborGraph(n={self.n}, edges={self.n_edges})"


@dataclass(frozen=True, eq=False, init=False)
class GeodesicMatrix:
    """All-pairs shortest-path distances, ``inf`` between components."""

    g: NDArray[np.float64]
    component_ids: NDArray[np.int64]

    def __init__(self, g: ArrayLike, component_ids: ArrayLike | None = None) -> None:
        arr = np.array(g, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeMismatch(f"geodesic matrix must be square, got {arr.shape}")
        if (np.diagonal(arr) != 0).any():
            raise ValueError("geodesic matrix diagonal must be zero")
        if not np.array_equal(arr, arr.T):
            raise ValueError("geodesic matrix must be symmetric")
        if component_ids is None:
            component_ids = _canonical_labels(np.isfinite(arr))
        ids = np.array(component_ids, dtype=np.int64)
        if ids.shape != (arr.shape[0],):
            raise ShapeMismatch("need one component id per vertex")
        object.__setattr__(self, "g", _frozen(arr))
        object.__setattr__(self, "component_ids", _frozen(ids))

    @property
    def n(self) -> int:
        return int(self.g.shape[0])

    @property
    def n_components(self) -> int:
        return int(self.component_ids.max()) + 1 if self.n else 0

    @property
    def is_finite(self) -> bool:
        return bool(np.isfinite(self.g).all())

    def __repr__(self) -> str:
        return f"GeodesicMatrix(n={self.n}, components={self.n_components})"


@dataclass(frozen=True, eq=False)
class Embedding:
    """Classical MDS output.

    Attributes
    ----------
    coords : NDArray
        ``(n, dim)`` coordinates.
    eigenvalues : NDArray
        The ``dim`` largest eigenvalues of the double-centered matrix, in
        nonincreasing order, *before* negative values are clamped to zero.
    kept_indices : NDArray
        Row of the original input for each embedded point.
    vectors : NDArray
        ``(n, dim)`` unit eigenvectors, sign-normalized like `coords`.
    residuals : NDArray
        ``||S v - lambda v||`` for each eigenpair.
    """

    coords: NDArray[np.float64]
    eigenvalues: NDArray[np.float64]
    kept_indices: NDArray[np.int64]
    vectors: NDArray[np.float64]
    residuals: NDArray[np.float64]

    @property
    def n(self) -> int:
        return int(self.coords.shape[0])

    @property
    def dim(self) -> int:
        return int(self.coords.shape[1])

    @property
    def negative_eigenvalues(self) -> int:
        return int(np.count_nonzero(self.eigenvalues < 0))

    def leading(self, dim: int) -> Embedding:
        """Restrict to the `dim` leading coordinates."""
        if not 1 <= dim <= self.dim:
            raise ValueError(f"dim must be in [1, {self.dim}], got {dim}")
        return replace(
            self,
            coords=self.coords[:, :dim],
            eigenvalues=self.eigenvalues[:dim],
            vectors=self.vectors[:, :dim],
            residuals=self.residuals[:dim],
        )

    def with_kept_indices(self, kept: ArrayLike) -> Embedding:
        return replace(self, kept_indices=np.asarray(kept, dtype=np.int64))

    def __repr__(self) -> str:
        return f"Embedding(n={self.n}, dim={self.dim})"


# ---------------------------------------------------------------------------
# graphs


def knn_graph(d: Dissimilarity, k: int) -> NeighborGraph:
    """Union-symmetrized k-nearest-neighbor graph.

    ``(i, j)`` is an edge if `j` is among the `k` nearest points to `i` or `i`
    among those of `j`.  Ties at the k-th distance go to the lower index.

    Parameters
    ----------
    d : Dissimilarity
        Pairwise dissimilarities; also used as edge weights.
    k : int
        Number of neighbors, ``1 <= k < n``.
    """
    n = d.n
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < n={n}, got {k}")
    dist = d.d.copy()
    np.fill_diagonal(dist, np.inf)
    # stable sort keeps lower indices first among equal distances
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    adj = np.zeros((n, n), dtype=bool)
    adj[np.repeat(np.arange(n), k), nearest.ravel()] = True
    adj |= adj.T
    return NeighborGraph(adj, d.d)


def epsilon_graph(d: Dissimilarity, eps: float) -> NeighborGraph:
    """Graph joining every pair of distinct points with ``d[i, j] <= eps``.

    Coincident points (distance 0) are joined by a weight-0 edge.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    adj = d.d <= eps
    np.fill_diagonal(adj, False)
    return NeighborGraph(adj, d.d)


# ---------------------------------------------------------------------------
# geodesics


@njit(cache=True, parallel=True)
def _floyd_warshall_kernel(g: NDArray[np.float64]) -> None:  # pragma: no cover
    n = g.shape[0]
    for k in range(n):
        # row k and column k do not change while relaxing through k
        for i in prange(n):
            gik = g[i, k]
            if gik == np.inf:
                continue
            for j in range(n):
                v = gik + g[k, j]
                if v < g[i, j]:
                    g[i, j] = v


def _floyd_warshall_numpy(g: NDArray[np.float64]) -> None:
    for k in range(g.shape[0]):
        np.minimum(g, g[:, k, None] + g[None, k, :], out=g)


def _canonical_labels(adj: NDArray[np.bool_]) -> NDArray[np.int64]:
    """Component labels numbered in order of each component's lowest vertex."""
    n = adj.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    _, labels = connected_components(csr_matrix(adj), directed=False)
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first, kind="stable")
    remap = np.empty_like(order)
    remap[order] = np.arange(order.size)
    return remap[labels].astype(np.int64)


def geodesic_distances(
    graph: NeighborGraph, *, use_numba: bool | None = None
) -> GeodesicMatrix:
    """All-pairs shortest paths of `graph` by Floyd-Warshall.

    Unreachable pairs get ``+inf``.  The relaxation over ``k`` is sequential;
    within one ``k`` every row is updated independently (in parallel with
    numba), and each entry is computed with the same two floating-point
    operations either way, so results do not depend on the thread count.
    """
    g = np.where(graph.adjacency, graph.weights, np.inf)
    np.fill_diagonal(g, 0.0)
    if use_numba is None:
        use_numba = HAS_NUMBA
    if use_numba:
        _floyd_warshall_kernel(g)
    else:
        _floyd_warshall_numpy(g)
    return GeodesicMatrix(g, _canonical_labels(graph.adjacency))


def largest_component(g: GeodesicMatrix) -> tuple[GeodesicMatrix, NDArray[np.int64]]:
    """Restrict `g` to its largest connected component.

    Ties between equally large components go to the one containing the lowest
    vertex index.  Returns the restricted matrix and the kept original indices.
    """
    if g.n == 0:
        return g, np.zeros(0, dtype=np.int64)
    sizes = np.bincount(g.component_ids)
    # labels are ordered by lowest vertex, so argmax picks the tie winner
    best = int(np.argmax(sizes))
    kept = np.flatnonzero(g.component_ids == best).astype(np.int64)
    if kept.size == g.n:
        return g, kept
    sub = g.g[np.ix_(kept, kept)]
    return GeodesicMatrix(sub, np.zeros(kept.size, dtype=np.int64)), kept


def geodesics_to_train(
    new_to_train: ArrayLike, train_geodesics: GeodesicMatrix, k: int
) -> NDArray[np.float64]:
    """Geodesic distances from new points to training points.

    Each new point is attached to its `k` nearest training points (by the given
    direct distances) and its geodesic to training point ``i`` is the shortest
    path through one of them: ``min_j d(x, j) + g[j, i]``.
    """
    direct = np.atleast_2d(np.asarray(new_to_train, dtype=np.float64))
    n = train_geodesics.n
    if direct.shape[1] != n:
        raise ShapeMismatch(
            f"expected distances to {n} training points, got {direct.shape[1]}"
        )
    if not 1 <= k <= n:
        raise ValueError(f"k must satisfy 1 <= k <= {n}, got {k}")
    nearest = np.argsort(direct, axis=1, kind="stable")[:, :k]
    out = np.empty_like(direct)
    g = train_geodesics.g
    for row, nbrs in enumerate(nearest):
        out[row] = (direct[row, nbrs, None] + g[nbrs]).min(axis=0)
    return out


# ---------------------------------------------------------------------------
# multidimensional scaling


def _double_center(sq: NDArray[np.float64]) -> NDArray[np.float64]:
    col_mean = sq.mean(axis=0)
    grand = col_mean.mean()
    s = -0.5 * (sq - col_mean[None, :] - col_mean[:, None] + grand)
    return 0.5 * (s + s.T)


def _top_eigenpairs(
    s: NDArray[np.float64], dim: int
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    n = s.shape[0]
    scale = float(np.linalg.norm(s)) or 1.0
    vals = vecs = resid = np.empty(0)
    for driver in ("evr", "evd"):
        if driver == "evr":
            vals, vecs = scipy.linalg.eigh(
                s, subset_by_index=[n - dim, n - 1], driver="evr"
            )
        else:
            vals, vecs = scipy.linalg.eigh(s, driver="evd")
            vals, vecs = vals[n - dim :], vecs[:, n - dim :]
        vals, vecs = vals[::-1], vecs[:, ::-1]
        resid = np.linalg.norm(s @ vecs - vecs * vals, axis=0)
        if (resid <= RESIDUAL_RTOL * scale).all():
            break
    else:  # pragma: no cover
        warnings.warn(
            f"eigenpair residual {resid.max():.3g} exceeds "
            f"{RESIDUAL_RTOL:g} * ||S|| = {RESIDUAL_RTOL * scale:.3g}",
            RuntimeWarning,
            stacklevel=3,
        )
    return vals, vecs, resid


def _normalize_signs(vecs: NDArray[np.float64]) -> NDArray[np.float64]:
    # flip each column so its largest-magnitude entry is positive (first on ties)
    lead = np.argmax(np.abs(vecs), axis=0)
    signs = np.where(vecs[lead, np.arange(vecs.shape[1])] < 0, -1.0, 1.0)
    return vecs * signs


def classical_mds(dt: GeodesicMatrix, dim: int) -> Embedding:
    """Classical multidimensional scaling of a finite distance matrix.

    ``S = -1/2 J (D o D) J`` with ``J = I - 11^T / n``; the coordinates are
    ``U_d sqrt(Lambda_d)`` over the `dim` largest eigenvalues of ``S``.
    Negative eigenvalues (non-Euclidean input) are clamped to zero, making the
    corresponding coordinate columns exactly zero; the reported eigenvalues are
    the unclamped ones.

    Parameters
    ----------
    dt : GeodesicMatrix
        Finite, symmetric distances with a zero diagonal.
    dim : int
        Target dimension, ``1 <= dim <= n``.

    Returns
    -------
    Embedding
        Centered coordinates, eigenvalues and eigenvectors.
    """
    n = dt.n
    if not 1 <= dim <= n:
        raise ValueError(f"dim must satisfy 1 <= dim <= n={n}, got {dim}")
    if not dt.is_finite:
        raise ValueError("classical MDS needs finite distances (one component)")
    s = _double_center(dt.g**2)
    vals, vecs, resid = _top_eigenpairs(s, dim)
    vecs = _normalize_signs(vecs)
    positive = vals > 0
    coords = np.zeros((n, dim))
    coords[:, positive] = vecs[:, positive] * np.sqrt(vals[positive])
    # round-off leaves tiny negative eigenvalues on exact Euclidean input
    floor = -RESIDUAL_RTOL * max(abs(float(vals[0])), np.finfo(float).tiny)
    if (significant := int(np.count_nonzero(vals < floor))):
        warnings.warn(
            f"{significant} of the top {dim} eigenvalues are negative; their "
            "coordinates are set to zero",
            UserWarning,
            stacklevel=2,
        )
    return Embedding(
        coords=coords,
        eigenvalues=vals.copy(),
        kept_indices=np.arange(n, dtype=np.int64),
        vectors=vecs,
        residuals=resid,
    )


def embed_dimensions(dt: GeodesicMatrix, dims: Sequence[int]) -> dict[int, Embedding]:
    """Embeddings for several dimensions from a single eigendecomposition."""
    if not dims:
        return {}
    full = classical_mds(dt, max(dims))
    return {d: full.leading(d) for d in dims}


def out_of_sample(
    train_geodesics: GeodesicMatrix,
    train_embedding: Embedding,
    new_to_train: ArrayLike,
) -> NDArray[np.float64]:
    """Project new points into an existing MDS embedding.

    For a new point with squared distances ``a`` to the training points::

        k_i = -1/2 (a_i - mean(a) - mean_j(D_ji^2) + mean(D^2))
        y_c = sum_i U_ic k_i / sqrt(lambda_c)

    which reproduces the training coordinates exactly when ``a`` is a row of the
    training distances.  Coordinates with nonpositive eigenvalue are zero.

    Parameters
    ----------
    train_geodesics : GeodesicMatrix
        The (finite) distances the embedding was computed from.
    train_embedding : Embedding
        Output of `classical_mds` on `train_geodesics`.
    new_to_train : ArrayLike
        ``(n,)`` or ``(m, n)`` distances from the new point(s) to the training
        points, in training order.

    Returns
    -------
    NDArray
        ``(m, dim)`` coordinates.
    """
    n = train_geodesics.n
    if train_embedding.n != n:
        raise ShapeMismatch(
            f"embedding has {train_embedding.n} points but geodesics have {n}"
        )
    a = np.atleast_2d(np.asarray(new_to_train, dtype=np.float64))
    if a.ndim != 2 or a.shape[1] != n:
        raise ShapeMismatch(
            f"expected distances to {n} training points, got shape {a.shape}"
        )
    if (a < 0).any():
        raise ValueError("distances must be nonnegative")
    a = a**2
    col_mean = (train_geodesics.g**2).mean(axis=0)
    grand = col_mean.mean()
    kern = -0.5 * (a - a.mean(axis=1, keepdims=True) - col_mean[None, :] + grand)
    vals = train_embedding.eigenvalues
    positive = vals > 0
    out = np.zeros((a.shape[0], train_embedding.dim))
    out[:, positive] = (kern @ train_embedding.vectors[:, positive]) / np.sqrt(
        vals[positive]
    )
    return out


# ---------------------------------------------------------------------------
# composed pipeline


def isomap_with_geodesics(
    d: Dissimilarity, neighborhood: Neighborhood, dim: int
) -> tuple[Embedding, GeodesicMatrix]:
    """Like `isomap`, also returning the geodesics of the embedded component."""
    if d.n == 1:
        graph = NeighborGraph.empty(1)
    else:
        graph = neighborhood.build(d)
    geo = geodesic_distances(graph)
    sub, kept = largest_component(geo)
    if kept.size < d.n:
        if kept.size < dim + 1:
            raise EmptyComponent(int(kept.size), dim)
        warnings.warn(
            f"neighborhood graph has {geo.n_components} components; embedding the "
            f"largest ({kept.size} of {d.n} points)",
            UserWarning,
            stacklevel=2,
        )
    emb = classical_mds(sub, dim).with_kept_indices(kept)
    return emb, sub


def isomap(d: Dissimilarity, neighborhood: Neighborhood, dim: int) -> Embedding:
    """Embed `d` with Isomap.

    Builds the neighborhood graph, computes Floyd-Warshall geodesics, keeps the
    largest connected component and runs classical MDS on it.

    Parameters
    ----------
    d : Dissimilarity
        Pairwise dissimilarities (ideally a metric).
    neighborhood : Neighborhood
        Graph construction rule.
    dim : int
        Target dimension.

    Raises
    ------
    EmptyComponent
        If the graph is disconnected and its largest component has fewer than
        ``dim + 1`` points.
    """
    return isomap_with_geodesics(d, neighborhood, dim)[0]
