"""End-to-end pipelines: MR-Missing and repair of corrupted distances.

`mr_missing` estimates distances from the jointly observed coordinates of a
masked dataset, repairs them into a metric and embeds the result with Isomap.
`repair_corrupted` skips the estimation stage and starts from a (noisy)
dissimilarity matrix; `embed_plain` embeds without any repair.
"""

from __future__ import annotations

import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Any

import numpy as np
from psygnal import Signal, SignalGroup

from ._config import RepairConfig
from ._embedding import Neighborhood, isomap_with_geodesics
from ._masked import Dissimilarity, masked_euclidean, zero_overlap_pairs
from ._repair import RepairDelta, check_metric, default_tolerance, repair_to_fixpoint

if TYPE_CHECKING:
    from collections.abc import Iterator

    from ._embedding import Embedding, GeodesicMatrix
    from ._masked import MaskedDataset
    from ._repair import RepairEvents

__all__ = [
    "Diagnostics",
    "PipelineEvents",
    "PipelineResult",
    "embed_plain",
    "mr_missing",
    "repair_corrupted",
]


class PipelineEvents(SignalGroup):
    """Stage timing signals.

    Attributes
    ----------
    stage_started : Signal[str]
        Emitted with the stage name (``"distances"``, ``"repair"``, ``"embed"``).
    stage_finished : Signal[str, float]
        Emitted with the stage name and its wall time in seconds.
    """

    stage_started = Signal(str)
    stage_finished = Signal(str, float)


@dataclass(frozen=True)
class Diagnostics:
    """Counters collected while running a pipeline."""

    zero_overlap_pairs: int = 0
    repair_iterations: int = 0
    repair_l0: int = 0
    repair_l1: float = 0.0
    violations_before: int | None = None
    dropped_points: list[int] = field(default_factory=list)
    negative_eigenvalues: int = 0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Everything a pipeline computed.

    The embedding is always computed from ``dissimilarity + repair``.
    """

    embedding: Embedding
    dissimilarity: Dissimilarity
    repair: RepairDelta
    diagnostics: Diagnostics
    geodesics: GeodesicMatrix

    @property
    def repaired(self) -> Dissimilarity:
        """The repaired matrix ``D + P``."""
        return self.dissimilarity + self.repair


@contextmanager
def _stage(events: PipelineEvents | None, name: str) -> Iterator[None]:
    if events is None:
        yield
        return
    events.stage_started.emit(name)
    t0 = time.perf_counter()
    yield
    events.stage_finished.emit(name, time.perf_counter() - t0)


def _dropped(n: int, kept: np.ndarray) -> list[int]:
    mask = np.ones(n, dtype=bool)
    mask[kept] = False
    return [int(i) for i in np.flatnonzero(mask)]


def _repair_and_embed(
    d: Dissimilarity,
    neighborhood: Neighborhood,
    dim: int,
    repair_cfg: RepairConfig,
    events: PipelineEvents | None,
    repair_events: RepairEvents | None,
    zero_overlap: int = 0,
) -> PipelineResult:
    tol = default_tolerance(d) if repair_cfg.tol is None else repair_cfg.tol
    with _stage(events, "repair"):
        before = None
        if repair_cfg.count_violations:
            before = check_metric(d, tol, max_violations=0).count
        _, delta, iterations = repair_to_fixpoint(
            d, repair_cfg.max_iters, tol, events=repair_events
        )
    # embed exactly D + P
    repaired = d + delta
    with _stage(events, "embed"):
        emb, geo = isomap_with_geodesics(repaired, neighborhood, dim)
    diag = Diagnostics(
        zero_overlap_pairs=zero_overlap,
        repair_iterations=iterations,
        repair_l0=delta.l0,
        repair_l1=delta.l1,
        violations_before=before,
        dropped_points=_dropped(d.n, emb.kept_indices),
        negative_eigenvalues=emb.negative_eigenvalues,
    )
    return PipelineResult(emb, d, delta, diag, geo)


def mr_missing(
    data: MaskedDataset,
    neighborhood: Neighborhood | None = None,
    dim: int = 2,
    repair_cfg: RepairConfig | None = None,
    *,
    events: PipelineEvents | None = None,
    repair_events: RepairEvents | None = None,
) -> PipelineResult:
    """Embed a dataset with missing entries.

    Distances are computed over jointly observed coordinates, raised into a
    metric with increase-only repair, and embedded with Isomap.

    Parameters
    ----------
    data : MaskedDataset
        Values and presence mask.
    neighborhood : Neighborhood, optional
        Isomap graph rule, by default k-NN with ``k=10``.
    dim : int
        Embedding dimension, by default 2.
    repair_cfg : RepairConfig, optional
        Repair settings, by default ``RepairConfig()``.
    events : PipelineEvents, optional
        Notified at the start and end of every stage.
    repair_events : RepairEvents, optional
        Passed through to `repair_to_fixpoint`.

    Returns
    -------
    PipelineResult
        The embedding and every intermediate.

    Raises
    ------
    FixpointNotReached
        If the repair does not converge.
    EmptyComponent
        If the largest component of the neighborhood graph is too small.
    """
    neighborhood = neighborhood or Neighborhood()
    repair_cfg = repair_cfg or RepairConfig()
    with _stage(events, "distances"):
        d = masked_euclidean(data, warn=False)
        zero = zero_overlap_pairs(data)
    return _repair_and_embed(
        d, neighborhood, dim, repair_cfg, events, repair_events, zero
    )


def repair_corrupted(
    d_corrupted: Dissimilarity,
    neighborhood: Neighborhood | None = None,
    dim: int = 2,
    repair_cfg: RepairConfig | None = None,
    *,
    events: PipelineEvents | None = None,
    repair_events: RepairEvents | None = None,
) -> PipelineResult:
    """Repair a corrupted dissimilarity matrix, then embed it with Isomap.

    Same as `mr_missing` without the distance estimation stage.
    """
    return _repair_and_embed(
        d_corrupted,
        neighborhood or Neighborhood(),
        dim,
        repair_cfg or RepairConfig(),
        events,
        repair_events,
    )


def embed_plain(
    d: Dissimilarity,
    neighborhood: Neighborhood | None = None,
    dim: int = 2,
    *,
    events: PipelineEvents | None = None,
) -> PipelineResult:
    """Embed `d` with Isomap as is, with an all-zero repair."""
    with _stage(events, "embed"):
        emb, geo = isomap_with_geodesics(d, neighborhood or Neighborhood(), dim)
    diag = Diagnostics(
        repair_iterations=0,
        dropped_points=_dropped(d.n, emb.kept_indices),
        negative_eigenvalues=emb.negative_eigenvalues,
    )
    return PipelineResult(emb, d, RepairDelta.zeros(d.n), diag, geo)
