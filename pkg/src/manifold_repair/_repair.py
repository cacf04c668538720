"""Increase-only metric repair.

The repair pass visits every entry once, in a fixed order, and raises it just
enough to satisfy the triangle inequalities through already-visited points:

```
for k in range(n):
    for i in range(n):
        D[i, k] = max(D[i, k], max(D[i, j] - D[j, k] for j < i))
        D[k, i] = D[i, k]
```

A single pass is not guaranteed to produce a metric, so `repair_to_fixpoint`
repeats it until nothing moves and then verifies the result with `check_metric`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, NamedTuple

import numpy as np
from psygnal import Signal, SignalGroup

from ._exceptions import FixpointNotReached, ShapeMismatch
from ._masked import Dissimilarity, _frozen
from ._numba import HAS_NUMBA, njit

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

__all__ = [
    "RepairDelta",
    "RepairEvents",
    "Violation",
    "ViolationReport",
    "check_metric",
    "default_tolerance",
    "iomr_fixed_pass",
    "repair_to_fixpoint",
]

DEFAULT_MAX_ITERS = 20
DEFAULT_RELATIVE_TOL = 1e-9


class RepairEvents(SignalGroup):
    """Progress signals emitted by `repair_to_fixpoint`.

    Attributes
    ----------
    pass_finished : Signal[int, float]
        Emitted after each pass with the 1-based pass number and the largest
        change of any entry during that pass.
    converged : Signal[int]
        Emitted with the number of passes once the output is verified.
    """

    pass_finished = Signal(int, float)
    converged = Signal(int)


@dataclass(frozen=True, eq=False, init=False)
class RepairDelta:
    """The nonnegative, symmetric increase matrix ``P`` added by repair."""

    p: NDArray[np.float64]

    def __init__(self, p: ArrayLike) -> None:
        arr = np.array(p, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ShapeMismatch(f"repair delta must be square, got shape {arr.shape}")
        if (arr < 0).any():
            raise ValueError("repair delta must be nonnegative (increase-only)")
        if (np.diagonal(arr) != 0).any():
            raise ValueError("repair delta diagonal must be zero")
        if not np.array_equal(arr, arr.T):
            raise ValueError("repair delta must be exactly symmetric")
        object.__setattr__(self, "p", _frozen(arr))

    @classmethod
    def zeros(cls, n: int) -> RepairDelta:
        return cls(np.zeros((n, n)))

    @property
    def l0(self) -> int:
        """Number of strictly positive entries in the upper triangle."""
        return int(np.count_nonzero(np.triu(self.p, k=1) > 0))

    @property
    def l1(self) -> float:
        """Sum of the entries in the upper triangle."""
        return float(np.triu(self.p, k=1).sum())

    def __add__(self, other: RepairDelta) -> RepairDelta:
        return RepairDelta(self.p + other.p)

    def __repr__(self) -> str:
        return f"RepairDelta(n={self.p.shape[0]}, l0={self.l0})"


class Violation(NamedTuple):
    """A triangle ``d[i, j] > d[i, k] + d[k, j] + tol`` with its slack."""

    i: int
    k: int
    j: int
    slack: float


@dataclass(frozen=True)
class ViolationReport:
    """Triangle violations of a dissimilarity matrix.

    `triples` is ordered lexicographically by ``(i, k, j)`` and may be truncated
    (see `check_metric`), but `count` and `max_slack` always describe every
    violation.
    """

    triples: list[Violation] = field(default_factory=list)
    max_slack: float = 0.0
    count: int = 0

    def __len__(self) -> int:
        return self.count

    def __bool__(self) -> bool:
        return self.count > 0

    @property
    def truncated(self) -> bool:
        return len(self.triples) < self.count

    def to_json_lines(self) -> str:
        """Serialize the listed triples as JSON lines ``{"i", "j", "k", "slack"}``."""
        return "".join(
            json.dumps(
                {"i": v.i, "j": v.j, "k": v.k, "slack": v.slack}, sort_keys=True
            )
            + "\n"
            for v in self.triples
        )


def default_tolerance(d: Dissimilarity) -> float:
    """Default repair tolerance: ``1e-9 * max(d)``."""
    return DEFAULT_RELATIVE_TOL * d.max


def check_metric(
    d: Dissimilarity, tol: float = 0.0, max_violations: int | None = None
) -> ViolationReport:
    """Enumerate triangle violations ``d[i, j] - d[i, k] - d[k, j] > tol``.

    Every ordered triple with ``i < j`` is checked (``O(n^3)``).

    Parameters
    ----------
    d : Dissimilarity
        The matrix to check.
    tol : float
        Slack allowed before a triple counts as a violation, by default 0.
    max_violations : int, optional
        If given, at most this many triples are listed in the report (the first
        ones in ``(i, k, j)`` order).  `count` and `max_slack` stay exact.

    Returns
    -------
    ViolationReport
        Empty if and only if `d` satisfies every triangle inequality within `tol`.
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    a = d.d
    n = d.n
    triples: list[Violation] = []
    count = 0
    max_slack = 0.0
    for i in range(n - 1):
        # slack[k, j - i - 1] = d[i, j] - d[i, k] - d[k, j] for j > i
        slack = a[i, None, i + 1 :] - a[i, :, None] - a[:, i + 1 :]
        bad = slack > tol
        nbad = int(np.count_nonzero(bad))
        if not nbad:
            continue
        count += nbad
        max_slack = max(max_slack, float(slack[bad].max()))
        if max_violations is not None and len(triples) >= max_violations:
            continue
        ks, js = np.nonzero(bad)  # row-major: sorted by (k, j)
        for k, j in zip(ks.tolist(), js.tolist()):
            if max_violations is not None and len(triples) >= max_violations:
                break
            triples.append(Violation(i, k, j + i + 1, float(slack[k, j])))
    return ViolationReport(triples, max_slack, count)


@njit(cache=True)
def _iomr_pass_kernel(dh: NDArray[np.float64]) -> None:  # pragma: no cover
    n = dh.shape[0]
    for k in range(n):
        for i in range(1, n):
            best = dh[i, k]
            raised = False
            for j in range(i):
                v = dh[i, j] - dh[j, k]
                if v > best:
                    best = v
                    raised = True
            if raised:
                dh[i, k] = best
                dh[k, i] = best


def _iomr_pass_numpy(dh: NDArray[np.float64]) -> None:
    n = dh.shape[0]
    for k in range(n):
        for i in range(1, n):
            cand = (dh[i, :i] - dh[:i, k]).max()
            if cand > dh[i, k]:
                dh[i, k] = cand
                dh[k, i] = cand


def _iomr_pass_inplace(dh: NDArray[np.float64], use_numba: bool | None = None) -> None:
    if use_numba is None:
        use_numba = HAS_NUMBA
    if use_numba:
        _iomr_pass_kernel(dh)
    else:
        _iomr_pass_numpy(dh)


def iomr_fixed_pass(d: Dissimilarity) -> tuple[Dissimilarity, RepairDelta]:
    """Run one increase-only repair pass.

    Entries are visited with ``k`` outer and ``i`` inner; each raised entry is
    mirrored immediately so the working matrix stays symmetric.  Entries that are
    not raised keep their exact input value.

    Parameters
    ----------
    d : Dissimilarity
        The matrix to repair.

    Returns
    -------
    tuple[Dissimilarity, RepairDelta]
        The repaired matrix ``D_hat >= D`` and the increase ``D_hat - D``.
    """
    if d.n <= 2:
        return d, RepairDelta.zeros(d.n)
    dh = d.d.copy()
    _iomr_pass_inplace(dh)
    return Dissimilarity(dh), RepairDelta(dh - d.d)


def repair_to_fixpoint(
    d: Dissimilarity,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float | None = None,
    *,
    events: RepairEvents | None = None,
) -> tuple[Dissimilarity, RepairDelta, int]:
    """Repeat `iomr_fixed_pass` until no entry moves by more than `tol`.

    Parameters
    ----------
    d : Dissimilarity
        The matrix to repair.
    max_iters : int
        Maximum number of passes, by default 20.
    tol : float, optional
        Convergence and verification tolerance. By default ``1e-9 * max(d)``.
    events : RepairEvents, optional
        Signal group notified after every pass.

    Returns
    -------
    tuple[Dissimilarity, RepairDelta, int]
        The repaired matrix, the cumulative increase, and the number of passes.

    Raises
    ------
    FixpointNotReached
        If triangle violations larger than `tol` remain after the last pass.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be >= 1, got {max_iters}")
    if tol is None:
        tol = default_tolerance(d)
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")

    work = d.d.copy()
    iterations = 0
    for iterations in range(1, max_iters + 1):
        if d.n <= 2:
            change = 0.0
        else:
            before = work.copy()
            _iomr_pass_inplace(work)
            change = float((work - before).max())
        if events is not None:
            events.pass_finished.emit(iterations, change)
        if change <= tol:
            break

    repaired = Dissimilarity(work) if d.n > 2 else d
    report = check_metric(repaired, tol, max_violations=100)
    if report:
        raise FixpointNotReached(report, iterations)
    if events is not None:
        events.converged.emit(iterations)
    return repaired, RepairDelta(work - d.d), iterations
