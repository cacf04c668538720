from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from ._repair import ViolationReport


class ManifoldRepairError(Exception):
    """Base class for all errors raised by manifold_repair."""

    __module__ = "manifold_repair"


class ShapeMismatch(ManifoldRepairError, ValueError):
    """Raised when two arrays that must share a shape do not."""

    __module__ = "manifold_repair"


class FormatError(ManifoldRepairError, ValueError):
    """Raised when an input file cannot be parsed."""

    __module__ = "manifold_repair"


class EmptyComponent(ManifoldRepairError, ValueError):
    """Raised when the largest graph component is too small to embed."""

    __module__ = "manifold_repair"

    def __init__(self, size: int, dim: int) -> None:
        self.size = size
        self.dim = dim
        super().__init__(
            f"largest connected component has {size} point(s); embedding in "
            f"{dim} dimension(s) needs at least {dim + 1}"
        )


class DegenerateReference(ManifoldRepairError, ValueError):
    """Raised when a reference configuration has zero (centered) norm."""

    __module__ = "manifold_repair"


class InfeasibleParameters(ManifoldRepairError, ValueError):
    """Raised when theory parameters violate a feasibility constraint.

    Parameters
    ----------
    constraint : str
        Name of the violated constraint (e.g. ``"epsilon"`` or ``"gamma"``).
    message : str
        Human readable description of the violation.
    """

    __module__ = "manifold_repair"

    def __init__(self, constraint: str, message: str) -> None:
        self.constraint = constraint
        super().__init__(f"infeasible {constraint}: {message}")


class FixpointNotReached(ManifoldRepairError, RuntimeError):
    """Raised when iterated metric repair leaves triangle violations behind.

    Parameters
    ----------
    report : ViolationReport
        The violations remaining after the last pass.
    iterations : int
        Number of repair passes that were run.
    """

    __module__ = "manifold_repair"

    def __init__(self, report: ViolationReport, iterations: int) -> None:
        self.report = report
        self.iterations = iterations
        super().__init__(_build_fixpoint_msg(report, iterations))


def _build_fixpoint_msg(report: ViolationReport, iterations: int) -> str:
    s = "es" if iterations != 1 else ""
    msg = (
        f"metric repair did not reach a fixpoint after {iterations} pass{s}: "
        f"{report.count} triangle violation(s) remain, max slack "
        f"{report.max_slack:.6g}"
    )
    if report.triples:
        i, k, j, slack = report.triples[0]
        msg += f"\n  first violation: d[{i}, {j}] > d[{i}, {k}] + d[{k}, {j}]"
        msg += f" by {slack:.6g}"
    return msg
