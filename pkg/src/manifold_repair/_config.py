"""Validated configuration models.

Every model is a frozen pydantic model; invalid values are rejected with a
`pydantic.ValidationError` (a `ValueError`) before any computation starts.
`RunConfig.resolved()` expands all defaults so a run can be repeated exactly.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field

from ._embedding import Neighborhood

__all__ = [
    "RNG_ALGORITHM",
    "MaskConfig",
    "RepairConfig",
    "RunConfig",
]

RNG_ALGORITHM = "Philox"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class RepairConfig(_Frozen):
    """Settings for `repair_to_fixpoint`.

    Parameters
    ----------
    max_iters : int
        Maximum number of repair passes, by default 20.
    tol : float, optional
        Absolute tolerance. By default ``1e-9 * max(D)`` of the matrix being
        repaired.
    count_violations : bool
        Whether to count triangle violations before repair (an ``O(n^3)``
        check reported in the diagnostics), by default False.
    """

    max_iters: int = Field(20, ge=1)
    tol: float | None = Field(None, ge=0)
    count_violations: bool = False


class MaskConfig(_Frozen):
    """How entries are hidden from a complete dataset."""

    mode: Literal["uniform", "bernoulli"] = "uniform"
    # missing fraction (uniform) or per-entry missing probability (bernoulli)
    rate: float = Field(0.0, ge=0.0, lt=1.0)


class RunConfig(_Frozen):
    """The fully resolved parameters of one CLI invocation."""

    command: str
    seed: int = 0
    threads: int = Field(0, ge=0)
    out_dir: Path = Path(".")
    neighborhood: Neighborhood = Field(default_factory=Neighborhood)
    dim: int = Field(2, ge=1)
    repair: RepairConfig = Field(default_factory=RepairConfig)
    mask: MaskConfig | None = None
    inputs: dict[str, str] = Field(default_factory=dict)
    options: dict[str, Any] = Field(default_factory=dict)
    rng: str = RNG_ALGORITHM
    version: str = ""

    def resolved(self) -> dict[str, Any]:
        """JSON-ready dict of every field, defaults included."""
        return self.model_dump(mode="json")
