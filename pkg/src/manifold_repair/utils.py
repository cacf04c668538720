"""Helpers for observing the progress events emitted by pipelines."""

from __future__ import annotations

import logging
from contextlib import ExitStack, contextmanager
from typing import TYPE_CHECKING

from psygnal.utils import monitor_events

if TYPE_CHECKING:
    from collections.abc import Iterator

    from psygnal import EmissionInfo, SignalGroup

__all__ = ["log_events"]


@contextmanager
def log_events(
    *groups: SignalGroup,
    logger: logging.Logger | None = None,
    level: int = logging.DEBUG,
) -> Iterator[None]:
    """Log every emission of the given signal groups while the block runs.

    Each emission is logged as ``"<signal>(<args>)"``.

    Parameters
    ----------
    *groups : SignalGroup
        Groups to monitor, e.g. a `RepairEvents` and a `PipelineEvents`.
    logger : logging.Logger, optional
        Target logger, by default the ``manifold_repair`` logger.
    level : int
        Log level of the messages, by default DEBUG.
    """
    log = logger or logging.getLogger("manifold_repair")

    def _log(info: EmissionInfo) -> None:
        args = ", ".join(
            f"{a:.6g}" if isinstance(a, float) else repr(a) for a in info.args
        )
        log.log(level, "%s(%s)", info.signal.name, args)

    with ExitStack() as stack:
        for group in groups:
            stack.enter_context(monitor_events(group, _log))
        yield
