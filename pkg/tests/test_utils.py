import logging

import pytest

from manifold_repair import (
    Dissimilarity,
    MonteCarloEvents,
    PipelineEvents,
    RepairEvents,
    repair_to_fixpoint,
)
from manifold_repair.utils import log_events


def test_log_events(caplog: pytest.LogCaptureFixture) -> None:
    events = RepairEvents()
    caplog.set_level(logging.DEBUG, logger="manifold_repair")
    with log_events(events):
        events.pass_finished.emit(1, 0.25)
        events.converged.emit(2)
    assert caplog.messages == ["pass_finished(1, 0.25)", "converged(2)"]
    assert all(r.levelno == logging.DEBUG for r in caplog.records)


def test_log_events_disconnects(caplog: pytest.LogCaptureFixture) -> None:
    events = MonteCarloEvents()
    caplog.set_level(logging.DEBUG, logger="manifold_repair")
    with log_events(events):
        pass
    events.batch_finished.emit(1, 2)
    assert not caplog.records
    assert len(events.batch_finished) == 0


def test_log_events_many_groups(caplog: pytest.LogCaptureFixture) -> None:
    pipe, repair = PipelineEvents(), RepairEvents()
    logger = logging.getLogger("test_utils")
    caplog.set_level(logging.INFO, logger="test_utils")
    with log_events(pipe, repair, logger=logger, level=logging.INFO):
        pipe.stage_started.emit("repair")
        repair.converged.emit(1)
        pipe.stage_finished.emit("repair", 1 / 3)
    assert caplog.messages == [
        "stage_started('repair')",
        "converged(1)",
        "stage_finished('repair', 0.333333)",
    ]
    assert {r.name for r in caplog.records} == {"test_utils"}


def test_log_repair_progress(caplog: pytest.LogCaptureFixture) -> None:
    events = RepairEvents()
    d = Dissimilarity([[0.0, 1.0, 5.0], [1.0, 0.0, 1.0], [5.0, 1.0, 0.0]])
    caplog.set_level(logging.DEBUG, logger="manifold_repair")
    with log_events(events):
        _, _, iterations = repair_to_fixpoint(d, events=events)
    assert caplog.messages[-1] == f"converged({iterations})"
    assert caplog.messages[0].startswith("pass_finished(1, ")
