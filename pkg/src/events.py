from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, auto
from typing import Any, Callable, Dict, List, Optional


class EventType(Enum):
    """Enumeration of progress events emitted while a suite runs."""

    SUITE_STARTED = auto()
    CHECK_STARTED = auto()
    CHECK_FINISHED = auto()
    SUITE_FINISHED = auto()


@dataclass(slots=True)
class CheckEvent:
    """Structured data emitted by :func:`src.suites.run_suite`.

    Attributes
    ----------
    type:
        Which stage of the run this event marks.
    data:
        Payload. Recommended keys:
            - ``suite``: name of the running suite.
            - ``check_id``: identifier of the check.
            - ``status``: ``"pass"``, ``"fail"`` or ``"skip"`` once finished.
    timestamp:
        Wall-clock seconds when the event was emitted, or None.
    """

    type: EventType
    data: Dict[str, Any]
    timestamp: Optional[float] = None


EventCallback = Callable[[CheckEvent], None]


def maybe_emit(callback: Optional[EventCallback], event: CheckEvent) -> None:
    if callback is not None:
        callback(event)


class EventRecorder:
    """Records CheckEvent instances into a provided buffer list."""

    def __init__(self, buffer: List[CheckEvent]) -> None:
        self.buffer = buffer

    def __call__(self, event: CheckEvent) -> None:
        self.buffer.append(event)

    def of_type(self, kind: EventType) -> List[CheckEvent]:
        return [e for e in self.buffer if e.type is kind]


__all__ = ["EventType", "CheckEvent", "EventCallback", "EventRecorder", "maybe_emit"]
