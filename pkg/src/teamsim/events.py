"""Session event log: layered, ordered, written as JSON lines.

Every observable step of a session becomes one event with a gap-free
sequence number.  Events are flushed to disk as they happen so a crashed
session leaves a valid transcript prefix.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

LAYERS = ("operational", "tactical", "strategic", "cooperational")

_LAYER_BY_KIND = {
    "task_selected": "strategic",
    "user_utterance": "strategic",
    "routing": "strategic",
    "goal_reached": "strategic",
    "agent_reply": "tactical",
    "tool_executed": "operational",
    "tool_rejected": "operational",
    "world_change": "operational",
    "abort": "operational",
    "error": "operational",
}

# An utterance about how the robots should work with each other sits above
# plain strategy in the interaction stack.
_COOPERATION_PHRASES = ("together", "team up", "help each other", "each other", "coordinate", "cooperate")


def classify_layer(kind: str, payload: Mapping[str, object]) -> str:
    if kind == "user_utterance":
        text = str(payload.get("text", "")).lower()
        if any(phrase in text for phrase in _COOPERATION_PHRASES):
            return "cooperational"
    try:
        return _LAYER_BY_KIND[kind]
    except KeyError:
        raise ValueError(f"unknown event kind {kind!r}") from None


@dataclass(frozen=True)
class SessionEvent:
    seq: int
    sim_time: float
    wall_time: float
    layer: str
    kind: str
    agent: str | None
    payload: Mapping[str, object]

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "sim_time": round(self.sim_time, 6),
            "wall_time": self.wall_time,
            "layer": self.layer,
            "kind": self.kind,
            "agent": self.agent,
            "payload": dict(self.payload),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SessionEvent":
        return cls(
            seq=data["seq"],
            sim_time=data["sim_time"],
            wall_time=data["wall_time"],
            layer=data["layer"],
            kind=data["kind"],
            agent=data.get("agent"),
            payload=data.get("payload", {}),
        )


class EventLog:
    """Appends events in order and streams them to listeners."""

    def __init__(self, path: Path | None = None, clock: Callable[[], float] = time.time):
        self.path = path
        self._clock = clock
        self._file = path.open("a", encoding="utf-8") if path else None
        self._next_seq = 1
        self.listeners: list[Callable[[SessionEvent], None]] = []
        self.events: list[SessionEvent] = []

    def append(self, sim_time: float, kind: str, agent: str | None, payload: Mapping[str, object]) -> SessionEvent:
        event = SessionEvent(
            seq=self._next_seq,
            sim_time=sim_time,
            wall_time=self._clock(),
            layer=classify_layer(kind, payload),
            kind=kind,
            agent=agent,
            payload=payload,
        )
        self._next_seq += 1
        self.events.append(event)
        if self._file is not None:
            self._file.write(json.dumps(event.to_json(), ensure_ascii=False) + "\n")
            self._file.flush()
        for listener in list(self.listeners):
            listener(event)
        return event

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


def read_transcript(path: Path) -> list[SessionEvent]:
    events = []
    lines = path.read_text(encoding="utf-8").split("\n")
    for index, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError:
            # A crash can leave a half-written final line; keep the prefix.
            if index == len(lines) - 1:
                break
            raise
        events.append(SessionEvent.from_json(data))
    return events
