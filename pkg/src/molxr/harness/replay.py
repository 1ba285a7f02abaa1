"""Offline event-log replay: fold a recorded log back into a room."""

from __future__ import annotations

import json
from pathlib import Path

from ..session import Event, InvalidEvent, RoomState, replay_events


class CorruptLog(Exception):
    """The log has a gap, an impossible transition, or unreadable entries."""


def replay(events) -> RoomState:
    """Deterministically reconstruct a room from its event log."""
    try:
        return replay_events(events)
    except InvalidEvent as exc:
        raise CorruptLog(str(exc)) from None


def load_event_log(path, room_id=None) -> list:
    """Read a newline-delimited JSON event log written by the server;
    optionally filter to one room."""
    events = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptLog(f"line {lineno}: {exc}") from None
        this_room = obj.pop("room", None)
        if room_id is not None and this_room != room_id:
            continue
        try:
            events.append(Event.from_json(obj))
        except InvalidEvent as exc:
            raise CorruptLog(f"line {lineno}: {exc}") from None
    return events
