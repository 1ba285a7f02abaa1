"""Authoritative, transport-free room state machine.

Rooms, invite codes, the three-role permission model, the scene-object
registry, and grab-lock arbitration all live here. Every mutation flows
through an append-only event log: commands validate against current
state, emit events, and the same ``RoomState.apply_event`` fold that
reconstructs a room from its log also applies live events. That makes
replay deterministic by construction — identical event sequences always
produce identical rooms.

Concurrency contract: all mutations to one room must be serialized by
the caller (the network layer funnels each room's traffic through one
event loop); distinct rooms are independent.
"""

from __future__ import annotations

import secrets
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from .protocol import (
    AvatarPose,
    AvatarPosePacket,
    ObjectRecord,
    ObjectTransformPacket,
    ParticipantRecord,
    SnapshotRecord,
    Transform,
)

# Invite codes: 6 chars, A-Z and 2-9 minus the lookalikes I, O, 0, 1.
CODE_ALPHABET = "ABCDEFGHJKLMNPQRSTUVWXYZ23456789"
CODE_LENGTH = 6
TOKEN_ALPHABET = CODE_ALPHABET + CODE_ALPHABET.lower()
TOKEN_LENGTH = 24

COLOR_PALETTE_SIZE = 8

DEFAULT_ROOM_CAP = 64
DEFAULT_MAX_ROOMS = 256
ADMIN_GRACE_SECONDS = 120.0


class SessionError(Exception):
    """Base for room/participant rule violations."""


class ServerFull(SessionError):
    pass


class RoomClosed(SessionError):
    pass


class BadCode(SessionError):
    pass


class RoomFull(SessionError):
    pass


class AdminSeatTaken(SessionError):
    pass


class NoSuchRoom(SessionError):
    pass


class NoSuchObject(SessionError):
    pass


class NoSuchParticipant(SessionError):
    pass


class NotHolder(SessionError):
    pass


class PermissionDenied(SessionError):
    pass


class InvalidAsset(SessionError):
    pass


class InvalidEvent(SessionError):
    """An event cannot be applied to the current state (corrupt log)."""


class Role(str, Enum):
    ADMIN = "admin"
    VR_ACTIVE = "vr_active"
    PASSIVE = "passive"

    @property
    def can_grab(self) -> bool:
        return self in (Role.ADMIN, Role.VR_ACTIVE)

    @property
    def can_talk(self) -> bool:
        return self in (Role.ADMIN, Role.VR_ACTIVE)


@dataclass
class Participant:
    participant_id: int
    display_name: str
    role: Role
    color_index: int
    last_pose: Optional[AvatarPose] = None
    last_seen: float = 0.0

    def record(self) -> ParticipantRecord:
        return ParticipantRecord(self.participant_id, self.display_name,
                                 self.role.value, self.color_index)


@dataclass
class SceneObject:
    object_id: int
    asset_url: str
    label: str
    transform: Transform
    grabbable: bool = True
    holder_id: Optional[int] = None

    def record(self) -> ObjectRecord:
        return ObjectRecord(self.object_id, self.asset_url, self.label,
                            self.transform, self.grabbable, self.holder_id)


@dataclass(frozen=True)
class Event:
    """One entry of a room's gap-free, append-only event log."""

    seq: int
    t: float
    kind: str
    data: dict

    def to_json(self) -> dict:
        out = {"seq": self.seq, "t": self.t, "kind": self.kind}
        out.update(self.data)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Event":
        obj = dict(obj)
        try:
            seq, t, kind = obj.pop("seq"), obj.pop("t"), obj.pop("kind")
        except KeyError as exc:
            raise InvalidEvent(f"event missing {exc}") from None
        return cls(seq=seq, t=t, kind=kind, data=obj)


@dataclass
class GrabOutcome:
    granted: bool
    holder_id: Optional[int]
    events: list


def _display_name_ok(name: str) -> bool:
    return isinstance(name, str) and 0 < len(name) <= 64


class RoomState:
    """One collaborative room; mutate only through command methods or
    apply_event (replay)."""

    def __init__(self, clock: Callable[[], float] = None, cap: int = DEFAULT_ROOM_CAP,
                 grace_seconds: float = ADMIN_GRACE_SECONDS,
                 asset_validator: Optional[Callable[[str], bool]] = None):
        self._clock = clock or (lambda: 0.0)
        self.cap = cap
        self.grace_seconds = grace_seconds
        self._asset_validator = asset_validator
        self.room_id = ""
        self.vr_code = ""
        self.guest_code = ""
        self.admin_token = ""
        self.preset_id: Optional[str] = None
        self.grab_enabled = True
        self.objects: dict[int, SceneObject] = {}
        self.participants: dict[int, Participant] = {}
        self.created_at = 0.0
        self.closed = False
        self.close_reason: Optional[str] = None
        self.admin_grace_deadline: Optional[float] = None
        self.event_log: list[Event] = []
        self.dropped_transforms = 0
        self.dropped_poses = 0
        self._next_seq = 1
        self._next_object_id = 1
        self._next_participant_id = 1
        self._color_counter = 0

    # -- event fold ---------------------------------------------------------

    def _emit(self, kind: str, data: dict) -> Event:
        ev = Event(seq=self._next_seq, t=self._clock(), kind=kind, data=data)
        self.apply_event(ev)
        return ev

    def apply_event(self, ev: Event) -> None:
        """Fold one event into the state; raises InvalidEvent if the event
        does not follow from the current state (gap, double-hold, ...)."""
        if ev.seq != self._next_seq:
            raise InvalidEvent(f"event seq {ev.seq}, expected {self._next_seq}")
        handler = getattr(self, f"_apply_{ev.kind}", None)
        if handler is None:
            raise InvalidEvent(f"unknown event kind {ev.kind!r}")
        handler(ev)
        self.event_log.append(ev)
        self._next_seq += 1

    def _apply_room_created(self, ev: Event) -> None:
        d = ev.data
        self.room_id = d["room_id"]
        self.vr_code = d["vr_code"]
        self.guest_code = d["guest_code"]
        self.admin_token = d["admin_token"]
        self.preset_id = d.get("preset_id")
        self.grab_enabled = d["grab_enabled"]
        self.created_at = ev.t
        # no admin yet: the same grace window as an admin disconnect
        self.admin_grace_deadline = ev.t + self.grace_seconds
        for obj in d["objects"]:
            o = SceneObject(
                object_id=obj["object_id"],
                asset_url=obj["asset_url"],
                label=obj["label"],
                transform=Transform.from_json(obj["transform"]),
                grabbable=obj["grabbable"],
            )
            if o.object_id in self.objects:
                raise InvalidEvent(f"duplicate object id {o.object_id}")
            self.objects[o.object_id] = o
            self._next_object_id = max(self._next_object_id, o.object_id + 1)

    def _apply_participant_joined(self, ev: Event) -> None:
        d = ev.data
        pid = d["participant_id"]
        if pid in self.participants:
            raise InvalidEvent(f"participant {pid} already present")
        role = Role(d["role"])
        if role is Role.ADMIN and self._admin_connected():
            raise InvalidEvent("second connected admin")
        self.participants[pid] = Participant(
            participant_id=pid, display_name=d["display_name"], role=role,
            color_index=d["color_index"], last_seen=ev.t)
        self._next_participant_id = max(self._next_participant_id, pid + 1)
        self._color_counter += 1
        if role is Role.ADMIN:
            self.admin_grace_deadline = None

    def _apply_participant_left(self, ev: Event) -> None:
        pid = ev.data["participant_id"]
        p = self.participants.pop(pid, None)
        if p is None:
            raise InvalidEvent(f"unknown participant {pid} left")
        if p.role is Role.ADMIN:
            self.admin_grace_deadline = ev.t + self.grace_seconds

    def _apply_object_added(self, ev: Event) -> None:
        d = ev.data
        oid = d["object_id"]
        if oid in self.objects:
            raise InvalidEvent(f"duplicate object id {oid}")
        self.objects[oid] = SceneObject(
            object_id=oid, asset_url=d["asset_url"], label=d["label"],
            transform=Transform.from_json(d["transform"]), grabbable=d["grabbable"])
        self._next_object_id = max(self._next_object_id, oid + 1)

    def _apply_object_removed(self, ev: Event) -> None:
        oid = ev.data["object_id"]
        if oid not in self.objects:
            raise InvalidEvent(f"unknown object {oid} removed")
        del self.objects[oid]

    def _apply_grab_enabled_set(self, ev: Event) -> None:
        enabled = ev.data["enabled"]
        if not enabled and any(o.holder_id is not None for o in self.objects.values()):
            raise InvalidEvent("grab disabled while objects still held")
        self.grab_enabled = enabled

    def _apply_grab_granted(self, ev: Event) -> None:
        oid, pid = ev.data["object_id"], ev.data["holder_id"]
        obj = self.objects.get(oid)
        if obj is None:
            raise InvalidEvent(f"grant on unknown object {oid}")
        if obj.holder_id is not None:
            raise InvalidEvent(f"object {oid} already held by {obj.holder_id}")
        holder = self.participants.get(pid)
        if holder is None or not holder.role.can_grab:
            raise InvalidEvent(f"grant to ineligible participant {pid}")
        if not (self.grab_enabled and obj.grabbable):
            raise InvalidEvent(f"grant while grabbing disabled for object {oid}")
        obj.holder_id = pid

    def _apply_grab_released(self, ev: Event) -> None:
        oid = ev.data["object_id"]
        obj = self.objects.get(oid)
        if obj is None:
            raise InvalidEvent(f"release on unknown object {oid}")
        if obj.holder_id is None:
            raise InvalidEvent(f"release on free object {oid}")
        obj.holder_id = None

    def _apply_object_moved(self, ev: Event) -> None:
        oid = ev.data["object_id"]
        obj = self.objects.get(oid)
        if obj is None:
            raise InvalidEvent(f"move of unknown object {oid}")
        obj.transform = Transform.from_json(ev.data["transform"])

    def _apply_avatar_moved(self, ev: Event) -> None:
        pid = ev.data["participant_id"]
        p = self.participants.get(pid)
        if p is None:
            raise InvalidEvent(f"pose for unknown participant {pid}")
        p.last_pose = AvatarPose.from_json(ev.data["pose"])
        p.last_seen = ev.t

    def _apply_room_closed(self, ev: Event) -> None:
        self.closed = True
        self.close_reason = ev.data.get("reason")

    # -- queries ------------------------------------------------------------

    def _admin_connected(self) -> bool:
        return any(p.role is Role.ADMIN for p in self.participants.values())

    def participant(self, pid: int) -> Participant:
        p = self.participants.get(pid)
        if p is None:
            raise NoSuchParticipant(f"no participant {pid}")
        return p

    def object(self, oid: int) -> SceneObject:
        o = self.objects.get(oid)
        if o is None:
            raise NoSuchObject(f"no object {oid}")
        return o

    def snapshot(self) -> SnapshotRecord:
        """Complete, self-consistent view for late joiners: applying the
        event stream from this point forward reconstructs server state."""
        return SnapshotRecord(
            grab_enabled=self.grab_enabled,
            objects=tuple(self.objects[k].record() for k in sorted(self.objects)),
            participants=tuple(self.participants[k].record() for k in sorted(self.participants)),
        )

    # -- commands -----------------------------------------------------------

    def _check_open(self) -> None:
        if self.closed:
            raise RoomClosed(f"room {self.room_id} is closed")

    def join(self, code: str, display_name: str) -> tuple[Participant, list]:
        """Admit a participant; the code determines the role."""
        self._check_open()
        if code == self.admin_token:
            role = Role.ADMIN
        elif code == self.vr_code:
            role = Role.VR_ACTIVE
        elif code == self.guest_code:
            role = Role.PASSIVE
        else:
            raise BadCode("unrecognized invite code")
        if role is Role.ADMIN and self._admin_connected():
            raise AdminSeatTaken("an admin is already connected")
        if len(self.participants) >= self.cap:
            raise RoomFull(f"room at capacity {self.cap}")
        if not _display_name_ok(display_name):
            raise BadCode("display name must be 1-64 characters")
        pid = self._next_participant_id
        color = self._color_counter % COLOR_PALETTE_SIZE
        ev = self._emit("participant_joined", {
            "participant_id": pid, "display_name": display_name,
            "role": role.value, "color_index": color})
        return self.participants[pid], [ev]

    def request_grab(self, pid: int, oid: int) -> GrabOutcome:
        """First processed request wins; losers learn the holder's id."""
        self._check_open()
        p = self.participant(pid)
        obj = self.object(oid)
        allowed = (self.grab_enabled and obj.grabbable and p.role.can_grab
                   and obj.holder_id is None)
        if not allowed:
            return GrabOutcome(False, obj.holder_id, [])
        ev = self._emit("grab_granted", {"object_id": oid, "holder_id": pid})
        return GrabOutcome(True, pid, [ev])

    def release_grab(self, pid: int, oid: int) -> list:
        self._check_open()
        obj = self.object(oid)
        if obj.holder_id != pid:
            raise NotHolder(f"object {oid} not held by {pid}")
        return [self._emit("grab_released", {"object_id": oid})]

    def apply_object_transform(self, pid: int, packet: ObjectTransformPacket) -> bool:
        """Accept iff the sender currently holds the object (last-writer-
        wins); anything else is a counted drop, never an error."""
        if self.closed:
            self.dropped_transforms += 1
            return False
        obj = self.objects.get(packet.object_id)
        if obj is None or obj.holder_id != pid:
            self.dropped_transforms += 1
            return False
        self._emit("object_moved", {
            "object_id": packet.object_id, "transform": packet.transform.to_json()})
        return True

    def apply_avatar_pose(self, pid: int, packet: AvatarPosePacket) -> bool:
        """Accept for any present participant reporting its own pose."""
        if self.closed or packet.participant_id != pid or pid not in self.participants:
            self.dropped_poses += 1
            return False
        self._emit("avatar_moved", {
            "participant_id": pid, "pose": packet.pose.to_json()})
        return True

    def set_grab_enabled(self, pid: int, enabled: bool) -> list:
        """Admin only; disabling releases every held object."""
        self._check_open()
        p = self.participant(pid)
        if p.role is not Role.ADMIN:
            raise PermissionDenied("only the admin toggles grabbing")
        events = []
        if not enabled:
            for oid in sorted(self.objects):
                if self.objects[oid].holder_id is not None:
                    events.append(self._emit("grab_released", {"object_id": oid}))
        events.append(self._emit("grab_enabled_set", {"enabled": enabled}))
        return events

    def add_object(self, pid: int, asset_url: str, label: str,
                   initial: Transform) -> tuple[SceneObject, list]:
        self._check_open()
        p = self.participant(pid)
        if p.role is not Role.ADMIN:
            raise PermissionDenied("only the admin adds objects")
        if self._asset_validator is not None and not self._asset_validator(asset_url):
            raise InvalidAsset(f"asset url failed validation: {asset_url}")
        oid = self._next_object_id
        ev = self._emit("object_added", {
            "object_id": oid, "asset_url": asset_url, "label": label,
            "transform": initial.to_json(), "grabbable": True})
        return self.objects[oid], [ev]

    def remove_object(self, pid: int, oid: int) -> list:
        self._check_open()
        p = self.participant(pid)
        if p.role is not Role.ADMIN:
            raise PermissionDenied("only the admin removes objects")
        obj = self.object(oid)
        events = []
        if obj.holder_id is not None:
            events.append(self._emit("grab_released", {"object_id": oid}))
        events.append(self._emit("object_removed", {"object_id": oid}))
        return events

    def handle_disconnect(self, pid: int) -> list:
        """Release the leaver's locks, remove them, start admin grace if
        the admin left."""
        if self.closed or pid not in self.participants:
            return []
        p = self.participants[pid]
        events = []
        for oid in sorted(self.objects):
            if self.objects[oid].holder_id == pid:
                events.append(self._emit("grab_released", {"object_id": oid}))
        events.append(self._emit("participant_left", {
            "participant_id": pid, "display_name": p.display_name,
            "role": p.role.value, "color_index": p.color_index}))
        return events

    def route_audio_signal(self, from_id: int, to_id: int, payload: str) -> Participant:
        """Validate an audio-signaling relay; talking requires Admin or
        VR-active, anyone may receive. Returns the target participant."""
        self._check_open()
        sender = self.participant(from_id)
        target = self.participant(to_id)
        if not sender.role.can_talk:
            raise PermissionDenied("passive participants cannot talk")
        return target

    def close(self, reason: str) -> list:
        if self.closed:
            return []
        return [self._emit("room_closed", {"reason": reason})]


def replay_events(events: Iterable[Event], cap: int = DEFAULT_ROOM_CAP,
                  grace_seconds: float = ADMIN_GRACE_SECONDS) -> RoomState:
    """Fold an event log into a fresh room; raises InvalidEvent on any
    gap or inconsistency."""
    room = RoomState(cap=cap, grace_seconds=grace_seconds)
    for ev in events:
        room.apply_event(ev)
    return room


class RoomRegistry:
    """All live rooms of one server: creation, code uniqueness, lookup,
    and the admin-grace sweep."""

    def __init__(self, clock: Callable[[], float] = None,
                 max_rooms: int = DEFAULT_MAX_ROOMS, room_cap: int = DEFAULT_ROOM_CAP,
                 grace_seconds: float = ADMIN_GRACE_SECONDS,
                 rng=None, asset_validator: Optional[Callable[[str], bool]] = None):
        self._clock = clock or (lambda: 0.0)
        self.max_rooms = max_rooms
        self.room_cap = room_cap
        self.grace_seconds = grace_seconds
        self._rng = rng or secrets.SystemRandom()
        self._asset_validator = asset_validator
        self.rooms: dict[str, RoomState] = {}
        self._live_codes: set[str] = set()

    def _fresh_code(self, length: int = CODE_LENGTH, alphabet: str = CODE_ALPHABET) -> str:
        while True:
            code = "".join(self._rng.choice(alphabet) for _ in range(length))
            if code not in self._live_codes:
                self._live_codes.add(code)
                return code

    def create_room(self, preset=None) -> RoomState:
        """Open a fresh room, optionally populated from a preset manifest
        entry; grabbing starts enabled."""
        if len(self.rooms) >= self.max_rooms:
            raise ServerFull(f"server at capacity {self.max_rooms}")
        room = RoomState(clock=self._clock, cap=self.room_cap,
                         grace_seconds=self.grace_seconds,
                         asset_validator=self._asset_validator)
        room_id = self._fresh_code(8)
        objects = []
        if preset is not None:
            for i, obj in enumerate(preset.objects, start=1):
                objects.append({
                    "object_id": i,
                    "asset_url": obj.asset_url,
                    "label": obj.label,
                    "transform": obj.transform.to_json(),
                    "grabbable": obj.grabbable,
                })
        room.apply_event(Event(seq=1, t=self._clock(), kind="room_created", data={
            "room_id": room_id,
            "vr_code": self._fresh_code(),
            "guest_code": self._fresh_code(),
            "admin_token": "".join(self._rng.choice(TOKEN_ALPHABET) for _ in range(TOKEN_LENGTH)),
            "preset_id": preset.preset_id if preset is not None else None,
            "grab_enabled": True,
            "objects": objects,
        }))
        self.rooms[room_id] = room
        return room

    def room(self, room_id: str) -> RoomState:
        room = self.rooms.get(room_id)
        if room is None:
            raise NoSuchRoom(f"no room {room_id}")
        return room

    def admin_tokens(self) -> set[str]:
        return {r.admin_token for r in self.rooms.values()}

    def close_room(self, room_id: str, reason: str) -> list:
        room = self.rooms.pop(room_id, None)
        if room is None:
            return []
        for code in (room.vr_code, room.guest_code, room.room_id):
            self._live_codes.discard(code)
        return room.close(reason)

    def sweep(self, now: float) -> list[tuple[RoomState, list]]:
        """Close rooms whose admin-grace window expired; returns the
        (room, close events) pairs for the caller to notify participants."""
        closed = []
        for room_id in list(self.rooms):
            room = self.rooms[room_id]
            if room._admin_connected():
                continue
            if room.admin_grace_deadline is not None and now > room.admin_grace_deadline:
                events = self.close_room(room_id, "admin absent beyond grace window")
                closed.append((room, events))
        return closed
