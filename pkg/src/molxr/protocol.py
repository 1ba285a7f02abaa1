"""Two-plane wire protocol: JSON control messages and binary pose packets.

The control plane carries session logic (joins, grabs, snapshots, audio
signaling) as UTF-8 JSON text frames, one message per frame:

    {"v": 1, "seq": <u64>, "kind": "<variant>", ...fields}

The pose plane carries high-rate transform updates as fixed-layout
little-endian binary frames:

    type 0x01 (object transform, 35 bytes):
        u8 type | u16 object_id | f32x3 position | f32x4 quat xyzw | f32 scale
    type 0x02 (avatar pose, 33 / 61 / 89 bytes):
        u8 type | u16 participant_id | u16 flags | head f32x7
        [| left hand f32x7] [| right hand f32x7]
        flags bit0 = left hand present, bit1 = right hand present;
        each rigid pose is f32x3 position followed by f32x4 quat xyzw.

All float payloads are 32-bit IEEE-754; value types quantize their
components to f32 on construction so encode/decode round-trips are
bit-exact. Everything in this module is a pure function over values and
safe to call from any number of concurrent contexts.
"""

from __future__ import annotations

import json
import math
import struct
import typing
from dataclasses import dataclass, fields
from typing import ClassVar, Optional

PROTOCOL_VERSION = 1

QUAT_ACCEPT_TOL = 1e-3   # |norm - 1| accepted on ingestion
QUAT_STORE_TOL = 1e-6    # re-normalized below this before storage/broadcast
SCALE_MIN = struct.unpack("<f", struct.pack("<f", 1e-4))[0]
SCALE_MAX = 1e4
MAX_POSE_PACKET_BYTES = 96

_F32 = struct.Struct("<f")


def f32(x: float) -> float:
    """Quantize a Python float to the nearest 32-bit IEEE-754 value."""
    return _F32.unpack(_F32.pack(x))[0]


class ProtocolError(Exception):
    """Base for all wire-format errors."""


class MalformedMessage(ProtocolError):
    """Control frame is not a well-formed message envelope."""


class UnknownKind(ProtocolError):
    """Control message carries an unrecognized variant tag."""


class VersionMismatch(ProtocolError):
    """Control message declares an unsupported protocol version."""


class MalformedPacket(ProtocolError):
    """Pose frame has the wrong size for its declared type/flags."""


class InvalidFloat(ProtocolError):
    """Pose payload contains NaN/Inf or an out-of-range scale."""


class DenormalQuat(ProtocolError):
    """Pose payload quaternion norm is outside the accept tolerance."""


# ---------------------------------------------------------------------------
# Geometry value types
# ---------------------------------------------------------------------------


def _check_finite(name, *values):
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} component not finite: {v!r}")


@dataclass(frozen=True)
class Vec3:
    """A 3-vector of finite 32-bit floats (meters for positions)."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        _check_finite("Vec3", self.x, self.y, self.z)
        object.__setattr__(self, "x", f32(self.x))
        object.__setattr__(self, "y", f32(self.y))
        object.__setattr__(self, "z", f32(self.z))

    def to_json(self):
        return [self.x, self.y, self.z]

    @classmethod
    def from_json(cls, data) -> "Vec3":
        return cls(*data)


@dataclass(frozen=True)
class UnitQuat:
    """Unit quaternion (x, y, z, w) of 32-bit floats.

    Accepts |norm - 1| <= 1e-3 and re-normalizes so the stored norm is
    within 1e-6 of unity; anything further from unit length is rejected.
    """

    x: float
    y: float
    z: float
    w: float

    def __post_init__(self):
        _check_finite("UnitQuat", self.x, self.y, self.z, self.w)
        n = math.sqrt(self.x**2 + self.y**2 + self.z**2 + self.w**2)
        if abs(n - 1.0) > QUAT_ACCEPT_TOL:
            raise ValueError(f"quaternion norm {n} outside unit tolerance")
        if abs(n - 1.0) > QUAT_STORE_TOL:
            object.__setattr__(self, "x", self.x / n)
            object.__setattr__(self, "y", self.y / n)
            object.__setattr__(self, "z", self.z / n)
            object.__setattr__(self, "w", self.w / n)
        object.__setattr__(self, "x", f32(self.x))
        object.__setattr__(self, "y", f32(self.y))
        object.__setattr__(self, "z", f32(self.z))
        object.__setattr__(self, "w", f32(self.w))

    def to_json(self):
        return [self.x, self.y, self.z, self.w]

    @classmethod
    def from_json(cls, data) -> "UnitQuat":
        return cls(*data)

    @staticmethod
    def identity() -> "UnitQuat":
        return UnitQuat(0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class Transform:
    """Position + orientation + uniform scale; the replicated unit."""

    position: Vec3
    orientation: UnitQuat
    scale: float = 1.0

    def __post_init__(self):
        _check_finite("Transform.scale", self.scale)
        s = f32(self.scale)
        if not (SCALE_MIN <= s <= SCALE_MAX):
            raise ValueError(f"scale {self.scale} outside [1e-4, 1e4]")
        object.__setattr__(self, "scale", s)

    def to_json(self):
        return {
            "position": self.position.to_json(),
            "orientation": self.orientation.to_json(),
            "scale": self.scale,
        }

    @classmethod
    def from_json(cls, data) -> "Transform":
        return cls(
            position=Vec3.from_json(data["position"]),
            orientation=UnitQuat.from_json(data["orientation"]),
            scale=data["scale"],
        )

    @staticmethod
    def identity() -> "Transform":
        return Transform(Vec3(0.0, 0.0, 0.0), UnitQuat.identity(), 1.0)


@dataclass(frozen=True)
class RigidPose:
    """Position + orientation, no scale (heads, hands)."""

    position: Vec3
    orientation: UnitQuat

    def to_json(self):
        return {
            "position": self.position.to_json(),
            "orientation": self.orientation.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "RigidPose":
        return cls(
            position=Vec3.from_json(data["position"]),
            orientation=UnitQuat.from_json(data["orientation"]),
        )

    @staticmethod
    def identity() -> "RigidPose":
        return RigidPose(Vec3(0.0, 0.0, 0.0), UnitQuat.identity())


@dataclass(frozen=True)
class AvatarPose:
    """Head pose plus optional hand poses; a user's broadcast embodiment."""

    head: RigidPose
    left_hand: Optional[RigidPose] = None
    right_hand: Optional[RigidPose] = None

    def to_json(self):
        out = {"head": self.head.to_json()}
        if self.left_hand is not None:
            out["left_hand"] = self.left_hand.to_json()
        if self.right_hand is not None:
            out["right_hand"] = self.right_hand.to_json()
        return out

    @classmethod
    def from_json(cls, data) -> "AvatarPose":
        return cls(
            head=RigidPose.from_json(data["head"]),
            left_hand=RigidPose.from_json(data["left_hand"]) if "left_hand" in data else None,
            right_hand=RigidPose.from_json(data["right_hand"]) if "right_hand" in data else None,
        )


# ---------------------------------------------------------------------------
# Wire records (nested payloads of control messages)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParticipantRecord:
    participant_id: int
    display_name: str
    role: str
    color_index: int

    def to_json(self):
        return {
            "participant_id": self.participant_id,
            "display_name": self.display_name,
            "role": self.role,
            "color_index": self.color_index,
        }

    @classmethod
    def from_json(cls, data) -> "ParticipantRecord":
        return cls(
            participant_id=data["participant_id"],
            display_name=data["display_name"],
            role=data["role"],
            color_index=data["color_index"],
        )


@dataclass(frozen=True)
class ObjectRecord:
    object_id: int
    asset_url: str
    label: str
    transform: Transform
    grabbable: bool
    holder_id: Optional[int] = None

    def to_json(self):
        out = {
            "object_id": self.object_id,
            "asset_url": self.asset_url,
            "label": self.label,
            "transform": self.transform.to_json(),
            "grabbable": self.grabbable,
        }
        if self.holder_id is not None:
            out["holder_id"] = self.holder_id
        return out

    @classmethod
    def from_json(cls, data) -> "ObjectRecord":
        return cls(
            object_id=data["object_id"],
            asset_url=data["asset_url"],
            label=data["label"],
            transform=Transform.from_json(data["transform"]),
            grabbable=data["grabbable"],
            holder_id=data.get("holder_id"),
        )


@dataclass(frozen=True)
class SnapshotRecord:
    """Complete late-joiner view of one room."""

    grab_enabled: bool
    objects: tuple
    participants: tuple

    def to_json(self):
        return {
            "grab_enabled": self.grab_enabled,
            "objects": [o.to_json() for o in self.objects],
            "participants": [p.to_json() for p in self.participants],
        }

    @classmethod
    def from_json(cls, data) -> "SnapshotRecord":
        return cls(
            grab_enabled=data["grab_enabled"],
            objects=tuple(ObjectRecord.from_json(o) for o in data["objects"]),
            participants=tuple(ParticipantRecord.from_json(p) for p in data["participants"]),
        )


# ---------------------------------------------------------------------------
# Control messages
# ---------------------------------------------------------------------------

# Field values are encoded as-is except for the types registered here,
# which go through their to_json/from_json pair.
_STRUCTURED = {
    Transform: Transform,
    SnapshotRecord: SnapshotRecord,
    ParticipantRecord: ParticipantRecord,
}


@dataclass(kw_only=True)
class ControlMessage:
    """Base envelope; every message carries a per-connection sequence number."""

    KIND: ClassVar[str] = ""
    seq: int = 0


@dataclass(kw_only=True)
class Hello(ControlMessage):
    KIND: ClassVar[str] = "hello"


@dataclass(kw_only=True)
class CreateRoom(ControlMessage):
    KIND: ClassVar[str] = "create_room"
    preset_id: Optional[str] = None


@dataclass(kw_only=True)
class RoomCreated(ControlMessage):
    KIND: ClassVar[str] = "room_created"
    room_id: str
    admin_token: str
    vr_code: str
    guest_code: str


@dataclass(kw_only=True)
class JoinRoom(ControlMessage):
    KIND: ClassVar[str] = "join_room"
    room_id: str
    code: str
    display_name: str


@dataclass(kw_only=True)
class JoinAccepted(ControlMessage):
    KIND: ClassVar[str] = "join_accepted"
    participant_id: int
    role: str
    color_index: int
    snapshot: SnapshotRecord


@dataclass(kw_only=True)
class JoinRejected(ControlMessage):
    KIND: ClassVar[str] = "join_rejected"
    reason: str


@dataclass(kw_only=True)
class StateSnapshot(ControlMessage):
    KIND: ClassVar[str] = "state_snapshot"
    grab_enabled: bool
    objects: tuple = ()
    participants: tuple = ()

    def to_fields(self):
        return SnapshotRecord(self.grab_enabled, tuple(self.objects), tuple(self.participants)).to_json()

    @classmethod
    def from_fields(cls, seq, data):
        snap = SnapshotRecord.from_json(data)
        return cls(seq=seq, grab_enabled=snap.grab_enabled, objects=snap.objects,
                   participants=snap.participants)


@dataclass(kw_only=True)
class AddObject(ControlMessage):
    KIND: ClassVar[str] = "add_object"
    asset_url: str
    label: str
    initial_transform: Transform


@dataclass(kw_only=True)
class RemoveObject(ControlMessage):
    KIND: ClassVar[str] = "remove_object"
    object_id: int


@dataclass(kw_only=True)
class SetGrabEnabled(ControlMessage):
    KIND: ClassVar[str] = "set_grab_enabled"
    enabled: bool


@dataclass(kw_only=True)
class GrabRequest(ControlMessage):
    KIND: ClassVar[str] = "grab_request"
    object_id: int


@dataclass(kw_only=True)
class GrabGranted(ControlMessage):
    KIND: ClassVar[str] = "grab_granted"
    object_id: int
    holder_id: int


@dataclass(kw_only=True)
class GrabDenied(ControlMessage):
    KIND: ClassVar[str] = "grab_denied"
    object_id: int
    holder_id: Optional[int] = None


@dataclass(kw_only=True)
class GrabRelease(ControlMessage):
    KIND: ClassVar[str] = "grab_release"
    object_id: int


@dataclass(kw_only=True)
class AudioSignal(ControlMessage):
    KIND: ClassVar[str] = "audio_signal"
    to_participant: int
    payload: str


@dataclass(kw_only=True)
class ParticipantJoined(ControlMessage):
    KIND: ClassVar[str] = "participant_joined"
    participant: ParticipantRecord


@dataclass(kw_only=True)
class ParticipantLeft(ControlMessage):
    KIND: ClassVar[str] = "participant_left"
    participant: ParticipantRecord


@dataclass(kw_only=True)
class Heartbeat(ControlMessage):
    KIND: ClassVar[str] = "heartbeat"


@dataclass(kw_only=True)
class Error(ControlMessage):
    KIND: ClassVar[str] = "error"
    code: str
    detail: str = ""


CONTROL_VARIANTS = (
    Hello, CreateRoom, RoomCreated, JoinRoom, JoinAccepted, JoinRejected,
    StateSnapshot, AddObject, RemoveObject, SetGrabEnabled, GrabRequest,
    GrabGranted, GrabDenied, GrabRelease, AudioSignal, ParticipantJoined,
    ParticipantLeft, Heartbeat, Error,
)

_KIND_TO_CLASS = {cls.KIND: cls for cls in CONTROL_VARIANTS}


def _field_to_json(value):
    if isinstance(value, tuple(_STRUCTURED)):
        return value.to_json()
    return value


def _field_from_json(ftype, value):
    for cls in _STRUCTURED:
        if ftype is cls or ftype == Optional[cls]:
            return cls.from_json(value)
    return value


def encode_control(msg: ControlMessage) -> bytes:
    """Encode a control message to its canonical UTF-8 JSON frame.

    The encoding is deterministic (sorted keys, compact separators) and
    omits optional fields whose value is None.
    """
    if hasattr(msg, "to_fields"):
        payload = msg.to_fields()
    else:
        payload = {}
        for f in fields(msg):
            if f.name == "seq":
                continue
            value = getattr(msg, f.name)
            if value is None:
                continue
            payload[f.name] = _field_to_json(value)
    payload["v"] = PROTOCOL_VERSION
    payload["seq"] = msg.seq
    payload["kind"] = msg.KIND
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode_control(data: bytes) -> ControlMessage:
    """Decode a control frame, or raise a ProtocolError.

    The version gate runs before any variant interpretation: a frame with
    v != 1 raises VersionMismatch even if otherwise unparseable.
    """
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedMessage(f"unparseable control frame: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedMessage("control frame is not an object")
    version = obj.pop("v", None)
    if not isinstance(version, int):
        raise MalformedMessage("missing protocol version")
    if version != PROTOCOL_VERSION:
        raise VersionMismatch(f"protocol version {version} != {PROTOCOL_VERSION}")
    kind = obj.pop("kind", None)
    if not isinstance(kind, str):
        raise MalformedMessage("missing message kind")
    cls = _KIND_TO_CLASS.get(kind)
    if cls is None:
        raise UnknownKind(f"unknown control message kind {kind!r}")
    seq = obj.pop("seq", None)
    if not isinstance(seq, int) or seq < 0:
        raise MalformedMessage("missing or invalid sequence number")
    try:
        if hasattr(cls, "from_fields"):
            return cls.from_fields(seq, obj)
        kwargs = {}
        for f in fields(cls):
            if f.name == "seq":
                continue
            if f.name in obj:
                kwargs[f.name] = _field_from_json(_ANNOTATIONS[cls][f.name], obj[f.name])
        return cls(seq=seq, **kwargs)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise MalformedMessage(f"bad fields for {kind!r}: {exc}") from None


# `from __future__ import annotations` stringifies dataclass field types;
# resolve each variant's real annotations once at import.
_ANNOTATIONS = {cls: typing.get_type_hints(cls) for cls in CONTROL_VARIANTS}


# ---------------------------------------------------------------------------
# Pose packets
# ---------------------------------------------------------------------------

POSE_OBJECT = 0x01
POSE_AVATAR = 0x02

_OBJECT_STRUCT = struct.Struct("<BH3f4ff")      # 35 bytes
_AVATAR_HEAD_STRUCT = struct.Struct("<BHH7f")   # 33 bytes
_HAND_STRUCT = struct.Struct("<7f")             # 28 bytes

FLAG_LEFT_HAND = 0x01
FLAG_RIGHT_HAND = 0x02


@dataclass(frozen=True)
class ObjectTransformPacket:
    """Pose-plane packet replicating one scene object's transform."""

    object_id: int
    transform: Transform

    packet_type: ClassVar[int] = POSE_OBJECT

    @property
    def subject_id(self) -> int:
        return self.object_id


@dataclass(frozen=True)
class AvatarPosePacket:
    """Pose-plane packet replicating one participant's avatar pose."""

    participant_id: int
    pose: AvatarPose

    packet_type: ClassVar[int] = POSE_AVATAR

    @property
    def subject_id(self) -> int:
        return self.participant_id


PosePacket = ObjectTransformPacket | AvatarPosePacket


def avatar_packet_size(left_hand: bool, right_hand: bool) -> int:
    """Size law for avatar packets: 33 bytes plus 28 per present hand."""
    return _AVATAR_HEAD_STRUCT.size + _HAND_STRUCT.size * (int(left_hand) + int(right_hand))


def _pack_rigid(pose: RigidPose):
    p, q = pose.position, pose.orientation
    return (p.x, p.y, p.z, q.x, q.y, q.z, q.w)


def encode_pose(packet: PosePacket) -> bytes:
    """Encode a pose packet to its fixed little-endian layout, bit-exact."""
    if isinstance(packet, ObjectTransformPacket):
        t = packet.transform
        p, q = t.position, t.orientation
        return _OBJECT_STRUCT.pack(POSE_OBJECT, packet.object_id,
                                   p.x, p.y, p.z, q.x, q.y, q.z, q.w, t.scale)
    pose = packet.pose
    flags = 0
    if pose.left_hand is not None:
        flags |= FLAG_LEFT_HAND
    if pose.right_hand is not None:
        flags |= FLAG_RIGHT_HAND
    out = bytearray(_AVATAR_HEAD_STRUCT.pack(POSE_AVATAR, packet.participant_id,
                                             flags, *_pack_rigid(pose.head)))
    if pose.left_hand is not None:
        out += _HAND_STRUCT.pack(*_pack_rigid(pose.left_hand))
    if pose.right_hand is not None:
        out += _HAND_STRUCT.pack(*_pack_rigid(pose.right_hand))
    return bytes(out)


def _check_floats(values):
    for v in values:
        if not math.isfinite(v):
            raise InvalidFloat(f"non-finite float in pose payload: {v!r}")


def _quat_from_wire(x, y, z, w) -> UnitQuat:
    n = math.sqrt(x * x + y * y + z * z + w * w)
    if abs(n - 1.0) > QUAT_ACCEPT_TOL:
        raise DenormalQuat(f"quaternion norm {n} outside accept tolerance")
    return UnitQuat(x, y, z, w)


def _rigid_from_wire(vals) -> RigidPose:
    _check_floats(vals)
    return RigidPose(Vec3(vals[0], vals[1], vals[2]),
                     _quat_from_wire(vals[3], vals[4], vals[5], vals[6]))


def decode_pose(data: bytes) -> PosePacket:
    """Decode a pose frame, or raise a ProtocolError.

    Quaternions with |norm - 1| in (1e-6, 1e-3] are re-normalized;
    anything further off raises DenormalQuat. A non-finite float raises
    InvalidFloat, as does a scale outside [1e-4, 1e4].
    """
    if len(data) < 1:
        raise MalformedPacket("empty pose frame")
    ptype = data[0]
    if ptype == POSE_OBJECT:
        if len(data) != _OBJECT_STRUCT.size:
            raise MalformedPacket(
                f"object transform packet must be {_OBJECT_STRUCT.size} bytes, got {len(data)}")
        (_, object_id, px, py, pz, qx, qy, qz, qw, scale) = _OBJECT_STRUCT.unpack(data)
        _check_floats((px, py, pz, qx, qy, qz, qw, scale))
        quat = _quat_from_wire(qx, qy, qz, qw)
        if not (SCALE_MIN <= scale <= SCALE_MAX):
            raise InvalidFloat(f"scale {scale} outside [1e-4, 1e4]")
        return ObjectTransformPacket(object_id, Transform(Vec3(px, py, pz), quat, scale))
    if ptype == POSE_AVATAR:
        if len(data) < _AVATAR_HEAD_STRUCT.size:
            raise MalformedPacket(f"avatar packet too short: {len(data)}")
        head_vals = _AVATAR_HEAD_STRUCT.unpack(data[:_AVATAR_HEAD_STRUCT.size])
        _, participant_id, flags = head_vals[0], head_vals[1], head_vals[2]
        expected = avatar_packet_size(bool(flags & FLAG_LEFT_HAND), bool(flags & FLAG_RIGHT_HAND))
        if flags & ~(FLAG_LEFT_HAND | FLAG_RIGHT_HAND):
            raise MalformedPacket(f"unknown avatar flags 0x{flags:04x}")
        if len(data) != expected:
            raise MalformedPacket(
                f"avatar packet with flags 0x{flags:02x} must be {expected} bytes, got {len(data)}")
        head = _rigid_from_wire(head_vals[3:])
        offset = _AVATAR_HEAD_STRUCT.size
        left = right = None
        if flags & FLAG_LEFT_HAND:
            left = _rigid_from_wire(_HAND_STRUCT.unpack_from(data, offset))
            offset += _HAND_STRUCT.size
        if flags & FLAG_RIGHT_HAND:
            right = _rigid_from_wire(_HAND_STRUCT.unpack_from(data, offset))
        return AvatarPosePacket(participant_id, AvatarPose(head, left, right))
    raise MalformedPacket(f"unknown pose packet type 0x{ptype:02x}")
