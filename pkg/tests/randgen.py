"""Seeded random generators for protocol values, shared across test modules."""

import math
import random
import string

from molxr import protocol as P


def rand_f32(rng, lo=-100.0, hi=100.0):
    return P.f32(rng.uniform(lo, hi))

def rand_vec3(rng):
    return P.Vec3(rand_f32(rng), rand_f32(rng), rand_f32(rng))

def rand_quat(rng):
    # uniform on the 4-sphere, normalized in f64 then quantized
    while True:
        q = [rng.gauss(0, 1) for _ in range(4)]
        n = math.sqrt(sum(c * c for c in q))
        if n > 1e-3:
            return P.UnitQuat(*(c / n for c in q))

def rand_transform(rng):
    return P.Transform(rand_vec3(rng), rand_quat(rng), P.f32(rng.uniform(0.01, 100.0)))

def rand_rigid(rng):
    return P.RigidPose(rand_vec3(rng), rand_quat(rng))

def rand_avatar(rng, left=None, right=None):
    left = rng.random() < 0.5 if left is None else left
    right = rng.random() < 0.5 if right is None else right
    return P.AvatarPose(rand_rigid(rng),
                        rand_rigid(rng) if left else None,
                        rand_rigid(rng) if right else None)

def rand_name(rng, n=8):
    return "".join(rng.choice(string.ascii_letters) for _ in range(n))

def rand_object_record(rng):
    return P.ObjectRecord(
        object_id=rng.randrange(1, 1000),
        asset_url=f"/assets/{rand_name(rng, 12)}.glb",
        label=rand_name(rng),
        transform=rand_transform(rng),
        grabbable=rng.random() < 0.5,
        holder_id=rng.randrange(1, 64) if rng.random() < 0.3 else None,
    )

def rand_participant_record(rng):
    return P.ParticipantRecord(
        participant_id=rng.randrange(1, 64),
        display_name=rand_name(rng),
        role=rng.choice(["admin", "vr_active", "passive"]),
        color_index=rng.randrange(8),
    )

def rand_snapshot(rng):
    return P.SnapshotRecord(
        grab_enabled=rng.random() < 0.5,
        objects=tuple(rand_object_record(rng) for _ in range(rng.randrange(3))),
        participants=tuple(rand_participant_record(rng) for _ in range(rng.randrange(3))),
    )


def _seq(rng):
    return rng.randrange(0, 2**32)


_MAKERS = {
    P.Hello: lambda rng: P.Hello(seq=_seq(rng)),
    P.CreateRoom: lambda rng: P.CreateRoom(
        seq=_seq(rng), preset_id=rand_name(rng) if rng.random() < 0.5 else None),
    P.RoomCreated: lambda rng: P.RoomCreated(
        seq=_seq(rng), room_id=rand_name(rng), admin_token=rand_name(rng, 22),
        vr_code=rand_name(rng, 6).upper(), guest_code=rand_name(rng, 6).upper()),
    P.JoinRoom: lambda rng: P.JoinRoom(
        seq=_seq(rng), room_id=rand_name(rng), code=rand_name(rng, 6).upper(),
        display_name=rand_name(rng)),
    P.JoinAccepted: lambda rng: P.JoinAccepted(
        seq=_seq(rng), participant_id=rng.randrange(1, 64),
        role=rng.choice(["admin", "vr_active", "passive"]),
        color_index=rng.randrange(8), snapshot=rand_snapshot(rng)),
    P.JoinRejected: lambda rng: P.JoinRejected(seq=_seq(rng), reason=rand_name(rng)),
    P.StateSnapshot: lambda rng: (lambda s: P.StateSnapshot(
        seq=_seq(rng), grab_enabled=s.grab_enabled, objects=s.objects,
        participants=s.participants))(rand_snapshot(rng)),
    P.AddObject: lambda rng: P.AddObject(
        seq=_seq(rng), asset_url=f"/assets/{rand_name(rng)}.glb",
        label=rand_name(rng), initial_transform=rand_transform(rng)),
    P.RemoveObject: lambda rng: P.RemoveObject(seq=_seq(rng), object_id=rng.randrange(1, 1000)),
    P.SetGrabEnabled: lambda rng: P.SetGrabEnabled(seq=_seq(rng), enabled=rng.random() < 0.5),
    P.GrabRequest: lambda rng: P.GrabRequest(seq=_seq(rng), object_id=rng.randrange(1, 1000)),
    P.GrabGranted: lambda rng: P.GrabGranted(
        seq=_seq(rng), object_id=rng.randrange(1, 1000), holder_id=rng.randrange(1, 64)),
    P.GrabDenied: lambda rng: P.GrabDenied(
        seq=_seq(rng), object_id=rng.randrange(1, 1000),
        holder_id=rng.randrange(1, 64) if rng.random() < 0.5 else None),
    P.GrabRelease: lambda rng: P.GrabRelease(seq=_seq(rng), object_id=rng.randrange(1, 1000)),
    P.AudioSignal: lambda rng: P.AudioSignal(
        seq=_seq(rng), to_participant=rng.randrange(1, 64), payload=rand_name(rng, 40)),
    P.ParticipantJoined: lambda rng: P.ParticipantJoined(
        seq=_seq(rng), participant=rand_participant_record(rng)),
    P.ParticipantLeft: lambda rng: P.ParticipantLeft(
        seq=_seq(rng), participant=rand_participant_record(rng)),
    P.Heartbeat: lambda rng: P.Heartbeat(seq=_seq(rng)),
    P.Error: lambda rng: P.Error(seq=_seq(rng), code=rand_name(rng), detail=rand_name(rng, 20)),
}

assert set(_MAKERS) == set(P.CONTROL_VARIANTS)


def rand_control(rng, cls=None):
    cls = cls or rng.choice(P.CONTROL_VARIANTS)
    return _MAKERS[cls](rng)


def rand_pose_packet(rng):
    if rng.random() < 0.5:
        return P.ObjectTransformPacket(rng.randrange(0, 2**16), rand_transform(rng))
    return P.AvatarPosePacket(rng.randrange(0, 2**16), rand_avatar(rng))


def make_rng(seed):
    return random.Random(seed)
