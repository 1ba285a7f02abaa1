"""Generate cross-implementation test fixtures for the browser client.

Records a real server session from a passive observer's point of view
(raw text and binary frames, in arrival order) together with the
server's final room state as the oracle, plus randomized codec vectors
for both protocol planes. Run from the repository root:

    python3 frontend/scripts/gen_fixtures.py
"""

import asyncio
import json
import random
from pathlib import Path

import aiohttp

from molxr import protocol as P
from molxr.server import ServerConfig, SyncServer

import sys
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
from randgen import make_rng, rand_control, rand_pose_packet  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def control_vectors(rng, per_variant=8):
    vectors = []
    for cls in P.CONTROL_VARIANTS:
        for _ in range(per_variant):
            msg = rand_control(rng, cls)
            vectors.append({
                "kind": msg.KIND,
                "encoded": P.encode_control(msg).decode("utf-8"),
            })
    return vectors


def pose_vectors(rng, count=200):
    vectors = []
    for _ in range(count):
        packet = rand_pose_packet(rng)
        data = P.encode_pose(packet)
        if isinstance(packet, P.ObjectTransformPacket):
            decoded = {
                "type": "object",
                "object_id": packet.object_id,
                "transform": packet.transform.to_json(),
            }
        else:
            decoded = {
                "type": "avatar",
                "participant_id": packet.participant_id,
                "pose": packet.pose.to_json(),
            }
        vectors.append({"hex": data.hex(), "decoded": decoded})
    return vectors


class Recorder:
    def __init__(self, http, ws):
        self.http = http
        self.ws = ws
        self.seq = 0
        self.frames = []

    async def send(self, msg):
        self.seq += 1
        msg.seq = self.seq
        await self.ws.send_str(P.encode_control(msg).decode())

    async def drain(self, duration=0.4):
        try:
            while True:
                frame = await asyncio.wait_for(self.ws.receive(), duration)
                if frame.type == aiohttp.WSMsgType.TEXT:
                    self.frames.append({"type": "text", "data": frame.data})
                elif frame.type == aiohttp.WSMsgType.BINARY:
                    self.frames.append({"type": "binary", "hex": frame.data.hex()})
                else:
                    break
        except asyncio.TimeoutError:
            pass


async def record_stream(rng):
    server = SyncServer(ServerConfig(port=0, tick_hz=200))
    await server.start()
    out = {}
    try:
        async with aiohttp.ClientSession() as http:
            admin_ws = await http.ws_connect(server.url + "/ws")
            admin = Recorder(http, admin_ws)
            await admin.send(P.CreateRoom(preset_id="symmetry"))
            created = P.decode_control((await admin_ws.receive()).data.encode())
            await admin.send(P.JoinRoom(room_id=created.room_id,
                                        code=created.admin_token, display_name="host"))
            await admin_ws.receive()   # join_accepted

            observer_ws = await http.ws_connect(server.url + "/ws")
            observer = Recorder(http, observer_ws)
            await observer.send(P.JoinRoom(room_id=created.room_id,
                                           code=created.guest_code,
                                           display_name="observer"))
            accepted_frame = await observer_ws.receive()
            out["join_accepted"] = accepted_frame.data

            mover_ws = await http.ws_connect(server.url + "/ws")
            mover = Recorder(http, mover_ws)
            await mover.send(P.JoinRoom(room_id=created.room_id,
                                        code=created.vr_code, display_name="mover"))
            mover_accepted = P.decode_control((await mover_ws.receive()).data.encode())
            mover_pid = mover_accepted.participant_id

            async def pace():
                await asyncio.sleep(0.02)

            await mover.send(P.GrabRequest(object_id=1))
            await pace()
            for i in range(18):
                t = P.Transform(
                    P.Vec3(rng.uniform(-2, 2), rng.uniform(0.5, 2.2), rng.uniform(-2, 2)),
                    P.UnitQuat(0, 0, 0, 1), P.f32(rng.uniform(0.5, 2.0)))
                await mover_ws.send_bytes(P.encode_pose(P.ObjectTransformPacket(1, t)))
                await pace()
            await mover.send(P.GrabRelease(object_id=1))
            await pace()

            await mover.send(P.GrabRequest(object_id=2))
            await pace()
            for i in range(14):
                t = P.Transform(
                    P.Vec3(rng.uniform(-1, 1), rng.uniform(1.0, 1.8), rng.uniform(-2, 0)),
                    P.UnitQuat(0, 0, 0, 1), P.f32(rng.uniform(0.8, 1.5)))
                await mover_ws.send_bytes(P.encode_pose(P.ObjectTransformPacket(2, t)))
                await pace()

            for i in range(8):
                pose = P.AvatarPose(P.RigidPose(
                    P.Vec3(rng.uniform(-2, 2), 1.6, rng.uniform(-2, 2)),
                    P.UnitQuat(0, 0, 0, 1)))
                await mover_ws.send_bytes(P.encode_pose(P.AvatarPosePacket(mover_pid, pose)))
                await pace()

            # admin sweeps grabbing off (releasing the held object), then on
            await admin.send(P.SetGrabEnabled(enabled=False))
            await pace()
            await admin.send(P.SetGrabEnabled(enabled=True))
            await pace()
            await admin.send(P.AddObject(
                asset_url="https://example.org/extra.glb", label="extra",
                initial_transform=P.Transform(P.Vec3(0, 1, 0), P.UnitQuat(0, 0, 0, 1), 1.0)))
            await pace()
            await mover.send(P.GrabRequest(object_id=1))
            await pace()
            for i in range(10):
                t = P.Transform(
                    P.Vec3(rng.uniform(-2, 2), rng.uniform(0.4, 2.0), rng.uniform(-2, 2)),
                    P.UnitQuat(0, 0, 0, 1), P.f32(rng.uniform(0.3, 2.5)))
                await mover_ws.send_bytes(P.encode_pose(P.ObjectTransformPacket(1, t)))
                await pace()
            await mover_ws.close()
            await asyncio.sleep(0.1)

            await observer.drain()
            room = server.registry.room(created.room_id)
            out["frames"] = observer.frames
            out["expected"] = {
                "grab_enabled": room.grab_enabled,
                "objects": {
                    str(oid): {
                        "transform": obj.transform.to_json(),
                        "holder_id": obj.holder_id,
                        "label": obj.label,
                    } for oid, obj in room.objects.items()
                },
                "participant_ids": sorted(room.participants),
            }
            await admin_ws.close()
            await observer_ws.close()
    finally:
        await server.stop()
    return out


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = make_rng(20240)
    (FIXTURES / "control_messages.json").write_text(
        json.dumps(control_vectors(rng), indent=1) + "\n")
    (FIXTURES / "pose_packets.json").write_text(
        json.dumps(pose_vectors(rng), indent=1) + "\n")
    stream = asyncio.run(record_stream(random.Random(99)))
    n_frames = len(stream["frames"])
    assert n_frames >= 50, f"only {n_frames} frames recorded"
    (FIXTURES / "event_stream.json").write_text(json.dumps(stream, indent=1) + "\n")
    print(f"fixtures written: {n_frames} stream frames, "
          f"{len(json.loads((FIXTURES / 'pose_packets.json').read_text()))} pose vectors")


if __name__ == "__main__":
    main()
