"""Network layer: endpoints, fan-out, coalescing, backpressure, sweeps."""

import asyncio
import json
import os
import signal
import subprocess
import sys
import time

import aiohttp
import pytest

from molxr import protocol as P
from molxr.harness.scenario import parse_metrics
from molxr.server import BadConfig, Connection, ServerConfig, SyncServer
from fakes import FakeClock
from server_utils import RawClient, connect, join_client, make_room, running_server


def run(coro):
    return asyncio.run(coro)


def test_metrics_counters_monotone_and_renderable():
    from molxr.server import Metrics
    metrics = Metrics()
    last = 0
    for i in range(10):
        metrics.inc("ws_bytes_in_total", 37, conn=3, plane="pose")
        value = metrics.get("ws_bytes_in_total", conn=3, plane="pose")
        assert value > last
        last = value
    metrics.inc("big_total", 12_345_678)
    text = metrics.render([("rooms_live", {}, 2)])
    assert 'ws_bytes_in_total{conn="3",plane="pose"} 370' in text
    assert "big_total 12345678" in text
    assert "rooms_live 2" in text
    parsed = parse_metrics(text)
    assert parsed[("big_total", ())] == 12_345_678


def test_sweep_of_empty_server():
    async def scenario():
        async with running_server() as server:
            assert server.sweep_once() == []
    run(scenario())


def test_health_endpoint():
    async def scenario():
        async with running_server() as server:
            async with aiohttp.ClientSession() as http:
                async with http.get(server.url + "/healthz") as resp:
                    assert resp.status == 200
                    assert (await resp.text()).strip() == "ok 0"
    run(scenario())


def test_missing_manifest_is_bad_config():
    with pytest.raises(BadConfig):
        SyncServer(ServerConfig(manifest_path="/nonexistent/manifest.json"))


def test_cli_bad_manifest_exits_nonzero(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "molxr.server", "--port", "0",
         "--manifest", str(tmp_path / "absent.json")],
        capture_output=True, text=True, timeout=30)
    assert proc.returncode != 0
    assert "manifest" in proc.stderr


def test_sigterm_drains_rooms_with_room_closed():
    async def scenario():
        proc = subprocess.Popen(
            [sys.executable, "-m", "molxr.server", "--port", "0"],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
        try:
            line = proc.stdout.readline()
            assert line.startswith("listening on "), line
            url = "http://" + line.split()[-1].strip()
            http = aiohttp.ClientSession()
            ws = await http.ws_connect(url + "/ws")
            client = RawClient(http, ws)
            await client.send(P.CreateRoom())
            created = await client.recv()
            await client.send(P.JoinRoom(room_id=created.room_id,
                                         code=created.admin_token, display_name="a"))
            await client.recv()
            proc.send_signal(signal.SIGTERM)
            # room_closed error must arrive before the socket closes
            got = await client.recv_until(
                lambda m: isinstance(m, P.Error) and m.code == "room_closed")
            assert got.code == "room_closed"
            final = await asyncio.wait_for(ws.receive(), 5.0)
            assert final.type in (aiohttp.WSMsgType.CLOSE, aiohttp.WSMsgType.CLOSED,
                                  aiohttp.WSMsgType.CLOSING)
            await client.close()
            assert await asyncio.to_thread(proc.wait, 10) == 0
        finally:
            if proc.poll() is None:
                proc.kill()
                proc.wait(timeout=10)
    run(scenario())


def test_join_fan_out_excludes_joiner():
    async def scenario():
        async with running_server() as server:
            admin, created = await make_room(server)
            c2, acc2 = await join_client(server, created.room_id, created.vr_code, "bob")
            # admin hears about bob; bob does not hear about himself
            joined = await admin.recv()
            assert isinstance(joined, P.ParticipantJoined)
            assert joined.participant.display_name == "bob"
            c3, acc3 = await join_client(server, created.room_id, created.guest_code, "eve")
            # both existing participants hear about eve, exactly once
            for client in (admin, c2):
                msg = await client.recv()
                assert isinstance(msg, P.ParticipantJoined)
                assert msg.participant.display_name == "eve"
            for client in (admin, c2, c3):
                await client.close()
    run(scenario())


def test_pose_coalescing_last_value_wins():
    async def scenario():
        # slow tick: nothing flushes until tick_once is called by hand
        async with running_server(tick_hz=0.2) as server:
            admin, created = await make_room(server, preset_id="demo")
            mover, acc = await join_client(server, created.room_id, created.vr_code, "m")
            await admin.recv_until(lambda m: isinstance(m, P.ParticipantJoined))
            await mover.send(P.GrabRequest(object_id=1))
            await mover.recv_until(lambda m: isinstance(m, P.GrabGranted))
            transforms = [P.Transform(P.Vec3(i, 0, 0), P.UnitQuat.identity(), 1.0)
                          for i in range(100)]
            for t in transforms:
                await mover.send_bytes(P.encode_pose(P.ObjectTransformPacket(1, t)))
            await asyncio.sleep(0.3)   # let ingestion settle, still within tick
            sent = server.tick_once()
            assert sent == 1
            got = await admin.recv_until(lambda m: isinstance(m, P.ObjectTransformPacket))
            assert got.transform == transforms[-1]
            coalesced = server.metrics.get("pose_coalesced_total", room=created.room_id)
            assert coalesced == 99
            await admin.close()
            await mover.close()
    run(scenario())


def test_sender_never_echoed():
    async def scenario():
        async with running_server(tick_hz=50) as server:
            admin, created = await make_room(server)
            mover, acc = await join_client(server, created.room_id, created.vr_code, "m")
            await admin.recv_until(lambda m: isinstance(m, P.ParticipantJoined))
            pose = P.AvatarPosePacket(acc.participant_id,
                                      P.AvatarPose(P.RigidPose.identity()))
            await mover.send_bytes(P.encode_pose(pose))
            got = await admin.recv_until(lambda m: isinstance(m, P.AvatarPosePacket))
            assert got.participant_id == acc.participant_id
            # the mover must not receive its own pose back
            with pytest.raises(TimeoutError):
                await mover.recv_until(lambda m: isinstance(m, P.AvatarPosePacket),
                                       timeout=0.4)
            await admin.close()
            await mover.close()
    run(scenario())


def test_malformed_binary_dropped_connection_alive():
    async def scenario():
        async with running_server() as server:
            admin, created = await make_room(server)
            await admin.send_bytes(b"\x01\x02\x03\x04\x05\x06\x07")
            await asyncio.sleep(0.1)
            dropped = server.metrics.get("pose_dropped_total", reason="malformed",
                                         room=created.room_id)
            assert dropped == 1
            # connection still works
            await admin.send(P.Heartbeat())
            async with aiohttp.ClientSession() as http:
                async with http.get(server.url + "/healthz") as resp:
                    assert "ok 1" in await resp.text()
            await admin.close()
    run(scenario())


def test_three_malformed_control_frames_disconnect():
    async def scenario():
        async with running_server() as server:
            client = await connect(server)
            for i in range(3):
                await client.send_raw_text("this is not json")
                got = await client.recv()
                assert isinstance(got, P.Error) and got.code == "malformed"
            final = await asyncio.wait_for(client.ws.receive(), 5.0)
            assert final.type in (aiohttp.WSMsgType.CLOSE, aiohttp.WSMsgType.CLOSED)
            await client.close()
    run(scenario())


def test_version_mismatch_and_unknown_kind_reported():
    async def scenario():
        async with running_server() as server:
            client = await connect(server)
            await client.send_raw_text(json.dumps({"v": 9, "seq": 1, "kind": "heartbeat"}))
            got = await client.recv()
            assert got.code == "version_mismatch"
            await client.send_raw_text(json.dumps({"v": 1, "seq": 2, "kind": "teleport"}))
            got = await client.recv()
            assert got.code == "unknown_kind"
            await client.close()
    run(scenario())


def test_non_increasing_seq_is_offense():
    async def scenario():
        async with running_server() as server:
            client = await connect(server)
            await client.send_raw_text(json.dumps({"v": 1, "seq": 5, "kind": "heartbeat"}))
            await client.send_raw_text(json.dumps({"v": 1, "seq": 5, "kind": "heartbeat"}))
            got = await client.recv()
            assert got.code == "malformed"
            await client.close()
    run(scenario())


def test_backpressure_drops_poses_first_then_disconnects():
    async def scenario():
        async with running_server(egress_limit_bytes=1000) as server:
            class NeverDrains:
                async def send_str(self, data):
                    await asyncio.sleep(3600)

                async def send_bytes(self, data):
                    await asyncio.sleep(3600)

                async def close(self, **kwargs):
                    pass
            conn = Connection(999, NeverDrains(), server)
            server.connections[999] = conn
            conn.writer_task = asyncio.create_task(conn.write_loop())
            pose = b"\x00" * 96
            for _ in range(20):
                conn.enqueue_pose(pose)
            dropped = server.metrics.get("pose_dropped_total",
                                         reason="backpressure", room="-")
            assert dropped > 0
            assert conn.queued_bytes <= 1000
            assert not conn.closing
            # control overflow: the connection must go down, not lose control data
            big = P.AudioSignal(to_participant=1, payload="x" * 2000)
            conn.enqueue_control(big)
            assert conn.closing
            assert server.metrics.get("control_overflow_disconnects_total") == 1
            await asyncio.sleep(0.05)
    run(scenario())


def test_heartbeat_sweep_releases_locks():
    async def scenario():
        clock = FakeClock()
        async with running_server(clock=clock, sweep_interval=3600) as server:
            admin, created = await make_room(server, preset_id="demo")
            holder, acc = await join_client(server, created.room_id, created.vr_code, "h")
            await holder.send(P.GrabRequest(object_id=1))
            await holder.recv_until(lambda m: isinstance(m, P.GrabGranted))
            room = server.registry.room(created.room_id)
            assert room.object(1).holder_id == acc.participant_id

            # both clients heartbeat at t+5: neither swept
            clock.advance(5)
            await admin.send(P.Heartbeat())
            await holder.send(P.Heartbeat())
            await asyncio.sleep(0.1)
            assert server.sweep_once() == []

            # holder falls silent 16s; admin keeps heartbeating
            clock.advance(16)
            await admin.send(P.Heartbeat())
            await asyncio.sleep(0.1)
            swept = server.sweep_once()
            assert len(swept) == 1
            await asyncio.sleep(0.2)
            assert room.object(1).holder_id is None
            assert acc.participant_id not in room.participants
            await admin.close()
            await holder.close()
    run(scenario())


def test_admin_grace_expiry_over_server():
    async def scenario():
        clock = FakeClock()
        async with running_server(clock=clock, sweep_interval=3600) as server:
            admin, created = await make_room(server)
            guest, _ = await join_client(server, created.room_id, created.guest_code, "g")
            await admin.close()
            await asyncio.sleep(0.2)
            room = server.registry.rooms.get(created.room_id)
            assert room is not None and room.admin_grace_deadline is not None

            clock.advance(60)
            await guest.send(P.Heartbeat())
            await asyncio.sleep(0.1)
            assert server.sweep_once() == []
            assert created.room_id in server.registry.rooms

            clock.advance(61)
            await guest.send(P.Heartbeat())
            await asyncio.sleep(0.1)
            server.sweep_once()
            got = await guest.recv_until(
                lambda m: isinstance(m, P.Error) and m.code == "room_closed")
            assert got.code == "room_closed"
            assert created.room_id not in server.registry.rooms
            await guest.close()
    run(scenario())


def test_admin_rejoin_within_grace_over_server():
    async def scenario():
        clock = FakeClock()
        async with running_server(clock=clock, sweep_interval=3600) as server:
            admin, created = await make_room(server)
            guest, _ = await join_client(server, created.room_id, created.guest_code, "g")
            await admin.close()
            await asyncio.sleep(0.2)
            clock.advance(60)
            await guest.send(P.Heartbeat())
            admin2, acc2 = await join_client(server, created.room_id,
                                             created.admin_token, "admin-back")
            assert acc2.role == "admin"
            clock.advance(600)
            await guest.send(P.Heartbeat())
            await admin2.send(P.Heartbeat())
            await asyncio.sleep(0.1)
            server.sweep_once()
            assert created.room_id in server.registry.rooms
            await guest.close()
            await admin2.close()
    run(scenario())


def test_audio_signal_routed_to_target_only():
    async def scenario():
        async with running_server() as server:
            admin, created = await make_room(server)
            talker, t_acc = await join_client(server, created.room_id,
                                              created.vr_code, "talker")
            guest, g_acc = await join_client(server, created.room_id,
                                             created.guest_code, "guest")
            await talker.send(P.AudioSignal(to_participant=g_acc.participant_id,
                                            payload="offer-sdp"))
            got = await guest.recv_until(lambda m: isinstance(m, P.AudioSignal))
            assert got.payload == "offer-sdp"
            # passive cannot signal
            await guest.send(P.AudioSignal(to_participant=t_acc.participant_id,
                                           payload="offer"))
            err = await guest.recv_until(lambda m: isinstance(m, P.Error))
            assert err.code == "permission_denied"
            for c in (admin, talker, guest):
                await c.close()
    run(scenario())


def test_asset_upload_and_fetch():
    async def scenario():
        from molxr.pdb2asset import build_builtin_glb
        data = build_builtin_glb("co2", quality=1)
        async with running_server() as server:
            admin, created = await make_room(server)
            async with aiohttp.ClientSession() as http:
                # no/bad token
                async with http.post(server.url + "/assets", data=data) as resp:
                    assert resp.status == 401
                headers = {"X-Admin-Token": created.admin_token}
                async with http.post(server.url + "/assets", data=data,
                                     headers=headers) as resp:
                    assert resp.status == 201
                    url = (await resp.json())["asset_url"]
                async with http.get(server.url + url) as resp:
                    assert resp.status == 200
                    assert await resp.read() == data
                    assert "immutable" in resp.headers["Cache-Control"]
                async with http.post(server.url + "/assets", data=b"garbage",
                                     headers=headers) as resp:
                    assert resp.status == 400
                async with http.get(server.url + "/assets/" + "0" * 64 + ".glb") as resp:
                    assert resp.status == 404
            await admin.close()
    run(scenario())


def test_idle_room_zero_pose_egress():
    async def scenario():
        async with running_server() as server:
            admin, created = await make_room(server)
            guest, _ = await join_client(server, created.room_id, created.guest_code, "g")
            await admin.recv_until(lambda m: isinstance(m, P.ParticipantJoined))
            await asyncio.sleep(1.0)
            async with aiohttp.ClientSession() as http:
                async with http.get(server.url + "/metrics") as resp:
                    metrics = parse_metrics(await resp.text())
            pose_out = sum(v for (name, labels), v in metrics.items()
                           if name == "ws_bytes_out_total"
                           and dict(labels).get("plane") == "pose")
            assert pose_out == 0
            await admin.close()
            await guest.close()
    run(scenario())


def test_observer_ingress_bounded_by_tick_rate():
    async def scenario():
        async with running_server(tick_hz=20) as server:
            admin, created = await make_room(server)
            mover, acc = await join_client(server, created.room_id, created.vr_code, "m")
            received = []

            async def observe():
                try:
                    while True:
                        got = await admin.recv(timeout=3)
                        if isinstance(got, P.AvatarPosePacket):
                            received.append(time.monotonic())
                except (TimeoutError, asyncio.TimeoutError):
                    pass

            observer = asyncio.create_task(observe())
            duration = 2.0
            start = time.monotonic()
            k = 0
            while time.monotonic() - start < duration:
                pose = P.AvatarPosePacket(
                    acc.participant_id,
                    P.AvatarPose(P.RigidPose(P.Vec3(k * 0.01, 1.6, 0),
                                             P.UnitQuat.identity())))
                await mover.send_bytes(P.encode_pose(pose))
                k += 1
                await asyncio.sleep(1 / 30)
            await asyncio.sleep(0.3)
            observer.cancel()
            # coalescing bound: at most tick_hz updates per second, plus
            # one tick of slack; sender pushed ~60 in 2s
            assert k >= 40
            assert len(received) <= 20 * duration + 2
            assert len(received) >= 10
            await admin.close()
            await mover.close()
    run(scenario())
