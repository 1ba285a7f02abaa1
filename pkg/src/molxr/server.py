"""The network service: one websocket endpoint for both protocol planes,
plus HTTP endpoints for health, metrics, and assets.

Text frames on /ws carry control messages, binary frames carry pose
packets. All mutations of one room happen on the single server event
loop, which realizes the session layer's single-writer contract without
locks. Outbound traffic goes through a per-connection queue drained by
a writer task; pose packets are coalesced per broadcast tick so each
client sees at most tick_hz updates per subject per second, and a slow
consumer loses pose packets before control messages.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import signal
import sys
import tempfile
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from aiohttp import WSMsgType, web

from . import content, protocol, session
from .protocol import (
    AddObject,
    AudioSignal,
    ControlMessage,
    CreateRoom,
    Error,
    GrabDenied,
    GrabGranted,
    GrabRelease,
    GrabRequest,
    Heartbeat,
    Hello,
    JoinAccepted,
    JoinRejected,
    JoinRoom,
    ParticipantJoined,
    ParticipantLeft,
    RemoveObject,
    RoomCreated,
    SetGrabEnabled,
    StateSnapshot,
)

DEFAULT_PORT = 8080
DEFAULT_TICK_HZ = 20
HEARTBEAT_TIMEOUT = 15.0
HEARTBEAT_SWEEP_INTERVAL = 1.0
EGRESS_LIMIT_BYTES = 256 * 1024
MALFORMED_CONTROL_LIMIT = 3


class BadConfig(Exception):
    pass


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = DEFAULT_PORT
    manifest_path: Optional[str] = None
    tick_hz: float = DEFAULT_TICK_HZ
    max_rooms: int = session.DEFAULT_MAX_ROOMS
    room_cap: int = session.DEFAULT_ROOM_CAP
    event_log: Optional[str] = None
    assets_dir: Optional[str] = None
    static_dir: Optional[str] = None
    egress_limit_bytes: int = EGRESS_LIMIT_BYTES
    heartbeat_timeout: float = HEARTBEAT_TIMEOUT
    sweep_interval: float = HEARTBEAT_SWEEP_INTERVAL
    admin_grace_seconds: float = session.ADMIN_GRACE_SECONDS
    clock: callable = time.monotonic


class Metrics:
    """Monotonic labeled counters, rendered in `name{labels} value` lines."""

    def __init__(self):
        self._counters: dict[tuple, float] = {}

    def inc(self, name: str, value: float = 1, **labels):
        key = (name, tuple(sorted(labels.items())))
        self._counters[key] = self._counters.get(key, 0) + value

    def get(self, name: str, **labels) -> float:
        return self._counters.get((name, tuple(sorted(labels.items()))), 0)

    def render(self, extra_gauges=()) -> str:
        lines = []
        for (name, labels), value in sorted(self._counters.items()):
            lines.append(_metric_line(name, labels, value))
        for name, labels, value in extra_gauges:
            lines.append(_metric_line(name, tuple(sorted(labels.items())), value))
        return "\n".join(lines) + "\n"


def _metric_line(name, labels, value) -> str:
    rendered = str(int(value)) if float(value).is_integer() else repr(float(value))
    if labels:
        inner = ",".join(f'{k}="{v}"' for k, v in labels)
        return f"{name}{{{inner}}} {rendered}"
    return f"{name} {rendered}"


class Connection:
    """One websocket client: outbound queue, counters, heartbeat state."""

    def __init__(self, conn_id: int, ws, server: "SyncServer"):
        self.conn_id = conn_id
        self.ws = ws
        self.server = server
        self.room_id: Optional[str] = None
        self.participant_id: Optional[int] = None
        self.queue: deque = deque()
        self.queued_bytes = 0
        self.wake = asyncio.Event()
        self.writer_task: Optional[asyncio.Task] = None
        self.last_heartbeat = server.config.clock()
        self.malformed_control = 0
        self.last_inbound_seq = -1
        self.out_seq = 0
        self.closing = False

    @property
    def bound(self) -> bool:
        return self.participant_id is not None

    def next_seq(self) -> int:
        self.out_seq += 1
        return self.out_seq

    def enqueue_control(self, msg: ControlMessage) -> None:
        msg.seq = self.next_seq()
        data = protocol.encode_control(msg)
        if self.queued_bytes + len(data) > self.server.config.egress_limit_bytes:
            # control overflow: the client is too far behind to stay correct
            self.server.metrics.inc("control_overflow_disconnects_total")
            self.server.schedule_close(self, code=1013, message="egress overflow")
            return
        self.queue.append((False, data))
        self.queued_bytes += len(data)
        self.wake.set()

    def enqueue_pose(self, data: bytes) -> None:
        if self.queued_bytes + len(data) > self.server.config.egress_limit_bytes:
            self.server.metrics.inc("pose_dropped_total", reason="backpressure",
                                    room=self.room_id or "-")
            return
        self.queue.append((True, data))
        self.queued_bytes += len(data)
        self.wake.set()

    async def write_loop(self):
        metrics = self.server.metrics
        try:
            while True:
                while not self.queue:
                    self.wake.clear()
                    await self.wake.wait()
                is_binary, data = self.queue.popleft()
                self.queued_bytes -= len(data)
                if is_binary:
                    await self.ws.send_bytes(data)
                    plane = "pose"
                else:
                    await self.ws.send_str(data.decode("utf-8"))
                    plane = "control"
                metrics.inc("ws_bytes_out_total", len(data), conn=self.conn_id, plane=plane)
                if self.room_id:
                    metrics.inc("room_bytes_out_total", len(data),
                                room=self.room_id, plane=plane)
        except (ConnectionError, asyncio.CancelledError):
            pass


class SyncServer:
    """Room server bound to one host:port; start() and stop() bracket it."""

    def __init__(self, config: ServerConfig = None):
        self.config = config or ServerConfig()
        assets_root = self.config.assets_dir or tempfile.mkdtemp(prefix="molxr-assets-")
        self.store = content.AssetStore(assets_root)
        manifest_path = self.config.manifest_path or content.starter_manifest_path()
        if not Path(manifest_path).is_file():
            raise BadConfig(f"manifest not found: {manifest_path}")
        try:
            manifest = content.load_manifest(manifest_path)
        except content.ContentError as exc:
            raise BadConfig(str(exc)) from None
        self.manifest = content.resolve_builtin_assets(manifest, self.store)
        self.registry = session.RoomRegistry(
            clock=self.config.clock,
            max_rooms=self.config.max_rooms,
            room_cap=self.config.room_cap,
            grace_seconds=self.config.admin_grace_seconds,
            asset_validator=self.store.asset_url_validator(),
        )
        self.metrics = Metrics()
        self.connections: dict[int, Connection] = {}
        self._next_conn_id = 1
        self._pose_buffers: dict[str, dict[tuple, tuple]] = {}
        self._mirrored: dict[str, int] = {}
        self._event_log_file = None
        self._runner = None
        self._site = None
        self._tasks: list[asyncio.Task] = []
        self.port: Optional[int] = None
        self._stopping = False

    # -- lifecycle -----------------------------------------------------------

    def make_app(self) -> web.Application:
        app = web.Application()
        app.router.add_get("/ws", self.ws_handler)
        app.router.add_get("/healthz", self.healthz_handler)
        app.router.add_get("/metrics", self.metrics_handler)
        app.router.add_get("/assets/{name}", self.asset_get_handler)
        app.router.add_post("/assets", self.asset_post_handler)
        if self.config.static_dir:
            root = Path(self.config.static_dir)
            if not root.is_dir():
                raise BadConfig(f"static dir not found: {root}")

            async def index(request):
                return web.FileResponse(root / "index.html")

            app.router.add_get("/", index)
            app.router.add_static("/", root)
        return app

    async def start(self) -> None:
        if self.config.event_log:
            self._event_log_file = open(self.config.event_log, "a", buffering=1)
        self._runner = web.AppRunner(self.make_app())
        await self._runner.setup()
        try:
            self._site = web.TCPSite(self._runner, self.config.host, self.config.port)
            await self._site.start()
        except OSError as exc:
            raise BadConfig(f"cannot bind {self.config.host}:{self.config.port}: {exc}") from None
        self.port = self._runner.addresses[0][1]
        self._tasks.append(asyncio.create_task(self._tick_loop()))
        self._tasks.append(asyncio.create_task(self._sweep_loop()))

    async def stop(self) -> None:
        """Drain every room with a room_closed error, then shut down."""
        if self._stopping:
            return
        self._stopping = True
        for conn in list(self.connections.values()):
            if conn.bound:
                conn.enqueue_control(Error(code="room_closed", detail="server shutting down"))
        await self._flush_connections()
        for conn in list(self.connections.values()):
            await self._close_connection(conn, code=1001, message="shutdown")
        for task in self._tasks:
            task.cancel()
        if self._runner is not None:
            await self._runner.cleanup()
        if self._event_log_file is not None:
            self._event_log_file.close()

    async def _flush_connections(self, timeout: float = 2.0) -> None:
        deadline = asyncio.get_event_loop().time() + timeout
        while any(c.queue for c in self.connections.values()):
            if asyncio.get_event_loop().time() > deadline:
                break
            await asyncio.sleep(0.01)

    @property
    def url(self) -> str:
        return f"http://{self.config.host}:{self.port}"

    # -- background tasks ----------------------------------------------------

    async def _tick_loop(self):
        interval = 1.0 / self.config.tick_hz
        while True:
            await asyncio.sleep(interval)
            self.tick_once()

    async def _sweep_loop(self):
        while True:
            await asyncio.sleep(self.config.sweep_interval)
            self.sweep_once()

    def tick_once(self) -> int:
        """Flush latest-value pose buffers: at most one packet per subject
        per tick reaches each client, and senders never echo themselves."""
        sent = 0
        for room_id, buffers in self._pose_buffers.items():
            if not buffers:
                continue
            targets = [c for c in self.connections.values()
                       if c.room_id == room_id and not c.closing]
            for (kind, subject_id), (sender_pid, data) in buffers.items():
                for conn in targets:
                    if conn.participant_id == sender_pid:
                        continue
                    conn.enqueue_pose(data)
                    sent += 1
            buffers.clear()
        return sent

    def sweep_once(self, now: Optional[float] = None) -> list:
        """Heartbeat and admin-grace sweep; returns swept connection ids."""
        now = self.config.clock() if now is None else now
        swept = []
        for conn in list(self.connections.values()):
            if now - conn.last_heartbeat > self.config.heartbeat_timeout:
                swept.append(conn.conn_id)
                self.schedule_close(conn, code=4000, message="heartbeat timeout")
        for room, events in self.registry.sweep(now):
            self._mirror(room)
            for conn in list(self.connections.values()):
                if conn.room_id == room.room_id:
                    conn.enqueue_control(Error(code="room_closed",
                                               detail="admin absent beyond grace window"))
                    self.schedule_close(conn, code=1000, message="room closed")
        return swept

    def schedule_close(self, conn: Connection, code: int, message: str) -> None:
        if conn.closing:
            return
        conn.closing = True
        asyncio.ensure_future(self._close_connection(conn, code, message))

    async def _close_connection(self, conn: Connection, code: int, message: str) -> None:
        conn.closing = True
        await self._flush_one(conn)
        self._unbind(conn)
        self.connections.pop(conn.conn_id, None)
        if conn.writer_task is not None:
            conn.writer_task.cancel()
        try:
            await conn.ws.close(code=code, message=message.encode())
        except Exception:
            pass

    async def _flush_one(self, conn: Connection, timeout: float = 1.0) -> None:
        deadline = asyncio.get_event_loop().time() + timeout
        while conn.queue and asyncio.get_event_loop().time() < deadline:
            await asyncio.sleep(0.005)

    # -- event plumbing ------------------------------------------------------

    def _mirror(self, room: session.RoomState) -> None:
        if self._event_log_file is None:
            return
        start = self._mirrored.get(room.room_id, 0)
        for ev in room.event_log[start:]:
            line = {"room": room.room_id}
            line.update(ev.to_json())
            self._event_log_file.write(json.dumps(line, sort_keys=True) + "\n")
        self._mirrored[room.room_id] = len(room.event_log)

    def _fan_out(self, room: session.RoomState, make_msg, exclude: Optional[int] = None) -> None:
        """Deliver one control message to every connected participant of a
        room except `exclude`; messages are built per connection so each
        carries that connection's sequence number."""
        for conn in self.connections.values():
            if conn.room_id != room.room_id or conn.closing:
                continue
            if exclude is not None and conn.participant_id == exclude:
                continue
            conn.enqueue_control(make_msg())

    def _snapshot_message(self, room: session.RoomState) -> StateSnapshot:
        snap = room.snapshot()
        return StateSnapshot(grab_enabled=snap.grab_enabled, objects=snap.objects,
                             participants=snap.participants)

    def _broadcast_events(self, room: session.RoomState, events, exclude: Optional[int] = None):
        self._mirror(room)
        for ev in events:
            if ev.kind == "participant_joined":
                record = protocol.ParticipantRecord(
                    ev.data["participant_id"], ev.data["display_name"],
                    ev.data["role"], ev.data["color_index"])
                self._fan_out(room, lambda r=record: ParticipantJoined(participant=r),
                              exclude=exclude)
            elif ev.kind == "participant_left":
                record = protocol.ParticipantRecord(
                    ev.data["participant_id"], ev.data.get("display_name", ""),
                    ev.data.get("role", "passive"), ev.data.get("color_index", 0))
                self._fan_out(room, lambda r=record: ParticipantLeft(participant=r))
            elif ev.kind == "grab_granted":
                oid, pid = ev.data["object_id"], ev.data["holder_id"]
                self._fan_out(room, lambda o=oid, p=pid: GrabGranted(object_id=o, holder_id=p))
            elif ev.kind == "grab_released":
                oid = ev.data["object_id"]
                self._fan_out(room, lambda o=oid: GrabRelease(object_id=o))
            elif ev.kind == "grab_enabled_set":
                enabled = ev.data["enabled"]
                self._fan_out(room, lambda e=enabled: SetGrabEnabled(enabled=e))
            elif ev.kind == "object_added":
                self._fan_out(room, lambda: self._snapshot_message(room))
            elif ev.kind == "object_removed":
                oid = ev.data["object_id"]
                self._fan_out(room, lambda o=oid: RemoveObject(object_id=o))
            elif ev.kind == "room_closed":
                reason = ev.data.get("reason", "")
                self._fan_out(room, lambda r=reason: Error(code="room_closed", detail=r))

    def _unbind(self, conn: Connection) -> None:
        if not conn.bound:
            return
        room = self.registry.rooms.get(conn.room_id)
        pid = conn.participant_id
        conn.participant_id = None
        room_id, conn.room_id = conn.room_id, None
        if room is not None and not room.closed:
            events = room.handle_disconnect(pid)
            self._broadcast_events(room, events)

    # -- websocket ingestion ---------------------------------------------

    async def ws_handler(self, request: web.Request) -> web.WebSocketResponse:
        ws = web.WebSocketResponse(max_msg_size=2 * 1024 * 1024)
        await ws.prepare(request)
        conn = Connection(self._next_conn_id, ws, self)
        self._next_conn_id += 1
        self.connections[conn.conn_id] = conn
        conn.writer_task = asyncio.create_task(conn.write_loop())
        try:
            async for msg in ws:
                conn.last_heartbeat = self.config.clock()
                if msg.type == WSMsgType.TEXT:
                    self._ingest_control(conn, msg.data.encode("utf-8"))
                elif msg.type == WSMsgType.BINARY:
                    self._ingest_pose(conn, msg.data)
                elif msg.type == WSMsgType.ERROR:
                    break
                if conn.closing:
                    break
        finally:
            await self._close_connection(conn, code=1000, message="bye")
        return ws

    def _ingest_control(self, conn: Connection, data: bytes) -> None:
        self.metrics.inc("ws_bytes_in_total", len(data), conn=conn.conn_id, plane="control")
        if conn.room_id:
            self.metrics.inc("room_bytes_in_total", len(data), room=conn.room_id,
                             plane="control")
        try:
            msg = protocol.decode_control(data)
            if msg.seq <= conn.last_inbound_seq:
                raise protocol.MalformedMessage(
                    f"sequence number {msg.seq} not increasing")
            conn.last_inbound_seq = msg.seq
        except protocol.ProtocolError as exc:
            self._control_offense(conn, exc)
            return
        try:
            self._dispatch_control(conn, msg)
        except session.SessionError as exc:
            conn.enqueue_control(Error(code=_error_code(exc), detail=str(exc)))

    def _control_offense(self, conn: Connection, exc: protocol.ProtocolError) -> None:
        conn.malformed_control += 1
        self.metrics.inc("control_malformed_total", conn=conn.conn_id)
        conn.enqueue_control(Error(code=_protocol_error_code(exc), detail=str(exc)))
        if conn.malformed_control >= MALFORMED_CONTROL_LIMIT:
            self.schedule_close(conn, code=1002, message="too many malformed frames")

    def _ingest_pose(self, conn: Connection, data: bytes) -> None:
        self.metrics.inc("ws_bytes_in_total", len(data), conn=conn.conn_id, plane="pose")
        if conn.room_id:
            self.metrics.inc("room_bytes_in_total", len(data), room=conn.room_id, plane="pose")
        try:
            packet = protocol.decode_pose(data)
        except protocol.ProtocolError:
            self.metrics.inc("pose_dropped_total", reason="malformed",
                             room=conn.room_id or "-")
            return
        if not conn.bound:
            self.metrics.inc("pose_dropped_total", reason="unbound", room="-")
            return
        room = self.registry.rooms.get(conn.room_id)
        if room is None:
            return
        if isinstance(packet, protocol.ObjectTransformPacket):
            accepted = room.apply_object_transform(conn.participant_id, packet)
            subject = ("object", packet.object_id)
        else:
            accepted = room.apply_avatar_pose(conn.participant_id, packet)
            subject = ("avatar", packet.participant_id)
        if not accepted:
            self.metrics.inc("pose_dropped_total", reason="unauthorized", room=room.room_id)
            return
        self._mirror(room)
        buffers = self._pose_buffers.setdefault(room.room_id, {})
        if subject in buffers:
            self.metrics.inc("pose_coalesced_total", room=room.room_id)
        # canonical re-encode: broadcast carries the re-normalized values
        buffers[subject] = (conn.participant_id, protocol.encode_pose(packet))

    # -- control dispatch --------------------------------------------------

    def _dispatch_control(self, conn: Connection, msg: ControlMessage) -> None:
        if isinstance(msg, Heartbeat) or isinstance(msg, Hello):
            return
        if isinstance(msg, CreateRoom):
            preset = None
            if msg.preset_id is not None:
                preset = self.manifest.preset(msg.preset_id)
                if preset is None:
                    conn.enqueue_control(Error(code="no_such_preset", detail=msg.preset_id))
                    return
            room = self.registry.create_room(preset)
            self._mirror(room)
            conn.enqueue_control(RoomCreated(
                room_id=room.room_id, admin_token=room.admin_token,
                vr_code=room.vr_code, guest_code=room.guest_code))
            return
        if isinstance(msg, JoinRoom):
            self._handle_join(conn, msg)
            return
        if not conn.bound:
            conn.enqueue_control(Error(code="not_joined", detail="join a room first"))
            return
        room = self.registry.room(conn.room_id)
        pid = conn.participant_id
        if isinstance(msg, GrabRequest):
            outcome = room.request_grab(pid, msg.object_id)
            if outcome.granted:
                self._broadcast_events(room, outcome.events)
            else:
                conn.enqueue_control(GrabDenied(object_id=msg.object_id,
                                                holder_id=outcome.holder_id))
        elif isinstance(msg, GrabRelease):
            self._broadcast_events(room, room.release_grab(pid, msg.object_id))
        elif isinstance(msg, SetGrabEnabled):
            self._broadcast_events(room, room.set_grab_enabled(pid, msg.enabled))
        elif isinstance(msg, AddObject):
            _, events = room.add_object(pid, msg.asset_url, msg.label, msg.initial_transform)
            self._broadcast_events(room, events)
        elif isinstance(msg, RemoveObject):
            self._broadcast_events(room, room.remove_object(pid, msg.object_id))
        elif isinstance(msg, AudioSignal):
            target = room.route_audio_signal(pid, msg.to_participant, msg.payload)
            for other in self.connections.values():
                if (other.room_id == room.room_id
                        and other.participant_id == target.participant_id):
                    other.enqueue_control(AudioSignal(to_participant=msg.to_participant,
                                                      payload=msg.payload))
                    break
        else:
            conn.enqueue_control(Error(code="unexpected_kind", detail=msg.KIND))

    def _handle_join(self, conn: Connection, msg: JoinRoom) -> None:
        if conn.bound:
            conn.enqueue_control(Error(code="already_joined", detail=""))
            return
        try:
            room = self.registry.room(msg.room_id)
            participant, events = room.join(msg.code, msg.display_name)
        except session.SessionError as exc:
            conn.enqueue_control(JoinRejected(reason=_error_code(exc)))
            return
        conn.room_id = room.room_id
        conn.participant_id = participant.participant_id
        snap = room.snapshot()
        conn.enqueue_control(JoinAccepted(
            participant_id=participant.participant_id, role=participant.role.value,
            color_index=participant.color_index,
            snapshot=snap))
        self._broadcast_events(room, events, exclude=participant.participant_id)

    # -- HTTP endpoints ------------------------------------------------------

    async def healthz_handler(self, request: web.Request) -> web.Response:
        return web.Response(text=f"ok {len(self.registry.rooms)}\n")

    async def metrics_handler(self, request: web.Request) -> web.Response:
        gauges = [
            ("rooms_live", {}, len(self.registry.rooms)),
            ("connections_live", {}, len(self.connections)),
        ]
        for room in self.registry.rooms.values():
            by_role = {}
            for p in room.participants.values():
                by_role[p.role.value] = by_role.get(p.role.value, 0) + 1
            for role, count in sorted(by_role.items()):
                gauges.append(("participants", {"room": room.room_id, "role": role}, count))
            gauges.append(("room_events_total", {"room": room.room_id}, len(room.event_log)))
            gauges.append(("room_dropped_transforms", {"room": room.room_id},
                           room.dropped_transforms))
        return web.Response(text=self.metrics.render(gauges))

    async def asset_get_handler(self, request: web.Request) -> web.Response:
        name = request.match_info["name"]
        try:
            data = self.store.fetch(name)
        except FileNotFoundError:
            raise web.HTTPNotFound(text="no such asset")
        self.metrics.inc("asset_bytes_out_total", len(data))
        self.metrics.inc("asset_requests_total")
        return web.Response(
            body=data, content_type="model/gltf-binary",
            headers={"Cache-Control": "public, max-age=31536000, immutable"})

    async def asset_post_handler(self, request: web.Request) -> web.Response:
        token = request.headers.get("X-Admin-Token", "")
        if token not in self.registry.admin_tokens():
            raise web.HTTPUnauthorized(text="admin token required")
        data = await request.read()
        try:
            url = self.store.store(data)
        except content.OversizeAsset as exc:
            raise web.HTTPRequestEntityTooLarge(max_size=content.MAX_ASSET_BYTES,
                                                actual_size=len(data), text=str(exc))
        except content.StorageFull as exc:
            raise web.HTTPInsufficientStorage(text=str(exc))
        except content.GlbValidationError as exc:
            raise web.HTTPBadRequest(text=str(exc))
        self.metrics.inc("asset_uploads_total")
        return web.json_response({"asset_url": url}, status=201)


_SESSION_ERROR_CODES = {
    session.ServerFull: "server_full",
    session.RoomClosed: "room_closed",
    session.BadCode: "bad_code",
    session.RoomFull: "room_full",
    session.AdminSeatTaken: "admin_seat_taken",
    session.NoSuchRoom: "no_such_room",
    session.NoSuchObject: "no_such_object",
    session.NoSuchParticipant: "no_such_participant",
    session.NotHolder: "not_holder",
    session.PermissionDenied: "permission_denied",
    session.InvalidAsset: "invalid_asset",
}

_PROTOCOL_ERROR_CODES = {
    protocol.MalformedMessage: "malformed",
    protocol.UnknownKind: "unknown_kind",
    protocol.VersionMismatch: "version_mismatch",
}


def _error_code(exc: session.SessionError) -> str:
    return _SESSION_ERROR_CODES.get(type(exc), "session_error")


def _protocol_error_code(exc: protocol.ProtocolError) -> str:
    return _PROTOCOL_ERROR_CODES.get(type(exc), "protocol_error")


# -- command line -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molxr-server",
        description="Room server for multiuser XR molecular scenes.")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=DEFAULT_PORT)
    parser.add_argument("--manifest", default=None, help="preset manifest path")
    parser.add_argument("--tick-hz", type=float, default=DEFAULT_TICK_HZ)
    parser.add_argument("--max-rooms", type=int, default=session.DEFAULT_MAX_ROOMS)
    parser.add_argument("--room-cap", type=int, default=session.DEFAULT_ROOM_CAP)
    parser.add_argument("--event-log", default=None, help="mirror room events to this file")
    parser.add_argument("--assets-dir", default=None, help="asset store directory")
    parser.add_argument("--static-dir", default=None,
                        help="serve the browser client bundle from this directory at /")
    return parser


async def run_server(config: ServerConfig) -> None:
    server = SyncServer(config)
    await server.start()
    print(f"listening on {server.config.host}:{server.port}", flush=True)
    stop = asyncio.Event()
    loop = asyncio.get_running_loop()
    for sig in (signal.SIGTERM, signal.SIGINT):
        loop.add_signal_handler(sig, stop.set)
    await stop.wait()
    await server.stop()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = ServerConfig(
        host=args.host, port=args.port, manifest_path=args.manifest,
        tick_hz=args.tick_hz, max_rooms=args.max_rooms, room_cap=args.room_cap,
        event_log=args.event_log, assets_dir=args.assets_dir,
        static_dir=args.static_dir)
    try:
        asyncio.run(run_server(config))
    except BadConfig as exc:
        print(f"molxr-server: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
