"""Headless synthetic client: scripted joins, poses, grabs, and a full
receive log for offline assertions.

Both directions pass through the network shaper via ordered delay
queues, so frames arrive late but never out of order (the underlying
transport is reliable); pose frames can additionally be dropped on
either side of the wire.
"""

from __future__ import annotations

import asyncio
import time
from typing import Optional

import aiohttp

from .. import protocol
from ..protocol import (
    AddObject,
    AudioSignal,
    AvatarPose,
    AvatarPosePacket,
    ControlMessage,
    CreateRoom,
    GrabRequest,
    GrabRelease,
    Heartbeat,
    Hello,
    JoinRoom,
    ObjectTransformPacket,
    RigidPose,
    SetGrabEnabled,
    Transform,
    UnitQuat,
    Vec3,
)
from .shaper import NetworkShaper

HEARTBEAT_INTERVAL = 5.0
CONTROL_REPLY_TIMEOUT = 10.0


class ClientError(Exception):
    pass


class SyntheticClient:
    """One scripted participant talking to a live server."""

    def __init__(self, name: str, server_url: str, shaper: Optional[NetworkShaper] = None,
                 clock=time.monotonic):
        self.name = name
        self.server_url = server_url.rstrip("/")
        self.shaper = shaper or NetworkShaper()
        self.clock = clock
        self.http: Optional[aiohttp.ClientSession] = None
        self.ws = None
        self.participant_id: Optional[int] = None
        self.role: Optional[str] = None
        self.color_index: Optional[int] = None
        self.room_id: Optional[str] = None
        self.log: list = []                     # (t, ControlMessage) received
        self.object_views: dict[int, Transform] = {}
        self.avatar_views: dict[int, AvatarPose] = {}
        self.grab_enabled: Optional[bool] = None
        self.participants_seen: dict[int, str] = {}
        self.bytes_in = {"control": 0, "pose": 0}
        self.bytes_out = {"control": 0, "pose": 0}
        self.asset_bytes_in = 0
        self.room_closed = False
        self._seq = 0
        self._out_queue: asyncio.Queue = asyncio.Queue()
        self._in_queue: asyncio.Queue = asyncio.Queue()
        self._replies: asyncio.Queue = asyncio.Queue()
        self._tasks: list[asyncio.Task] = []
        self._closed = False

    # -- connection ----------------------------------------------------------

    async def connect(self) -> None:
        self.http = aiohttp.ClientSession()
        self.ws = await self.http.ws_connect(self.server_url + "/ws", heartbeat=None)
        self._tasks = [
            asyncio.create_task(self._send_loop()),
            asyncio.create_task(self._receive_loop()),
            asyncio.create_task(self._dispatch_loop()),
            asyncio.create_task(self._heartbeat_loop()),
        ]
        await self._send_control(Hello())

    async def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for task in self._tasks:
            task.cancel()
        if self.ws is not None:
            await self.ws.close()
        if self.http is not None:
            await self.http.close()

    # -- shaped ordered pipes --------------------------------------------

    async def _send_loop(self):
        while True:
            due, is_binary, data = await self._out_queue.get()
            delay = due - self.clock()
            if delay > 0:
                await asyncio.sleep(delay)
            try:
                if is_binary:
                    await self.ws.send_bytes(data)
                    self.bytes_out["pose"] += len(data)
                else:
                    await self.ws.send_str(data.decode("utf-8"))
                    self.bytes_out["control"] += len(data)
            except ConnectionError:
                return

    async def _receive_loop(self):
        async for msg in self.ws:
            if msg.type == aiohttp.WSMsgType.TEXT:
                data = msg.data.encode("utf-8")
                self.bytes_in["control"] += len(data)
                await self._in_queue.put((self.clock() + self.shaper.delay_s(), False, data))
            elif msg.type == aiohttp.WSMsgType.BINARY:
                self.bytes_in["pose"] += len(msg.data)
                if self.shaper.drop_pose():
                    continue
                await self._in_queue.put((self.clock() + self.shaper.delay_s(), True, msg.data))
            else:
                break

    async def _dispatch_loop(self):
        while True:
            due, is_binary, data = await self._in_queue.get()
            delay = due - self.clock()
            if delay > 0:
                await asyncio.sleep(delay)
            if is_binary:
                self._on_pose(protocol.decode_pose(data))
            else:
                self._on_control(protocol.decode_control(data))

    async def _heartbeat_loop(self):
        while True:
            await asyncio.sleep(HEARTBEAT_INTERVAL)
            await self._send_control(Heartbeat())

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    async def _send_control(self, msg: ControlMessage) -> None:
        msg.seq = self._next_seq()
        data = protocol.encode_control(msg)
        await self._out_queue.put((self.clock() + self.shaper.delay_s(), False, data))

    async def send_pose_packet(self, packet) -> None:
        if self.shaper.drop_pose():
            return
        data = protocol.encode_pose(packet)
        await self._out_queue.put((self.clock() + self.shaper.delay_s(), True, data))

    # -- inbound state tracking ----------------------------------------------

    def _on_control(self, msg: ControlMessage) -> None:
        self.log.append((self.clock(), msg))
        if isinstance(msg, protocol.StateSnapshot):
            self._load_snapshot(msg.grab_enabled, msg.objects, msg.participants)
        elif isinstance(msg, protocol.JoinAccepted):
            self.participant_id = msg.participant_id
            self.role = msg.role
            self.color_index = msg.color_index
            snap = msg.snapshot
            self._load_snapshot(snap.grab_enabled, snap.objects, snap.participants)
        elif isinstance(msg, protocol.ParticipantJoined):
            self.participants_seen[msg.participant.participant_id] = msg.participant.display_name
        elif isinstance(msg, protocol.ParticipantLeft):
            self.participants_seen.pop(msg.participant.participant_id, None)
            self.avatar_views.pop(msg.participant.participant_id, None)
        elif isinstance(msg, protocol.RemoveObject):
            self.object_views.pop(msg.object_id, None)
        elif isinstance(msg, protocol.SetGrabEnabled):
            self.grab_enabled = msg.enabled
        elif isinstance(msg, protocol.Error) and msg.code == "room_closed":
            self.room_closed = True
        if not isinstance(msg, (protocol.JoinAccepted, protocol.JoinRejected,
                                protocol.RoomCreated, protocol.Error,
                                protocol.GrabGranted, protocol.GrabDenied)):
            return
        self._replies.put_nowait(msg)

    def _load_snapshot(self, grab_enabled, objects, participants) -> None:
        self.grab_enabled = grab_enabled
        for obj in objects:
            self.object_views[obj.object_id] = obj.transform
        self.participants_seen = {p.participant_id: p.display_name for p in participants}

    def _on_pose(self, packet) -> None:
        if isinstance(packet, ObjectTransformPacket):
            self.object_views[packet.object_id] = packet.transform
        else:
            self.avatar_views[packet.participant_id] = packet.pose

    def _drain_replies(self) -> None:
        while not self._replies.empty():
            self._replies.get_nowait()

    async def _await_reply(self, types, predicate=None,
                           timeout: float = CONTROL_REPLY_TIMEOUT):
        deadline = self.clock() + timeout
        while True:
            remaining = deadline - self.clock()
            if remaining <= 0:
                raise ClientError(f"{self.name}: timed out waiting for {types}")
            msg = await asyncio.wait_for(self._replies.get(), timeout=remaining)
            if isinstance(msg, types) and (predicate is None or predicate(msg)):
                return msg

    # -- session actions -------------------------------------------------

    async def create_room(self, preset_id: Optional[str] = None) -> protocol.RoomCreated:
        self._drain_replies()
        await self._send_control(CreateRoom(preset_id=preset_id))
        created = await self._await_reply(protocol.RoomCreated)
        self.room_id = created.room_id
        return created

    async def join(self, room_id: str, code: str) -> protocol.JoinAccepted:
        self._drain_replies()
        await self._send_control(JoinRoom(room_id=room_id, code=code, display_name=self.name))
        msg = await self._await_reply((protocol.JoinAccepted, protocol.JoinRejected))
        if isinstance(msg, protocol.JoinRejected):
            raise ClientError(f"{self.name}: join rejected: {msg.reason}")
        self.room_id = room_id
        return msg

    async def request_grab(self, object_id: int):
        """Returns this client's outcome: GrabGranted with itself as the
        holder, or the GrabDenied addressed to it. Grants are broadcast,
        so another client's win for the same object is skipped (the
        matching denial follows it)."""
        self._drain_replies()
        await self._send_control(GrabRequest(object_id=object_id))

        def mine(msg):
            if msg.object_id != object_id:
                return False
            if isinstance(msg, protocol.GrabGranted):
                return msg.holder_id == self.participant_id
            return True
        return await self._await_reply((protocol.GrabGranted, protocol.GrabDenied),
                                       predicate=mine)

    async def release_grab(self, object_id: int) -> None:
        await self._send_control(GrabRelease(object_id=object_id))

    async def set_grab_enabled(self, enabled: bool) -> None:
        await self._send_control(SetGrabEnabled(enabled=enabled))

    async def add_object(self, asset_url: str, label: str, transform: Transform) -> None:
        await self._send_control(AddObject(asset_url=asset_url, label=label,
                                           initial_transform=transform))

    async def send_audio(self, to_participant: int, payload: str) -> None:
        await self._send_control(AudioSignal(to_participant=to_participant, payload=payload))

    async def send_avatar_pose(self, pose: AvatarPose) -> None:
        # own view mirrors intent: senders are excluded from their echo
        self.avatar_views[self.participant_id] = pose
        await self.send_pose_packet(AvatarPosePacket(self.participant_id, pose))

    async def send_object_transform(self, object_id: int, transform: Transform) -> None:
        self.object_views[object_id] = transform
        await self.send_pose_packet(ObjectTransformPacket(object_id, transform))

    async def fetch_assets(self) -> int:
        """Download every store-served asset in the current view, as a
        real client would after the snapshot; returns total bytes."""
        total = 0
        for oid in sorted(self.object_views):
            url = self._asset_urls.get(oid)
            if url and url.startswith("/assets/"):
                async with self.http.get(self.server_url + url) as resp:
                    body = await resp.read()
                    total += len(body)
        self.asset_bytes_in += total
        return total

    @property
    def _asset_urls(self) -> dict:
        urls = {}
        for t, msg in self.log:
            if isinstance(msg, protocol.JoinAccepted):
                for obj in msg.snapshot.objects:
                    urls[obj.object_id] = obj.asset_url
            elif isinstance(msg, protocol.StateSnapshot):
                for obj in msg.objects:
                    urls[obj.object_id] = obj.asset_url
        return urls

    def received(self, kind) -> list:
        return [msg for _, msg in self.log if isinstance(msg, kind)]
