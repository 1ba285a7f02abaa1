"""Scenario execution: spawn scripted clients against a live server,
collect logs and counters, and evaluate convergence, ordering,
bandwidth, and replay assertions.

Scenario specs are JSON data files (see data/scenarios/); new scenarios
need no code. Every stochastic element is driven by the scenario seed,
which the report records for reproduction.
"""

from __future__ import annotations

import asyncio
import json
import math
import random
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import aiohttp

from .. import protocol
from ..protocol import AvatarPose, RigidPose, Transform, UnitQuat, Vec3
from ..server import ServerConfig, SyncServer
from .client import SyntheticClient
from .replay import CorruptLog, replay
from .shaper import NetworkShaper, shaper_from_json

MAX_POSE_RATE_HZ = 30.0
DEFAULT_SETTLE_SENDS = 10


class ScenarioTimeout(Exception):
    pass


class AssertionFailed(Exception):
    def __init__(self, report):
        super().__init__("; ".join(report.failures) or "scenario failed")
        self.report = report


@dataclass
class ScenarioReport:
    name: str
    seed: int
    passed: bool = True
    failures: list = field(default_factory=list)
    wall_s: float = 0.0
    convergence: dict = field(default_factory=dict)
    worst_convergence: float = 0.0
    order_audit: dict = field(default_factory=dict)
    replay_ok: Optional[bool] = None
    bandwidth: dict = field(default_factory=dict)
    client_bytes: dict = field(default_factory=dict)
    event_counts: dict = field(default_factory=dict)

    def fail(self, message: str) -> None:
        self.passed = False
        self.failures.append(message)

    def raise_if_failed(self) -> "ScenarioReport":
        if not self.passed:
            raise AssertionFailed(self)
        return self

    def to_json(self) -> dict:
        return {
            "name": self.name, "seed": self.seed, "passed": self.passed,
            "failures": self.failures, "wall_s": round(self.wall_s, 3),
            "convergence": self.convergence,
            "worst_convergence": self.worst_convergence,
            "order_audit": self.order_audit, "replay_ok": self.replay_ok,
            "bandwidth": self.bandwidth, "client_bytes": self.client_bytes,
            "event_counts": self.event_counts,
        }

    def summary(self) -> str:
        lines = [f"scenario {self.name} (seed {self.seed}): "
                 f"{'PASS' if self.passed else 'FAIL'} in {self.wall_s:.1f}s"]
        lines.append(f"  worst convergence error: {self.worst_convergence:.3g}")
        for client, ok in sorted(self.order_audit.items()):
            if not ok:
                lines.append(f"  order audit FAILED for {client}")
        if self.replay_ok is not None:
            lines.append(f"  replay matches final snapshot: {self.replay_ok}")
        if self.bandwidth:
            lines.append(f"  pose ingress per client <= "
                         f"{self.bandwidth.get('limit_bytes_per_s', 0):.0f} B/s: "
                         f"worst {self.bandwidth.get('worst_bytes_per_s', 0):.0f} B/s")
            lines.append(f"  asset bytes in steady state: "
                         f"{self.bandwidth.get('steady_asset_bytes', 0):.0f}")
        for failure in self.failures:
            lines.append(f"  FAIL: {failure}")
        return "\n".join(lines)


# -- geometry ----------------------------------------------------------------


def quat_distance(a: UnitQuat, b: UnitQuat) -> float:
    d1 = math.sqrt((a.x - b.x) ** 2 + (a.y - b.y) ** 2 + (a.z - b.z) ** 2 + (a.w - b.w) ** 2)
    d2 = math.sqrt((a.x + b.x) ** 2 + (a.y + b.y) ** 2 + (a.z + b.z) ** 2 + (a.w + b.w) ** 2)
    return min(d1, d2)


def transform_error(a: Transform, b: Transform) -> float:
    pos = max(abs(a.position.x - b.position.x), abs(a.position.y - b.position.y),
              abs(a.position.z - b.position.z))
    return max(pos, abs(a.scale - b.scale), quat_distance(a.orientation, b.orientation))


def rigid_error(a: RigidPose, b: RigidPose) -> float:
    pos = max(abs(a.position.x - b.position.x), abs(a.position.y - b.position.y),
              abs(a.position.z - b.position.z))
    return max(pos, quat_distance(a.orientation, b.orientation))


def avatar_error(a: AvatarPose, b: AvatarPose) -> float:
    err = rigid_error(a.head, b.head)
    for mine, theirs in ((a.left_hand, b.left_hand), (a.right_hand, b.right_hand)):
        if (mine is None) != (theirs is None):
            return math.inf
        if mine is not None:
            err = max(err, rigid_error(mine, theirs))
    return err


# -- parametric paths ----------------------------------------------------


def path_point(path: dict, u: float) -> Vec3:
    kind = path.get("kind", "orbit")
    if kind == "orbit":
        center = path.get("center", [0.0, 1.6, 0.0])
        radius = path.get("radius", 2.0)
        phase = path.get("phase", 0.0)
        revolutions = path.get("revolutions", 1.0)
        angle = 2.0 * math.pi * (phase + revolutions * u)
        return Vec3(center[0] + radius * math.cos(angle), center[1],
                    center[2] + radius * math.sin(angle))
    if kind == "line":
        a, b = path["from"], path["to"]
        return Vec3(a[0] + (b[0] - a[0]) * u, a[1] + (b[1] - a[1]) * u,
                    a[2] + (b[2] - a[2]) * u)
    raise ValueError(f"unknown path kind {kind!r}")


def path_transform(path: dict, u: float) -> Transform:
    s0 = path.get("scale_from", 1.0)
    s1 = path.get("scale_to", s0)
    return Transform(path_point(path, u), UnitQuat.identity(), s0 + (s1 - s0) * u)


# -- the runner ----------------------------------------------------------


def load_scenario(path) -> dict:
    return json.loads(Path(path).read_text("utf-8"))


def bundled_scenario_path(name: str) -> Path:
    return Path(__file__).parent.parent / "data" / "scenarios" / f"{name}.json"


_ROLE_CODE = {"admin": "admin_token", "vr": "vr_code", "passive": "guest_code"}


class ScenarioRunner:
    def __init__(self, spec: dict, server_url: Optional[str] = None,
                 seed: Optional[int] = None):
        self.spec = spec
        self.seed = spec.get("seed", 0) if seed is None else seed
        self.server_url = server_url
        self.server: Optional[SyncServer] = None
        self.room = None
        self.clients: dict[str, SyntheticClient] = {}
        self.disconnected: set[str] = set()
        self.t0 = 0.0
        self.metrics_snapshots: list = []
        self.report = ScenarioReport(name=spec.get("name", "unnamed"), seed=self.seed)
        # state captured at quiescence: teardown disconnects mutate both
        # the room and the clients' logs/views, so evaluation never reads
        # live objects
        self.final_snapshot = None
        self.final_objects: dict = {}
        self.final_avatars: dict = {}
        self.final_event_log: list = []
        self.final_grab_enabled = None
        self.final_closed = None
        self.client_captures: dict[str, dict] = {}

    # -- orchestration -----------------------------------------------------

    async def run(self) -> ScenarioReport:
        started = time.monotonic()
        max_wall = self.spec.get("assertions", {}).get("max_wall_s", 120.0)
        try:
            await asyncio.wait_for(self._execute(), timeout=max_wall)
        except asyncio.TimeoutError:
            raise ScenarioTimeout(
                f"scenario {self.report.name!r} exceeded {max_wall}s") from None
        finally:
            await self._teardown()
        self.report.wall_s = time.monotonic() - started
        self._evaluate()
        return self.report

    async def _execute(self) -> None:
        owns_server = self.server_url is None
        if owns_server:
            self.server = SyncServer(ServerConfig(
                port=0, tick_hz=self.spec.get("tick_hz", 20)))
            await self.server.start()
            self.server_url = self.server.url

        rng = random.Random(self.seed)
        shaper_spec = self.spec.get("shaper", {})
        admins = [c for c in self.spec["clients"] if c["kind"] == "admin"]
        if len(admins) != 1:
            raise ValueError("scenario needs exactly one admin client")

        for i, cspec in enumerate(self.spec["clients"]):
            shaper = shaper_from_json(shaper_spec, random.Random(self.seed * 7919 + i))
            self.clients[cspec["name"]] = SyntheticClient(
                cspec["name"], self.server_url, shaper=shaper)

        admin_spec = admins[0]
        admin = self.clients[admin_spec["name"]]
        await admin.connect()
        created = await admin.create_room(self.spec.get("preset_id"))
        await admin.join(created.room_id, created.admin_token)
        if self.server is not None:
            self.room = self.server.registry.room(created.room_id)
        codes = {"admin": created.admin_token, "vr": created.vr_code,
                 "passive": created.guest_code}

        for cspec in self.spec["clients"]:
            if cspec is admin_spec:
                continue
            client = self.clients[cspec["name"]]
            await client.connect()
            await client.join(created.room_id, codes[cspec["kind"]])

        if self.spec.get("fetch_assets", True):
            for client in self.clients.values():
                await client.fetch_assets()

        self.t0 = time.monotonic()
        tasks = [asyncio.create_task(self._run_actions(cspec))
                 for cspec in self.spec["clients"]]
        window = self.spec.get("steady_window")
        if window and self.server is not None:
            tasks.append(asyncio.create_task(self._sample_metrics(window)))
        await asyncio.gather(*tasks)

        await asyncio.sleep(self._quiescence_s())
        if self.room is not None:
            self.final_snapshot = self.room.snapshot()
            self.final_objects = {oid: o.transform for oid, o in self.room.objects.items()}
            self.final_avatars = {pid: p.last_pose
                                  for pid, p in self.room.participants.items()
                                  if p.last_pose is not None}
            self.final_event_log = list(self.room.event_log)
            self.final_grab_enabled = self.room.grab_enabled
            self.final_closed = self.room.closed
        for name, client in self.clients.items():
            self.client_captures[name] = {
                "log": list(client.log),
                "object_views": dict(client.object_views),
                "avatar_views": dict(client.avatar_views),
                "participant_id": client.participant_id,
            }

    def _quiescence_s(self) -> float:
        shaper = self.spec.get("shaper", {})
        tick = self.spec.get("tick_hz", 20)
        lag = (shaper.get("latency_ms", 0) + shaper.get("jitter_ms", 0)) / 1000.0
        return 2.0 / tick + 2.0 * lag + 0.5

    async def _teardown(self) -> None:
        for client in self.clients.values():
            await client.close()
        if self.server is not None:
            await self.server.stop()

    async def _sleep_until(self, t: float) -> None:
        delay = self.t0 + t - time.monotonic()
        if delay > 0:
            await asyncio.sleep(delay)

    async def _sample_metrics(self, window) -> None:
        for t in window:
            await self._sleep_until(t)
            async with aiohttp.ClientSession() as http:
                async with http.get(self.server_url + "/metrics") as resp:
                    self.metrics_snapshots.append((time.monotonic() - self.t0,
                                                   parse_metrics(await resp.text())))

    # -- scripted actions ----------------------------------------------------

    async def _run_actions(self, cspec: dict) -> None:
        client = self.clients[cspec["name"]]
        for action in cspec.get("actions", []):
            op = action["op"]
            if op == "move_avatar":
                await self._move(client, action, self._send_avatar)
            elif op == "move_object":
                await self._move(client, action, self._object_sender(action["object_id"]))
            elif op == "grab":
                await self._sleep_until(action["at"])
                await client.request_grab(action["object_id"])
            elif op == "release":
                await self._sleep_until(action["at"])
                await client.release_grab(action["object_id"])
            elif op == "set_grab_enabled":
                await self._sleep_until(action["at"])
                await client.set_grab_enabled(action["enabled"])
            elif op == "add_object":
                await self._sleep_until(action["at"])
                await client.add_object(action["asset_url"], action.get("label", "object"),
                                        Transform.identity())
            elif op == "audio":
                await self._sleep_until(action["at"])
                target = self.clients[action["to_name"]]
                await client.send_audio(target.participant_id, action.get("payload", "offer"))
            elif op == "disconnect":
                await self._sleep_until(action["at"])
                await client.close()
                self.disconnected.add(client.name)
                return
            else:
                raise ValueError(f"unknown action op {op!r}")

    @staticmethod
    async def _send_avatar(client, transform: Transform) -> None:
        pose = AvatarPose(head=RigidPose(transform.position, transform.orientation))
        await client.send_avatar_pose(pose)

    @staticmethod
    def _object_sender(object_id: int):
        async def send(client, transform: Transform) -> None:
            await client.send_object_transform(object_id, transform)
        return send

    async def _move(self, client, action: dict, sender) -> None:
        start = action.get("start", 0.0)
        duration = action.get("duration", 1.0)
        rate = min(float(action.get("rate_hz", 20.0)), MAX_POSE_RATE_HZ)
        settle = action.get("settle_sends", DEFAULT_SETTLE_SENDS)
        path = action["path"]
        samples = max(2, int(duration * rate))
        final = None
        for k in range(samples):
            u = k / (samples - 1)
            await self._sleep_until(start + duration * u)
            final = path_transform(path, u)
            await sender(client, final)
        # repeat the endpoint so a lossy pose plane still converges
        for _ in range(settle):
            await asyncio.sleep(1.0 / rate)
            await sender(client, final)

    # -- evaluation ---------------------------------------------------------

    def _evaluate(self) -> None:
        assertions = self.spec.get("assertions", {})
        self._count_events()
        if self.final_snapshot is None:
            self.report.failures.append(
                "no in-process server: server-side assertions skipped")
            return
        epsilon = assertions.get("convergence_epsilon")
        if epsilon is not None:
            self._check_convergence(float(epsilon))
        if assertions.get("order_audit", True):
            self._check_order()
        if assertions.get("replay", True):
            self._check_replay()
        if assertions.get("bandwidth_envelope") and len(self.metrics_snapshots) >= 2:
            self._check_bandwidth()

    def _live_captures(self) -> dict:
        return {name: cap for name, cap in self.client_captures.items()
                if name not in self.disconnected and cap["participant_id"] is not None}

    def _check_convergence(self, epsilon: float) -> None:
        worst = 0.0

        def check(kind, subject_id, server_value, views_key, measure):
            nonlocal worst
            errors = {}
            for name, cap in self._live_captures().items():
                view = cap[views_key].get(subject_id)
                errors[name] = (measure(view, server_value)
                                if view is not None else math.inf)
            err = max(errors.values(), default=0.0)
            key = f"{kind}:{subject_id}"
            self.report.convergence[key] = err if math.isfinite(err) else "missing"
            worst = max(worst, err)
            if err > epsilon:
                bad = max(errors, key=errors.get)
                self.report.fail(f"{key} diverged: {err:.3g} > {epsilon} at {bad}")

        for oid, transform in self.final_objects.items():
            check("object", oid, transform, "object_views", transform_error)
        for pid, pose in self.final_avatars.items():
            check("avatar", pid, pose, "avatar_views", avatar_error)
        self.report.worst_convergence = worst if math.isfinite(worst) else -1.0

    def _check_order(self) -> None:
        server_tokens = [_event_token(ev) for ev in self.final_event_log]
        server_tokens = [t for t in server_tokens if t is not None]
        for name, cap in self.client_captures.items():
            tokens = []
            for _, msg in cap["log"]:
                token = _message_token(msg)
                if token is not None:
                    tokens.append(token)
            ok = _is_subsequence(tokens, server_tokens)
            self.report.order_audit[name] = ok
            if not ok:
                self.report.fail(f"{name} saw events out of server order")

    def _check_replay(self) -> None:
        try:
            reconstructed = replay(self.final_event_log)
        except CorruptLog as exc:
            self.report.replay_ok = False
            self.report.fail(f"replay failed: {exc}")
            return
        ok = (reconstructed.snapshot() == self.final_snapshot
              and reconstructed.grab_enabled == self.final_grab_enabled
              and reconstructed.closed == self.final_closed)
        self.report.replay_ok = ok
        if not ok:
            self.report.fail("replayed state differs from live snapshot")

    def _check_bandwidth(self) -> None:
        (t_a, before), (t_b, after) = self.metrics_snapshots[0], self.metrics_snapshots[-1]
        window = t_b - t_a
        tick = self.spec.get("tick_hz", 20)
        movers = _moving_subjects(self.spec, t_a, t_b)
        limit = tick * movers * protocol.MAX_POSE_PACKET_BYTES * 1.10
        worst = 0.0
        for (name, labels), value in after.items():
            if name != "ws_bytes_out_total" or dict(labels).get("plane") != "pose":
                continue
            delta = value - before.get((name, labels), 0.0)
            rate = delta / window
            worst = max(worst, rate)
            if rate > limit:
                self.report.fail(
                    f"pose egress {rate:.0f} B/s to conn {dict(labels).get('conn')} "
                    f"exceeds envelope {limit:.0f} B/s")
        asset_delta = (after.get(("asset_bytes_out_total", ()), 0.0)
                       - before.get(("asset_bytes_out_total", ()), 0.0))
        if asset_delta != 0:
            self.report.fail(f"{asset_delta:.0f} asset bytes served during steady state")
        self.report.bandwidth = {
            "window_s": window, "moving_subjects": movers,
            "limit_bytes_per_s": limit, "worst_bytes_per_s": worst,
            "steady_asset_bytes": asset_delta,
        }

    def _count_events(self) -> None:
        counts: dict[str, int] = {}
        for cap in self.client_captures.values():
            for _, msg in cap["log"]:
                counts[msg.KIND] = counts.get(msg.KIND, 0) + 1
        self.report.event_counts = counts
        for client in self.clients.values():
            self.report.client_bytes[client.name] = {
                "in": dict(client.bytes_in), "out": dict(client.bytes_out),
                "assets": client.asset_bytes_in,
            }


def _moving_subjects(spec: dict, t_a: float, t_b: float) -> int:
    avatars = set()
    objects = set()
    for cspec in spec["clients"]:
        for action in cspec.get("actions", []):
            start = action.get("start", action.get("at", 0.0))
            end = start + action.get("duration", 0.0)
            if action["op"] == "move_avatar" and start < t_b and end > t_a:
                avatars.add(cspec["name"])
            elif action["op"] == "move_object" and start < t_b and end > t_a:
                objects.add(action["object_id"])
    return max(1, len(avatars) + len(objects))


def _event_token(ev):
    kind, d = ev.kind, ev.data
    if kind == "participant_joined":
        return ("pj", d["participant_id"])
    if kind == "participant_left":
        return ("pl", d["participant_id"])
    if kind == "grab_granted":
        return ("gg", d["object_id"], d["holder_id"])
    if kind == "grab_released":
        return ("gr", d["object_id"])
    if kind == "grab_enabled_set":
        return ("ge", d["enabled"])
    if kind == "object_added":
        return ("snap",)
    if kind == "object_removed":
        return ("rm", d["object_id"])
    if kind == "room_closed":
        return ("closed",)
    return None


def _message_token(msg):
    if isinstance(msg, protocol.ParticipantJoined):
        return ("pj", msg.participant.participant_id)
    if isinstance(msg, protocol.ParticipantLeft):
        return ("pl", msg.participant.participant_id)
    if isinstance(msg, protocol.GrabGranted):
        return ("gg", msg.object_id, msg.holder_id)
    if isinstance(msg, protocol.GrabRelease):
        return ("gr", msg.object_id)
    if isinstance(msg, protocol.SetGrabEnabled):
        return ("ge", msg.enabled)
    if isinstance(msg, protocol.StateSnapshot):
        return ("snap",)
    if isinstance(msg, protocol.RemoveObject):
        return ("rm", msg.object_id)
    if isinstance(msg, protocol.Error) and msg.code == "room_closed":
        return ("closed",)
    return None


def _is_subsequence(needle: list, haystack: list) -> bool:
    it = iter(haystack)
    return all(any(token == h for h in it) for token in needle)


def parse_metrics(text: str) -> dict:
    """Parse `name{labels} value` lines into {(name, labels): value}."""
    out = {}
    for line in text.splitlines():
        m = re.match(r'^(\w+)(?:\{(.*)\})?\s+(\S+)$', line)
        if not m:
            continue
        try:
            value = float(m.group(3))
        except ValueError:
            continue
        name, labels = m.group(1), m.group(2)
        items = ()
        if labels:
            items = tuple(sorted(
                (kv.split("=", 1)[0], kv.split("=", 1)[1].strip('"'))
                for kv in labels.split(",")))
        out[(name, items)] = value
    return out


async def run_scenario(spec: dict, server_url: Optional[str] = None,
                       seed: Optional[int] = None) -> ScenarioReport:
    """Execute one scenario spec; returns the evaluation report."""
    return await ScenarioRunner(spec, server_url=server_url, seed=seed).run()
