/**
 * Main hall and session wiring: create or join a room, then drive the
 * scene with device-appropriate navigation, optional immersive mode,
 * and peer audio.
 */

import { affordancesForRole, applyAffordances } from "./affordances.js";
import { AudioMesh } from "./audio.js";
import { VirtualJoystick } from "./joystick.js";
import {
  axesFromJoystick,
  axesFromKeys,
  applyLook,
  CameraPose,
  MoveAxes,
  orientationQuat,
  PosePublisher,
  stepCamera,
} from "./navigation.js";
import { POSE_OBJECT, Role } from "./protocol.js";
import { SceneRenderer } from "./render.js";
import { connectWebSocket, LocalSession } from "./session.js";
import { xrSupported } from "./xr.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function isTouchDevice(): boolean {
  return "ontouchstart" in window || navigator.maxTouchPoints > 0;
}

async function requestAudioPermission(): Promise<void> {
  // first entry on a device must allow audio for the talk features
  try {
    const stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    for (const track of stream.getTracks()) track.stop();
  } catch {
    // declining audio is fine: the session works silently
  }
}

class App {
  session: LocalSession | null = null;
  renderer: SceneRenderer | null = null;
  audio: AudioMesh | null = null;
  camera: CameraPose = { position: { x: 0, y: 1.6, z: 2.5 }, yaw: 0, pitch: 0 };
  publisher = new PosePublisher();
  heldKeys = new Set<string>();
  joystick: VirtualJoystick | null = null;
  dragging = false;
  serverUrl = location.origin;

  async enterRoom(roomId: string, code: string, name: string): Promise<void> {
    await requestAudioPermission();
    const socket = await connectWebSocket(this.serverUrl);
    const session = new LocalSession(socket);
    this.session = session;
    session.onEvent((ev) => {
      if (ev.kind === "joined") this.onJoined(ev.role);
      else if (ev.kind === "join-rejected") this.showHallError(`invalid code (${ev.reason})`);
      else if (ev.kind === "room-closed") this.onRoomClosed(ev.detail);
      else if (ev.kind === "audio-signal") this.audio?.handleSignal(ev.payload);
    });
    session.sendControl({ kind: "hello" });
    session.join(roomId, code, name);
  }

  async createRoom(presetId: string, name: string): Promise<void> {
    await requestAudioPermission();
    const socket = await connectWebSocket(this.serverUrl);
    const session = new LocalSession(socket);
    this.session = session;
    session.onEvent((ev) => {
      if (ev.kind === "room-created") {
        el("vr-code").textContent = ev.vrCode;
        el("guest-code").textContent = ev.guestCode;
        el("codes").hidden = false;
        session.join(ev.roomId, ev.adminToken, name);
      } else if (ev.kind === "joined") {
        this.onJoined(ev.role);
      } else if (ev.kind === "room-closed") {
        this.onRoomClosed(ev.detail);
      } else if (ev.kind === "audio-signal") {
        this.audio?.handleSignal(ev.payload);
      }
    });
    session.sendControl({ kind: "hello" });
    session.createRoom(presetId || undefined);
  }

  showHallError(message: string): void {
    const banner = el("hall-error");
    banner.textContent = message;
    banner.hidden = false;
  }

  onRoomClosed(detail: string): void {
    this.showHallError(`room closed: ${detail || "the admin left"}`);
    el("hall").hidden = false;
    el("stage").hidden = true;
    this.session?.close();
    this.audio?.closeAll();
  }

  onJoined(role: Role): void {
    const session = this.session!;
    el("hall").hidden = true;
    el("stage").hidden = false;
    applyAffordances(document, role);

    const canvas = el<HTMLCanvasElement>("scene");
    this.renderer = new SceneRenderer(canvas, this.serverUrl);
    const resize = () => this.renderer!.resize(window.innerWidth, window.innerHeight);
    window.addEventListener("resize", resize);
    resize();

    this.setupNavigation(canvas);
    this.setupAudio(role);
    this.setupImmersive();
    this.startLoops();
  }

  setupNavigation(canvas: HTMLCanvasElement): void {
    window.addEventListener("keydown", (e) => this.heldKeys.add(e.code));
    window.addEventListener("keyup", (e) => this.heldKeys.delete(e.code));
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      canvas.setPointerCapture(e.pointerId);
    });
    canvas.addEventListener("pointerup", () => (this.dragging = false));
    canvas.addEventListener("pointermove", (e) => {
      if (this.dragging) applyLook(this.camera, e.movementX, e.movementY);
    });
    if (isTouchDevice()) {
      this.joystick = new VirtualJoystick(el("stage"));
    }
  }

  setupAudio(role: Role): void {
    const session = this.session!;
    const sinkPool = el("audio-sinks");
    this.audio = new AudioMesh(
      session.participantId!, role,
      (to, payload) => session.sendAudioSignal(to, payload),
      (pid, stream) => {
        const sink = document.createElement("audio");
        sink.autoplay = true;
        sink.dataset.pid = String(pid);
        sink.srcObject = stream;
        sinkPool.appendChild(sink);
      });
    const mesh = this.audio;
    const setup = async () => {
      if (affordancesForRole(role).canTalk) await mesh.enableMicrophone();
      for (const [pid, p] of session.state.participants) {
        await mesh.connectTo(pid, p.role);
      }
    };
    void setup();
    session.onEvent((ev) => {
      if (ev.kind !== "state-changed") return;
      for (const [pid, p] of session.state.participants) {
        if (pid !== session.participantId) void mesh.connectTo(pid, p.role);
      }
    });
    const muteButton = el<HTMLButtonElement>("mute");
    muteButton.addEventListener("click", () => {
      mesh.setMuted(!mesh.isMuted);
      muteButton.textContent = mesh.isMuted ? "unmute" : "mute";
    });
  }

  setupImmersive(): void {
    const button = el<HTMLButtonElement>("enter-xr");
    void xrSupported().then((supported) => {
      button.hidden = !supported;
      if (!supported) return;
      button.addEventListener("click", async () => {
        const renderer = this.renderer!;
        const xr = (navigator as Navigator & { xr?: XRSystemLike }).xr!;
        const xrSession = await xr.requestSession("immersive-vr", {
          optionalFeatures: ["local-floor", "hand-tracking"],
        });
        await renderer.renderer.xr.setSession(xrSession as never);
      });
    });
  }

  startLoops(): void {
    const session = this.session!;
    const renderer = this.renderer!;
    session.onEvent((ev) => {
      if (ev.kind === "state-changed") {
        // object samples feed interpolation; avatars render raw
        for (const [oid, obj] of session.state.objects) {
          if (!session.holds(oid)) {
            renderer.pushObjectSample(oid, obj.transform, performance.now() / 1000);
          }
        }
      }
    });
    let last = performance.now();
    renderer.renderer.setAnimationLoop(() => {
      const now = performance.now();
      const dt = Math.min(0.1, (now - last) / 1000);
      last = now;
      const axes: MoveAxes = this.joystick?.state.active
        ? axesFromJoystick(this.joystick.state.axisX, this.joystick.state.axisY)
        : axesFromKeys(this.heldKeys);
      stepCamera(this.camera, axes, dt);
      if (!renderer.renderer.xr.isPresenting) {
        renderer.camera.position.set(this.camera.position.x, this.camera.position.y,
                                     this.camera.position.z);
        const q = orientationQuat(this.camera);
        renderer.camera.quaternion.set(q.x, q.y, q.z, q.w);
        const published = this.publisher.poll(this.camera);
        if (published) {
          session.sendAvatarPose({
            head: { position: published.position, orientation: published.orientation },
            leftHand: null,
            rightHand: null,
          });
        }
      }
      renderer.locallyHeld = new Set(
        [...session.state.objects.keys()].filter((oid) => session.holds(oid)));
      renderer.sync(session.state, session.participantId, now / 1000);
      renderer.render();
    });
  }
}

interface XRSystemLike {
  requestSession(mode: string, init?: unknown): Promise<unknown>;
}

export function start(): void {
  const app = new App();
  el("create").addEventListener("click", () => {
    void app.createRoom(el<HTMLSelectElement>("preset").value,
                        el<HTMLInputElement>("name").value || "host");
  });
  el("join").addEventListener("click", () => {
    void app.enterRoom(el<HTMLInputElement>("room-id").value.trim(),
                       el<HTMLInputElement>("code").value.trim().toUpperCase(),
                       el<HTMLInputElement>("name").value || "guest");
  });
}

if (typeof document !== "undefined" && document.getElementById("hall")) {
  start();
}
