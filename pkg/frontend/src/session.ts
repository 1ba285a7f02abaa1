/**
 * LocalSession: the live connection of one participant. Owns the
 * websocket, the per-connection sequence counter, heartbeats, the
 * room-state store, and the outgoing pose pipeline. The socket is
 * injectable so the whole flow runs under test without a browser
 * WebSocket.
 */

import {
  AvatarPose,
  ControlMessage,
  decodeControl,
  decodePose,
  encodeControl,
  encodePose,
  POSE_AVATAR,
  POSE_OBJECT,
  Role,
  Transform,
} from "./protocol.js";
import { RoomStateView } from "./state.js";

export interface SocketLike {
  send(data: string | ArrayBuffer): void;
  close(): void;
  onmessage: ((event: { data: string | ArrayBuffer }) => void) | null;
  onclose: (() => void) | null;
  onerror: ((err: unknown) => void) | null;
}

export const HEARTBEAT_INTERVAL_MS = 5000;

type DistributiveOmit<T, K extends PropertyKey> = T extends unknown ? Omit<T, K> : never;

/** A control message before the session stamps its sequence number. */
export type OutgoingControl = DistributiveOmit<ControlMessage, "seq">;

export type SessionEvent =
  | { kind: "joined"; role: Role; participantId: number }
  | { kind: "room-created"; roomId: string; adminToken: string; vrCode: string; guestCode: string }
  | { kind: "join-rejected"; reason: string }
  | { kind: "grab-result"; objectId: number; granted: boolean; holderId: number | null }
  | { kind: "room-closed"; detail: string }
  | { kind: "state-changed" }
  | { kind: "audio-signal"; payload: string }
  | { kind: "error"; code: string; detail: string };

export class LocalSession {
  readonly state = new RoomStateView();
  participantId: number | null = null;
  role: Role | null = null;
  colorIndex = 0;
  roomId: string | null = null;
  private seq = 0;
  private heartbeatTimer: ReturnType<typeof setInterval> | null = null;
  private listeners: Array<(ev: SessionEvent) => void> = [];

  constructor(private readonly socket: SocketLike) {
    socket.onmessage = (event) => this.onFrame(event.data);
    socket.onclose = () => this.stopHeartbeat();
  }

  onEvent(listener: (ev: SessionEvent) => void): void {
    this.listeners.push(listener);
  }

  private emit(ev: SessionEvent): void {
    for (const listener of this.listeners) listener(ev);
  }

  private nextSeq(): number {
    return ++this.seq;
  }

  sendControl(msg: OutgoingControl): void {
    const withSeq = { ...msg, seq: this.nextSeq() } as ControlMessage;
    this.socket.send(encodeControl(withSeq));
  }

  startHeartbeat(): void {
    if (this.heartbeatTimer !== null) return;
    this.heartbeatTimer = setInterval(
      () => this.sendControl({ kind: "heartbeat" }), HEARTBEAT_INTERVAL_MS);
  }

  private stopHeartbeat(): void {
    if (this.heartbeatTimer !== null) {
      clearInterval(this.heartbeatTimer);
      this.heartbeatTimer = null;
    }
  }

  close(): void {
    this.stopHeartbeat();
    this.socket.close();
  }

  // -- outgoing commands --------------------------------------------------

  createRoom(presetId?: string): void {
    this.sendControl(presetId ? { kind: "create_room", preset_id: presetId }
                              : { kind: "create_room" });
  }

  join(roomId: string, code: string, displayName: string): void {
    this.sendControl({ kind: "join_room", room_id: roomId, code, display_name: displayName });
  }

  requestGrab(objectId: number): void {
    this.sendControl({ kind: "grab_request", object_id: objectId });
  }

  releaseGrab(objectId: number): void {
    this.sendControl({ kind: "grab_release", object_id: objectId });
  }

  setGrabEnabled(enabled: boolean): void {
    this.sendControl({ kind: "set_grab_enabled", enabled });
  }

  sendAudioSignal(toParticipant: number, payload: string): void {
    this.sendControl({ kind: "audio_signal", to_participant: toParticipant, payload });
  }

  sendAvatarPose(pose: AvatarPose): void {
    if (this.participantId === null) return;
    this.socket.send(encodePose({
      type: POSE_AVATAR, participantId: this.participantId, pose }));
    const self = this.state.participant(this.participantId);
    if (self) self.pose = pose;
  }

  sendObjectTransform(objectId: number, transform: Transform): void {
    this.socket.send(encodePose({ type: POSE_OBJECT, objectId, transform }));
    const obj = this.state.object(objectId);
    if (obj) obj.transform = transform;
  }

  /** True when this participant currently holds the object's lock. */
  holds(objectId: number): boolean {
    const obj = this.state.object(objectId);
    return obj !== undefined && obj.holderId !== null
      && obj.holderId === this.participantId;
  }

  // -- incoming frames ------------------------------------------------------

  private onFrame(data: string | ArrayBuffer): void {
    if (typeof data === "string") {
      this.onControl(decodeControl(data));
    } else {
      const packet = decodePose(data);
      // never clobber a held object with our own echo
      if (packet.type === POSE_OBJECT && this.holds(packet.objectId)) return;
      this.state.applyPose(packet);
      this.emit({ kind: "state-changed" });
    }
  }

  private onControl(msg: ControlMessage): void {
    switch (msg.kind) {
      case "room_created":
        this.roomId = msg.room_id;
        this.emit({
          kind: "room-created", roomId: msg.room_id, adminToken: msg.admin_token,
          vrCode: msg.vr_code, guestCode: msg.guest_code });
        return;
      case "join_accepted":
        this.participantId = msg.participant_id;
        this.role = msg.role;
        this.colorIndex = msg.color_index;
        this.state.loadSnapshot(msg.snapshot);
        this.startHeartbeat();
        this.emit({ kind: "joined", role: msg.role, participantId: msg.participant_id });
        this.emit({ kind: "state-changed" });
        return;
      case "join_rejected":
        this.emit({ kind: "join-rejected", reason: msg.reason });
        return;
      case "grab_granted":
        this.state.applyControl(msg);
        this.emit({
          kind: "grab-result", objectId: msg.object_id,
          granted: msg.holder_id === this.participantId, holderId: msg.holder_id });
        this.emit({ kind: "state-changed" });
        return;
      case "grab_denied":
        this.emit({
          kind: "grab-result", objectId: msg.object_id,
          granted: false, holderId: msg.holder_id ?? null });
        return;
      case "audio_signal":
        this.emit({ kind: "audio-signal", payload: msg.payload });
        return;
      case "error":
        this.state.applyControl(msg);
        if (msg.code === "room_closed") {
          this.emit({ kind: "room-closed", detail: msg.detail ?? "" });
        } else {
          this.emit({ kind: "error", code: msg.code, detail: msg.detail ?? "" });
        }
        this.emit({ kind: "state-changed" });
        return;
      default:
        this.state.applyControl(msg);
        this.emit({ kind: "state-changed" });
    }
  }
}

export function connectWebSocket(serverUrl: string): Promise<SocketLike> {
  const wsUrl = serverUrl.replace(/^http/, "ws").replace(/\/$/, "") + "/ws";
  return new Promise((resolve, reject) => {
    const ws = new WebSocket(wsUrl);
    ws.binaryType = "arraybuffer";
    ws.onopen = () => resolve(ws as unknown as SocketLike);
    ws.onerror = (err) => reject(err);
  });
}
