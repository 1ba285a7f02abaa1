/**
 * Client-side room state: a pure fold over the snapshot and every
 * subsequent control message and pose packet. The renderer reads this
 * store and never invents objects of its own.
 */

import {
  AvatarPose,
  ControlMessage,
  ObjectRecordWire,
  ParticipantRecord,
  PosePacket,
  POSE_OBJECT,
  Role,
  SnapshotWire,
  Transform,
  transformFromWire,
} from "./protocol.js";

export interface SceneObjectView {
  objectId: number;
  assetUrl: string;
  label: string;
  transform: Transform;
  grabbable: boolean;
  holderId: number | null;
}

export interface ParticipantView {
  participantId: number;
  displayName: string;
  role: Role;
  colorIndex: number;
  pose: AvatarPose | null;
}

export class RoomStateView {
  grabEnabled = true;
  objects = new Map<number, SceneObjectView>();
  participants = new Map<number, ParticipantView>();
  roomClosed = false;
  closeReason = "";

  loadSnapshot(snapshot: SnapshotWire): void {
    this.grabEnabled = snapshot.grab_enabled;
    const keepPoses = new Map<number, AvatarPose | null>();
    for (const [pid, p] of this.participants) keepPoses.set(pid, p.pose);
    this.objects.clear();
    this.participants.clear();
    for (const obj of snapshot.objects) this.upsertObject(obj);
    for (const p of snapshot.participants) {
      this.participants.set(p.participant_id, {
        participantId: p.participant_id,
        displayName: p.display_name,
        role: p.role,
        colorIndex: p.color_index,
        pose: keepPoses.get(p.participant_id) ?? null,
      });
    }
  }

  private upsertObject(obj: ObjectRecordWire): void {
    this.objects.set(obj.object_id, {
      objectId: obj.object_id,
      assetUrl: obj.asset_url,
      label: obj.label,
      transform: transformFromWire(obj.transform),
      grabbable: obj.grabbable,
      holderId: obj.holder_id ?? null,
    });
  }

  applyControl(msg: ControlMessage): void {
    switch (msg.kind) {
      case "state_snapshot":
        this.loadSnapshot({
          grab_enabled: msg.grab_enabled,
          objects: msg.objects,
          participants: msg.participants,
        });
        break;
      case "participant_joined": {
        const p = msg.participant;
        this.participants.set(p.participant_id, {
          participantId: p.participant_id,
          displayName: p.display_name,
          role: p.role,
          colorIndex: p.color_index,
          pose: null,
        });
        break;
      }
      case "participant_left":
        this.participants.delete(msg.participant.participant_id);
        break;
      case "grab_granted": {
        const obj = this.objects.get(msg.object_id);
        if (obj) obj.holderId = msg.holder_id;
        break;
      }
      case "grab_release": {
        const obj = this.objects.get(msg.object_id);
        if (obj) obj.holderId = null;
        break;
      }
      case "set_grab_enabled":
        this.grabEnabled = msg.enabled;
        break;
      case "remove_object":
        this.objects.delete(msg.object_id);
        break;
      case "error":
        if (msg.code === "room_closed") {
          this.roomClosed = true;
          this.closeReason = msg.detail ?? "";
        }
        break;
      default:
        break;
    }
  }

  applyPose(packet: PosePacket): void {
    if (packet.type === POSE_OBJECT) {
      const obj = this.objects.get(packet.objectId);
      if (obj) obj.transform = packet.transform;
      return;
    }
    const participant = this.participants.get(packet.participantId);
    if (participant) participant.pose = packet.pose;
  }

  participant(pid: number): ParticipantView | undefined {
    return this.participants.get(pid);
  }

  object(oid: number): SceneObjectView | undefined {
    return this.objects.get(oid);
  }
}
