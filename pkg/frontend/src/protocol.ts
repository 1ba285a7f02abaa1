/**
 * Wire protocol: JSON control messages over text frames, little-endian
 * binary pose packets over binary frames.
 *
 * Object transform packet (35 bytes):
 *   u8 type=0x01 | u16 object_id | f32x3 position | f32x4 quat xyzw | f32 scale
 * Avatar pose packet (33 / 61 / 89 bytes):
 *   u8 type=0x02 | u16 participant_id | u16 flags | head f32x7
 *   [| left hand f32x7] [| right hand f32x7]
 */

export const PROTOCOL_VERSION = 1;

export const POSE_OBJECT = 0x01;
export const POSE_AVATAR = 0x02;
export const FLAG_LEFT_HAND = 0x01;
export const FLAG_RIGHT_HAND = 0x02;

export interface Vec3 {
  x: number;
  y: number;
  z: number;
}

export interface Quat {
  x: number;
  y: number;
  z: number;
  w: number;
}

export interface Transform {
  position: Vec3;
  orientation: Quat;
  scale: number;
}

export interface RigidPose {
  position: Vec3;
  orientation: Quat;
}

export interface AvatarPose {
  head: RigidPose;
  leftHand: RigidPose | null;
  rightHand: RigidPose | null;
}

export interface ParticipantRecord {
  participant_id: number;
  display_name: string;
  role: Role;
  color_index: number;
}

export interface ObjectRecord {
  object_id: number;
  asset_url: string;
  label: string;
  transform: Transform;
  grabbable: boolean;
  holder_id?: number;
}

export interface Snapshot {
  grab_enabled: boolean;
  objects: ObjectRecord[];
  participants: ParticipantRecord[];
}

export type Role = "admin" | "vr_active" | "passive";

// Control messages, keyed by the wire `kind` tag. Fields ride flat on
// the envelope, exactly as serialized.
export type ControlMessage =
  | { kind: "hello"; seq: number }
  | { kind: "create_room"; seq: number; preset_id?: string }
  | { kind: "room_created"; seq: number; room_id: string; admin_token: string;
      vr_code: string; guest_code: string }
  | { kind: "join_room"; seq: number; room_id: string; code: string; display_name: string }
  | { kind: "join_accepted"; seq: number; participant_id: number; role: Role;
      color_index: number; snapshot: SnapshotWire }
  | { kind: "join_rejected"; seq: number; reason: string }
  | { kind: "state_snapshot"; seq: number; grab_enabled: boolean;
      objects: ObjectRecordWire[]; participants: ParticipantRecord[] }
  | { kind: "add_object"; seq: number; asset_url: string; label: string;
      initial_transform: TransformWire }
  | { kind: "remove_object"; seq: number; object_id: number }
  | { kind: "set_grab_enabled"; seq: number; enabled: boolean }
  | { kind: "grab_request"; seq: number; object_id: number }
  | { kind: "grab_granted"; seq: number; object_id: number; holder_id: number }
  | { kind: "grab_denied"; seq: number; object_id: number; holder_id?: number }
  | { kind: "grab_release"; seq: number; object_id: number }
  | { kind: "audio_signal"; seq: number; to_participant: number; payload: string }
  | { kind: "participant_joined"; seq: number; participant: ParticipantRecord }
  | { kind: "participant_left"; seq: number; participant: ParticipantRecord }
  | { kind: "heartbeat"; seq: number }
  | { kind: "error"; seq: number; code: string; detail?: string };

// Wire shapes for nested structures (arrays, not named fields).
export interface TransformWire {
  position: [number, number, number];
  orientation: [number, number, number, number];
  scale: number;
}

export interface ObjectRecordWire {
  object_id: number;
  asset_url: string;
  label: string;
  transform: TransformWire;
  grabbable: boolean;
  holder_id?: number;
}

export interface SnapshotWire {
  grab_enabled: boolean;
  objects: ObjectRecordWire[];
  participants: ParticipantRecord[];
}

export class ProtocolError extends Error {}

export function transformFromWire(wire: TransformWire): Transform {
  const [px, py, pz] = wire.position;
  const [qx, qy, qz, qw] = wire.orientation;
  return {
    position: { x: px, y: py, z: pz },
    orientation: { x: qx, y: qy, z: qz, w: qw },
    scale: wire.scale,
  };
}

export function transformToWire(t: Transform): TransformWire {
  return {
    position: [t.position.x, t.position.y, t.position.z],
    orientation: [t.orientation.x, t.orientation.y, t.orientation.z, t.orientation.w],
    scale: t.scale,
  };
}

export function encodeControl(msg: ControlMessage): string {
  return JSON.stringify({ v: PROTOCOL_VERSION, ...msg });
}

export function decodeControl(text: string): ControlMessage {
  let obj: Record<string, unknown>;
  try {
    obj = JSON.parse(text);
  } catch (err) {
    throw new ProtocolError(`unparseable control frame: ${err}`);
  }
  if (typeof obj !== "object" || obj === null) {
    throw new ProtocolError("control frame is not an object");
  }
  if (obj.v !== PROTOCOL_VERSION) {
    throw new ProtocolError(`unsupported protocol version ${obj.v}`);
  }
  if (typeof obj.kind !== "string" || typeof obj.seq !== "number") {
    throw new ProtocolError("missing kind or sequence number");
  }
  const { v: _v, ...rest } = obj;
  return rest as ControlMessage;
}

export type PosePacket =
  | { type: typeof POSE_OBJECT; objectId: number; transform: Transform }
  | { type: typeof POSE_AVATAR; participantId: number; pose: AvatarPose };

const OBJECT_PACKET_SIZE = 35;
const AVATAR_BASE_SIZE = 33;
const HAND_SIZE = 28;

function writeRigid(view: DataView, offset: number, pose: RigidPose): number {
  view.setFloat32(offset, pose.position.x, true);
  view.setFloat32(offset + 4, pose.position.y, true);
  view.setFloat32(offset + 8, pose.position.z, true);
  view.setFloat32(offset + 12, pose.orientation.x, true);
  view.setFloat32(offset + 16, pose.orientation.y, true);
  view.setFloat32(offset + 20, pose.orientation.z, true);
  view.setFloat32(offset + 24, pose.orientation.w, true);
  return offset + HAND_SIZE;
}

function readRigid(view: DataView, offset: number): RigidPose {
  return {
    position: {
      x: view.getFloat32(offset, true),
      y: view.getFloat32(offset + 4, true),
      z: view.getFloat32(offset + 8, true),
    },
    orientation: {
      x: view.getFloat32(offset + 12, true),
      y: view.getFloat32(offset + 16, true),
      z: view.getFloat32(offset + 20, true),
      w: view.getFloat32(offset + 24, true),
    },
  };
}

export function encodePose(packet: PosePacket): ArrayBuffer {
  if (packet.type === POSE_OBJECT) {
    const buffer = new ArrayBuffer(OBJECT_PACKET_SIZE);
    const view = new DataView(buffer);
    view.setUint8(0, POSE_OBJECT);
    view.setUint16(1, packet.objectId, true);
    const t = packet.transform;
    view.setFloat32(3, t.position.x, true);
    view.setFloat32(7, t.position.y, true);
    view.setFloat32(11, t.position.z, true);
    view.setFloat32(15, t.orientation.x, true);
    view.setFloat32(19, t.orientation.y, true);
    view.setFloat32(23, t.orientation.z, true);
    view.setFloat32(27, t.orientation.w, true);
    view.setFloat32(31, t.scale, true);
    return buffer;
  }
  const { pose } = packet;
  const flags = (pose.leftHand ? FLAG_LEFT_HAND : 0) | (pose.rightHand ? FLAG_RIGHT_HAND : 0);
  const size = AVATAR_BASE_SIZE
    + (pose.leftHand ? HAND_SIZE : 0) + (pose.rightHand ? HAND_SIZE : 0);
  const buffer = new ArrayBuffer(size);
  const view = new DataView(buffer);
  view.setUint8(0, POSE_AVATAR);
  view.setUint16(1, packet.participantId, true);
  view.setUint16(3, flags, true);
  let offset = writeRigid(view, 5, pose.head);
  if (pose.leftHand) offset = writeRigid(view, offset, pose.leftHand);
  if (pose.rightHand) writeRigid(view, offset, pose.rightHand);
  return buffer;
}

export function decodePose(data: ArrayBuffer): PosePacket {
  const view = new DataView(data);
  if (view.byteLength < 1) throw new ProtocolError("empty pose frame");
  const type = view.getUint8(0);
  if (type === POSE_OBJECT) {
    if (view.byteLength !== OBJECT_PACKET_SIZE) {
      throw new ProtocolError(`object packet must be ${OBJECT_PACKET_SIZE} bytes`);
    }
    return {
      type: POSE_OBJECT,
      objectId: view.getUint16(1, true),
      transform: {
        position: {
          x: view.getFloat32(3, true),
          y: view.getFloat32(7, true),
          z: view.getFloat32(11, true),
        },
        orientation: {
          x: view.getFloat32(15, true),
          y: view.getFloat32(19, true),
          z: view.getFloat32(23, true),
          w: view.getFloat32(27, true),
        },
        scale: view.getFloat32(31, true),
      },
    };
  }
  if (type === POSE_AVATAR) {
    if (view.byteLength < AVATAR_BASE_SIZE) {
      throw new ProtocolError("avatar packet too short");
    }
    const participantId = view.getUint16(1, true);
    const flags = view.getUint16(3, true);
    const expected = AVATAR_BASE_SIZE
      + (flags & FLAG_LEFT_HAND ? HAND_SIZE : 0)
      + (flags & FLAG_RIGHT_HAND ? HAND_SIZE : 0);
    if (view.byteLength !== expected) {
      throw new ProtocolError(`avatar packet with flags ${flags} must be ${expected} bytes`);
    }
    const head = readRigid(view, 5);
    let offset = 5 + HAND_SIZE;
    let leftHand: RigidPose | null = null;
    let rightHand: RigidPose | null = null;
    if (flags & FLAG_LEFT_HAND) {
      leftHand = readRigid(view, offset);
      offset += HAND_SIZE;
    }
    if (flags & FLAG_RIGHT_HAND) rightHand = readRigid(view, offset);
    return { type: POSE_AVATAR, participantId, pose: { head, leftHand, rightHand } };
  }
  throw new ProtocolError(`unknown pose packet type ${type}`);
}
