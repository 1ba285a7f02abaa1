/**
 * Non-immersive navigation: WASD/arrow keys plus mouse drag on
 * desktops, virtual joystick plus touch drag on handhelds. Both input
 * styles produce the same camera displacement math, and the resulting
 * pose is published at most 30 times per second, only when it changed.
 */

import { Quat, Vec3 } from "./protocol.js";

export const MOVE_SPEED = 2.0;         // m/s
export const LOOK_SENSITIVITY = 0.005; // rad per px
export const MAX_SEND_RATE_HZ = 30;
const PITCH_LIMIT = Math.PI / 2 - 0.05;

export interface CameraPose {
  position: Vec3;
  yaw: number;   // rad, 0 looks down -z
  pitch: number; // rad, positive looks up
}

export interface MoveAxes {
  forward: number; // +1 forward, -1 back
  strafe: number;  // +1 right, -1 left
}

const KEY_AXES: Record<string, Partial<MoveAxes>> = {
  KeyW: { forward: 1 },
  ArrowUp: { forward: 1 },
  KeyS: { forward: -1 },
  ArrowDown: { forward: -1 },
  KeyD: { strafe: 1 },
  ArrowRight: { strafe: 1 },
  KeyA: { strafe: -1 },
  ArrowLeft: { strafe: -1 },
};

/** Combine currently held keys into movement axes. */
export function axesFromKeys(held: Iterable<string>): MoveAxes {
  const axes: MoveAxes = { forward: 0, strafe: 0 };
  for (const code of held) {
    const contribution = KEY_AXES[code];
    if (!contribution) continue;
    axes.forward += contribution.forward ?? 0;
    axes.strafe += contribution.strafe ?? 0;
  }
  axes.forward = Math.max(-1, Math.min(1, axes.forward));
  axes.strafe = Math.max(-1, Math.min(1, axes.strafe));
  return axes;
}

/**
 * Joystick deflection to movement axes: pushing up moves forward,
 * exactly like holding W.
 */
export function axesFromJoystick(axisX: number, axisY: number): MoveAxes {
  return {
    forward: Math.max(-1, Math.min(1, -axisY)),
    strafe: Math.max(-1, Math.min(1, axisX)),
  };
}

/**
 * Horizontal displacement for one step: forward follows the view
 * direction (yaw), strafe is perpendicular; vertical stays fixed.
 */
export function displacement(axes: MoveAxes, yaw: number, dt: number,
                             speed: number = MOVE_SPEED): Vec3 {
  const length = Math.hypot(axes.forward, axes.strafe);
  if (length < 1e-9) return { x: 0, y: 0, z: 0 };
  const norm = length > 1 ? 1 / length : 1;
  const forward = axes.forward * norm;
  const strafe = axes.strafe * norm;
  const sin = Math.sin(yaw);
  const cos = Math.cos(yaw);
  // view direction at yaw=0 is -z; strafe right is +x
  return {
    x: (-sin * forward + cos * strafe) * speed * dt,
    y: 0,
    z: (-cos * forward - sin * strafe) * speed * dt,
  };
}

export function applyLook(pose: CameraPose, dxPx: number, dyPx: number,
                          sensitivity: number = LOOK_SENSITIVITY): void {
  pose.yaw -= dxPx * sensitivity;
  pose.pitch = Math.max(-PITCH_LIMIT, Math.min(PITCH_LIMIT, pose.pitch - dyPx * sensitivity));
}

export function stepCamera(pose: CameraPose, axes: MoveAxes, dt: number,
                           speed: number = MOVE_SPEED): void {
  const d = displacement(axes, pose.yaw, dt, speed);
  pose.position = {
    x: pose.position.x + d.x,
    y: pose.position.y + d.y,
    z: pose.position.z + d.z,
  };
}

/** Camera yaw/pitch to a unit quaternion (YXZ order, y-up). */
export function orientationQuat(pose: CameraPose): Quat {
  const cy = Math.cos(pose.yaw / 2);
  const sy = Math.sin(pose.yaw / 2);
  const cp = Math.cos(pose.pitch / 2);
  const sp = Math.sin(pose.pitch / 2);
  return {
    x: sp * cy,
    y: sy * cp,
    z: -sp * sy,
    w: cy * cp,
  };
}

export interface PublishedPose {
  position: Vec3;
  orientation: Quat;
}

/**
 * Rate-limits outgoing pose updates to MAX_SEND_RATE_HZ and suppresses
 * unchanged poses entirely: an idle camera produces zero egress.
 */
export class PosePublisher {
  private lastSent: string | null = null;
  private lastSendTime = -Infinity;

  constructor(private readonly rateHz: number = MAX_SEND_RATE_HZ,
              private readonly now: () => number = () => performance.now() / 1000) {}

  poll(pose: CameraPose): PublishedPose | null {
    const t = this.now();
    if (t - this.lastSendTime < 1 / this.rateHz) return null;
    const out: PublishedPose = {
      position: pose.position,
      orientation: orientationQuat(pose),
    };
    const key = JSON.stringify(out);
    if (key === this.lastSent) return null;
    this.lastSent = key;
    this.lastSendTime = t;
    return out;
  }
}
