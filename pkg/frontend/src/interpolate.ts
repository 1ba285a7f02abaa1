/**
 * Smoothing for replicated transforms: the displayed value interpolates
 * between the last two received samples and never overshoots past the
 * newest one.
 */

import { Quat, Transform, Vec3 } from "./protocol.js";

// endpoint-exact: t=0 gives a and t=1 gives b with no rounding residue
function lerp(a: number, b: number, t: number): number {
  return a * (1 - t) + b * t;
}

function lerpVec3(a: Vec3, b: Vec3, t: number): Vec3 {
  return { x: lerp(a.x, b.x, t), y: lerp(a.y, b.y, t), z: lerp(a.z, b.z, t) };
}

/** Normalized linear quaternion blend along the shorter arc. */
export function nlerp(a: Quat, b: Quat, t: number): Quat {
  const dot = a.x * b.x + a.y * b.y + a.z * b.z + a.w * b.w;
  const sign = dot < 0 ? -1 : 1;
  const x = lerp(a.x, sign * b.x, t);
  const y = lerp(a.y, sign * b.y, t);
  const z = lerp(a.z, sign * b.z, t);
  const w = lerp(a.w, sign * b.w, t);
  const n = Math.hypot(x, y, z, w) || 1;
  return { x: x / n, y: y / n, z: z / n, w: w / n };
}

export function blendTransforms(a: Transform, b: Transform, t: number): Transform {
  return {
    position: lerpVec3(a.position, b.position, t),
    orientation: nlerp(a.orientation, b.orientation, t),
    scale: lerp(a.scale, b.scale, t),
  };
}

export class TransformInterpolator {
  private previous: Transform | null = null;
  private latest: Transform | null = null;
  private latestAt = 0;

  constructor(private readonly windowS: number) {}

  push(sample: Transform, now: number): void {
    this.previous = this.latest ?? sample;
    this.latest = sample;
    this.latestAt = now;
  }

  /**
   * Displayed value at `now`: on the segment from the previous sample
   * to the latest, reaching the latest one window after it arrived.
   * The blend factor is clamped, so the result never overshoots.
   */
  sample(now: number): Transform | null {
    if (this.latest === null) return null;
    if (this.previous === null) return this.latest;
    const t = Math.max(0, Math.min(1, (now - this.latestAt) / this.windowS));
    return blendTransforms(this.previous, this.latest, t);
  }
}
