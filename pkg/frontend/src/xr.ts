/**
 * Immersive-mode interaction rules.
 *
 * Headsets get the full path: 6-DoF head and hand poses stream as
 * avatar packets, a pinch or trigger near an object requests its grab
 * lock, a granted object follows the grabbing hand, and holding with
 * both hands rescales it uniformly with the distance between them.
 * Phone-in-cardboard viewers get 3 degrees of freedom: orientation
 * only, fixed at the entry point, no grabbing.
 */

import { Transform, Vec3 } from "./protocol.js";
import { SceneObjectView } from "./state.js";

export const GRAB_REACH_M = 0.35;
export const SCALE_MIN = 1e-4;
export const SCALE_MAX = 1e4;

export interface XrModePolicy {
  canGrab: boolean;
  canMove: boolean;   // locomotion within the scene
  dof: 3 | 6;
}

export function policyForMode(mode: "headset" | "cardboard"): XrModePolicy {
  if (mode === "headset") return { canGrab: true, canMove: true, dof: 6 };
  return { canGrab: false, canMove: false, dof: 3 };
}

function dist(a: Vec3, b: Vec3): number {
  return Math.hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

/**
 * Nearest grabbable, unheld object within reach of the hand, or null.
 */
export function grabCandidate(hand: Vec3, objects: Iterable<SceneObjectView>,
                              reach: number = GRAB_REACH_M): SceneObjectView | null {
  let best: SceneObjectView | null = null;
  let bestDist = reach;
  for (const obj of objects) {
    if (!obj.grabbable || obj.holderId !== null) continue;
    const d = dist(hand, obj.transform.position);
    if (d <= bestDist) {
      best = obj;
      bestDist = d;
    }
  }
  return best;
}

/**
 * Uniform two-hand rescale: the scale at grab time multiplied by the
 * ratio of current to initial hand separation, clamped to the
 * protocol's scale range.
 */
export function twoHandScale(initialSeparation: number, currentSeparation: number,
                             scaleAtGrab: number): number {
  if (initialSeparation <= 1e-6) return scaleAtGrab;
  const scaled = scaleAtGrab * (currentSeparation / initialSeparation);
  return Math.max(SCALE_MIN, Math.min(SCALE_MAX, scaled));
}

/**
 * A held object follows the hand: keep the offset captured at grab
 * time, expressed in world space.
 */
export interface GrabHold {
  objectId: number;
  offset: Vec3;          // object position minus hand position at grab
  scaleAtGrab: number;
  initialHandSeparation: number | null;
}

export function startHold(objectId: number, object: Transform, hand: Vec3): GrabHold {
  return {
    objectId,
    offset: {
      x: object.position.x - hand.x,
      y: object.position.y - hand.y,
      z: object.position.z - hand.z,
    },
    scaleAtGrab: object.scale,
    initialHandSeparation: null,
  };
}

export function heldTransform(hold: GrabHold, current: Transform, hand: Vec3,
                              otherHand: Vec3 | null): Transform {
  let scale = current.scale;
  if (otherHand !== null) {
    const separation = dist(hand, otherHand);
    if (hold.initialHandSeparation === null) {
      hold.initialHandSeparation = separation;
      hold.scaleAtGrab = current.scale;
    }
    scale = twoHandScale(hold.initialHandSeparation, separation, hold.scaleAtGrab);
  } else {
    hold.initialHandSeparation = null;
  }
  return {
    position: {
      x: hand.x + hold.offset.x,
      y: hand.y + hold.offset.y,
      z: hand.z + hold.offset.z,
    },
    orientation: current.orientation,
    scale,
  };
}

/** Hide the immersive entry button when the device has no XR support. */
export async function xrSupported(mode: "immersive-vr" = "immersive-vr"): Promise<boolean> {
  const xr = (navigator as Navigator & { xr?: { isSessionSupported(m: string): Promise<boolean> } }).xr;
  if (!xr) return false;
  try {
    return await xr.isSessionSupported(mode);
  } catch {
    return false;
  }
}
