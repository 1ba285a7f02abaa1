/**
 * Immersive interaction rules: grab reach, two-hand rescaling, and the
 * cardboard 3-DoF policy.
 */

import { describe, expect, it } from "vitest";

import {
  grabCandidate,
  heldTransform,
  policyForMode,
  startHold,
  twoHandScale,
  SCALE_MAX,
  SCALE_MIN,
} from "../src/xr.js";
import type { SceneObjectView } from "../src/state.js";

function obj(id: number, x: number, held = false, grabbable = true): SceneObjectView {
  return {
    objectId: id, assetUrl: "/assets/x.glb", label: `o${id}`,
    transform: { position: { x, y: 0, z: 0 },
                 orientation: { x: 0, y: 0, z: 0, w: 1 }, scale: 1 },
    grabbable,
    holderId: held ? 99 : null,
  };
}

describe("grab targeting", () => {
  it("picks the nearest free grabbable object within reach", () => {
    const objects = [obj(1, 0.3), obj(2, 0.1), obj(3, 5.0)];
    const hit = grabCandidate({ x: 0, y: 0, z: 0 }, objects);
    expect(hit?.objectId).toBe(2);
  });

  it("ignores held and non-grabbable objects and respects reach", () => {
    expect(grabCandidate({ x: 0, y: 0, z: 0 }, [obj(1, 0.1, true)])).toBeNull();
    expect(grabCandidate({ x: 0, y: 0, z: 0 }, [obj(1, 0.1, false, false)])).toBeNull();
    expect(grabCandidate({ x: 0, y: 0, z: 0 }, [obj(1, 2.0)])).toBeNull();
  });
});

describe("two-hand rescale", () => {
  it("scales with the hand-separation ratio", () => {
    expect(twoHandScale(0.2, 0.4, 1.0)).toBeCloseTo(2.0, 12);
    expect(twoHandScale(0.4, 0.2, 1.0)).toBeCloseTo(0.5, 12);
    expect(twoHandScale(0.3, 0.3, 1.7)).toBeCloseTo(1.7, 12);
  });

  it("clamps to the protocol scale range", () => {
    expect(twoHandScale(1.0, 1e9, 1.0)).toBe(SCALE_MAX);
    expect(twoHandScale(1e9, 1e-9, 1.0)).toBe(SCALE_MIN);
    expect(twoHandScale(0, 1.0, 1.25)).toBe(1.25);   // degenerate separation
  });
});

describe("held objects", () => {
  it("follow the hand keeping the grab offset", () => {
    const current = obj(1, 1.0).transform;
    const hold = startHold(1, current, { x: 0.8, y: 0, z: 0 });
    const next = heldTransform(hold, current, { x: 2.0, y: 0.5, z: 0 }, null);
    expect(next.position).toEqual({ x: 2.2, y: 0.5, z: 0 });
    expect(next.scale).toBe(1);
  });

  it("rescale kicks in when the second hand joins", () => {
    const current = obj(1, 0).transform;
    const hold = startHold(1, current, { x: 0, y: 0, z: 0 });
    const one = heldTransform(hold, current, { x: 0, y: 0, z: 0 }, { x: 0.2, y: 0, z: 0 });
    expect(one.scale).toBe(1);   // separation captured, no change yet
    const two = heldTransform(hold, { ...current, scale: one.scale },
                              { x: 0, y: 0, z: 0 }, { x: 0.4, y: 0, z: 0 });
    expect(two.scale).toBeCloseTo(2.0, 12);
  });
});

describe("device policies", () => {
  it("headsets get 6-DoF with grabbing, cardboard is look-only", () => {
    expect(policyForMode("headset")).toEqual({ canGrab: true, canMove: true, dof: 6 });
    expect(policyForMode("cardboard")).toEqual({ canGrab: false, canMove: false, dof: 3 });
  });
});
