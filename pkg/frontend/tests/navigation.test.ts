/**
 * Device-adaptive navigation: holding W moves forward along the view
 * direction, an upward joystick drag produces the same displacement,
 * and the pose publisher is change-driven and rate-capped.
 */

import { describe, expect, it } from "vitest";

import {
  axesFromJoystick,
  axesFromKeys,
  applyLook,
  displacement,
  MOVE_SPEED,
  orientationQuat,
  PosePublisher,
  stepCamera,
  type CameraPose,
} from "../src/navigation.js";

function freshPose(): CameraPose {
  return { position: { x: 0, y: 1.6, z: 0 }, yaw: 0, pitch: 0 };
}

describe("keyboard navigation", () => {
  it("holding W for one second displaces forward along the view direction", () => {
    const pose = freshPose();
    stepCamera(pose, axesFromKeys(["KeyW"]), 1.0);
    // yaw 0 looks down -z
    expect(pose.position.z).toBeCloseTo(-MOVE_SPEED, 10);
    expect(pose.position.x).toBeCloseTo(0, 10);
    expect(pose.position.y).toBe(1.6);
  });

  it("arrows alias WASD", () => {
    expect(axesFromKeys(["ArrowUp"])).toEqual(axesFromKeys(["KeyW"]));
    expect(axesFromKeys(["ArrowDown"])).toEqual(axesFromKeys(["KeyS"]));
    expect(axesFromKeys(["ArrowLeft"])).toEqual(axesFromKeys(["KeyA"]));
    expect(axesFromKeys(["ArrowRight"])).toEqual(axesFromKeys(["KeyD"]));
  });

  it("movement follows yaw", () => {
    const pose = freshPose();
    pose.yaw = Math.PI / 2;   // facing -x
    stepCamera(pose, axesFromKeys(["KeyW"]), 1.0);
    expect(pose.position.x).toBeCloseTo(-MOVE_SPEED, 10);
    expect(pose.position.z).toBeCloseTo(0, 10);
  });

  it("diagonal movement is speed-normalized", () => {
    const d = displacement(axesFromKeys(["KeyW", "KeyD"]), 0, 1.0);
    expect(Math.hypot(d.x, d.z)).toBeCloseTo(MOVE_SPEED, 10);
  });

  it("opposing keys cancel", () => {
    const d = displacement(axesFromKeys(["KeyW", "KeyS"]), 0, 1.0);
    expect(d).toEqual({ x: 0, y: 0, z: 0 });
  });
});

describe("virtual joystick", () => {
  it("dragging up equals holding W", () => {
    const fromKeys = displacement(axesFromKeys(["KeyW"]), 0.3, 1.0);
    const fromStick = displacement(axesFromJoystick(0, -1), 0.3, 1.0);
    expect(fromStick).toEqual(fromKeys);
  });

  it("dragging right strafes right", () => {
    const d = displacement(axesFromJoystick(1, 0), 0, 1.0);
    expect(d.x).toBeCloseTo(MOVE_SPEED, 10);
    expect(d.z).toBeCloseTo(0, 10);
  });
});

describe("look controls", () => {
  it("mouse drag orients the camera and clamps pitch", () => {
    const pose = freshPose();
    applyLook(pose, 100, 0);
    expect(pose.yaw).toBeLessThan(0);
    applyLook(pose, 0, -10000);
    expect(pose.pitch).toBeLessThan(Math.PI / 2);
    applyLook(pose, 0, 20000);
    expect(pose.pitch).toBeGreaterThan(-Math.PI / 2);
  });

  it("orientation quaternion is unit length", () => {
    const pose = freshPose();
    pose.yaw = 1.1;
    pose.pitch = -0.4;
    const q = orientationQuat(pose);
    expect(Math.hypot(q.x, q.y, q.z, q.w)).toBeCloseTo(1, 12);
  });
});

describe("pose publisher", () => {
  it("emits nothing without input", () => {
    let t = 0;
    const publisher = new PosePublisher(30, () => t);
    const pose = freshPose();
    expect(publisher.poll(pose)).not.toBeNull();   // initial pose goes out once
    for (let i = 0; i < 100; i++) {
      t += 1 / 30;
      expect(publisher.poll(pose)).toBeNull();     // unchanged: zero egress
    }
  });

  it("caps the send rate at 30 Hz even with continuous motion", () => {
    let t = 0;
    const publisher = new PosePublisher(30, () => t);
    const pose = freshPose();
    let sent = 0;
    for (let frame = 0; frame < 240; frame++) {    // 60 fps for 4 s
      t = frame / 60;
      pose.position = { x: frame * 0.01, y: 1.6, z: 0 };
      if (publisher.poll(pose)) sent++;
    }
    expect(sent).toBeLessThanOrEqual(30 * 4 + 1);
    expect(sent).toBeGreaterThan(30 * 4 * 0.5);
  });
});
