// @vitest-environment jsdom
/**
 * Role-conditional UI: grab and microphone affordances render only for
 * roles the permission matrix allows.
 */

import { describe, expect, it } from "vitest";

import { affordancesForRole, applyAffordances } from "../src/affordances.js";

function stage(): HTMLElement {
  document.body.innerHTML = `
    <div id="stage">
      <button id="mute" data-affordance="mic">mute</button>
      <span id="grab-hint" data-affordance="grab">grab</span>
      <button id="kick" data-affordance="manage">manage</button>
      <span id="always">scene</span>
    </div>`;
  return document.getElementById("stage")!;
}

describe("affordance matrix", () => {
  it("passive hides grab and mic", () => {
    const root = stage();
    applyAffordances(root, "passive");
    expect(document.getElementById("mute")!.hidden).toBe(true);
    expect(document.getElementById("grab-hint")!.hidden).toBe(true);
    expect(document.getElementById("kick")!.hidden).toBe(true);
    expect(document.getElementById("always")!.hidden).toBe(false);
  });

  it("vr_active shows grab and mic, hides management", () => {
    const root = stage();
    applyAffordances(root, "vr_active");
    expect(document.getElementById("mute")!.hidden).toBe(false);
    expect(document.getElementById("grab-hint")!.hidden).toBe(false);
    expect(document.getElementById("kick")!.hidden).toBe(true);
  });

  it("admin sees everything", () => {
    const root = stage();
    applyAffordances(root, "admin");
    expect(document.getElementById("mute")!.hidden).toBe(false);
    expect(document.getElementById("grab-hint")!.hidden).toBe(false);
    expect(document.getElementById("kick")!.hidden).toBe(false);
  });

  it("matrix is monotone: passive < vr_active < admin", () => {
    const passive = affordancesForRole("passive");
    const vr = affordancesForRole("vr_active");
    const admin = affordancesForRole("admin");
    expect(passive).toEqual({ canGrab: false, canTalk: false, canManageRoom: false });
    expect(vr).toEqual({ canGrab: true, canTalk: true, canManageRoom: false });
    expect(admin).toEqual({ canGrab: true, canTalk: true, canManageRoom: true });
  });
});
