/**
 * Role-conditional UI: which affordances a participant sees. Passive
 * guests watch and listen only, so grab and microphone controls are
 * hidden for them entirely.
 */

import { Role } from "./protocol.js";

export interface Affordances {
  canGrab: boolean;
  canTalk: boolean;
  canManageRoom: boolean;
}

export function affordancesForRole(role: Role): Affordances {
  return {
    canGrab: role === "admin" || role === "vr_active",
    canTalk: role === "admin" || role === "vr_active",
    canManageRoom: role === "admin",
  };
}

/**
 * Apply visibility to the role-gated controls. Elements are looked up
 * by the data-affordance attribute: "grab", "mic", or "manage".
 */
export function applyAffordances(root: ParentNode, role: Role): Affordances {
  const a = affordancesForRole(role);
  const visibility: Record<string, boolean> = {
    grab: a.canGrab,
    mic: a.canTalk,
    manage: a.canManageRoom,
  };
  for (const el of root.querySelectorAll<HTMLElement>("[data-affordance]")) {
    const kind = el.dataset.affordance ?? "";
    if (kind in visibility) el.hidden = !visibility[kind];
  }
  return a;
}
