/**
 * Virtual joystick for handheld devices: grey circles pinned to the
 * bottom-left corner, driven by pointer events. Deflection maps to the
 * same movement axes as the keyboard path.
 */

export interface JoystickState {
  axisX: number; // -1 .. 1, right positive
  axisY: number; // -1 .. 1, down positive
  active: boolean;
}

/** Deflection in px relative to the base center, clamped to the radius. */
export function deflectionToAxes(dxPx: number, dyPx: number, radiusPx: number):
    { axisX: number; axisY: number } {
  const length = Math.hypot(dxPx, dyPx);
  const clamp = length > radiusPx ? radiusPx / length : 1;
  return { axisX: (dxPx * clamp) / radiusPx, axisY: (dyPx * clamp) / radiusPx };
}

export class VirtualJoystick {
  readonly container: HTMLDivElement;
  private readonly base: HTMLDivElement;
  private readonly knob: HTMLDivElement;
  private pointerId: number | null = null;
  private centerX = 0;
  private centerY = 0;
  private radius = 60;
  state: JoystickState = { axisX: 0, axisY: 0, active: false };

  constructor(parent: HTMLElement) {
    this.container = document.createElement("div");
    this.container.className = "joystick";
    this.base = document.createElement("div");
    this.base.className = "joystick-base";
    this.knob = document.createElement("div");
    this.knob.className = "joystick-knob";
    this.base.appendChild(this.knob);
    this.container.appendChild(this.base);
    parent.appendChild(this.container);

    this.base.addEventListener("pointerdown", (e) => this.onDown(e));
    this.base.addEventListener("pointermove", (e) => this.onMove(e));
    this.base.addEventListener("pointerup", (e) => this.onUp(e));
    this.base.addEventListener("pointercancel", (e) => this.onUp(e));
  }

  private onDown(e: PointerEvent): void {
    if (this.pointerId !== null) return;
    this.pointerId = e.pointerId;
    const rect = this.base.getBoundingClientRect();
    this.centerX = rect.left + rect.width / 2;
    this.centerY = rect.top + rect.height / 2;
    this.radius = Math.max(1, rect.width / 2);
    if (this.base.setPointerCapture) this.base.setPointerCapture(e.pointerId);
    this.state.active = true;
    this.track(e.clientX, e.clientY);
  }

  private onMove(e: PointerEvent): void {
    if (e.pointerId !== this.pointerId) return;
    this.track(e.clientX, e.clientY);
  }

  private onUp(e: PointerEvent): void {
    if (e.pointerId !== this.pointerId) return;
    this.pointerId = null;
    this.state = { axisX: 0, axisY: 0, active: false };
    this.knob.style.transform = "translate(0px, 0px)";
  }

  private track(clientX: number, clientY: number): void {
    const { axisX, axisY } = deflectionToAxes(
      clientX - this.centerX, clientY - this.centerY, this.radius);
    this.state.axisX = axisX;
    this.state.axisY = axisY;
    this.knob.style.transform =
      `translate(${axisX * this.radius * 0.6}px, ${axisY * this.radius * 0.6}px)`;
  }
}
