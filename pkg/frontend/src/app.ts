// Page wiring: pickers backed by the HTTP endpoints, a WebSocket session
// feed rendered server-authoritatively, and the input send loop.

import { ArmLayout } from './fk.js';
import { InputSource, startSendLoop } from './input.js';
import { controlMessage, isStateEvent, parseServerMessage } from './protocol.js';
import { Camera, cameraForBounds, SessionView, TaskOverlay } from './view.js';

interface TaskDetail {
  task_kind: string;
  geometry: {
    arm_count: number;
    joints_per_arm: number;
    link_length: number;
    base_positions: [number, number][];
  };
  [key: string]: unknown;
}

function overlayFor(detail: TaskDetail): TaskOverlay {
  const overlay: TaskOverlay = { kind: detail.task_kind };
  if (detail.task_kind === 'sine') {
    overlay.sine = {
      amplitude: detail.sine_amplitude as number,
      wavelength: detail.sine_wavelength as number,
      span: detail.sine_x_span as [number, number],
    };
  } else if (detail.task_kind === 'circle') {
    const [rLo, rHi] = detail.circle_radius_range as [number, number];
    overlay.circles = {
      center: detail.circle_center as [number, number],
      radii: [rLo, (rLo + rHi) / 2, rHi],
    };
  } else if (detail.task_kind === 'reach') {
    overlay.goalRegion = detail.reach_goal_region as [number, number, number, number];
  } else if (detail.task_kind === 'rotate') {
    overlay.pivotBox = detail.rotate_pivot_box as [number, number, number, number];
  }
  return overlay;
}

function boundsFor(layout: ArmLayout): { xMin: number; xMax: number; yMin: number; yMax: number } {
  const reach = layout.jointsPerArm * layout.linkLength;
  let xMin = Infinity;
  let xMax = -Infinity;
  let yMin = Infinity;
  let yMax = -Infinity;
  for (const [bx, by] of layout.basePositions) {
    xMin = Math.min(xMin, bx - reach);
    xMax = Math.max(xMax, bx + reach);
    yMin = Math.min(yMin, by - reach);
    yMax = Math.max(yMax, by + reach);
  }
  return { xMin, xMax, yMin, yMax };
}

class App {
  private view: SessionView | null = null;
  private camera: Camera | null = null;
  private input: InputSource | null = null;
  private ws: WebSocket | null = null;
  private stopSend: (() => void) | null = null;
  private sessionId: string | null = null;
  private reconnectDelay = 500;

  constructor(
    private canvas: HTMLCanvasElement,
    private banner: HTMLElement,
    private zWidget: HTMLElement,
  ) {}

  async loadPickers(): Promise<void> {
    const [models, tasks] = await Promise.all([
      fetch('/models').then((r) => r.json()),
      fetch('/tasks').then((r) => r.json()),
    ]);
    const modelSel = document.getElementById('model') as HTMLSelectElement;
    const taskSel = document.getElementById('task') as HTMLSelectElement;
    modelSel.innerHTML = models.map((m: string) => `<option>${m}</option>`).join('');
    taskSel.innerHTML = tasks.map((t: string) => `<option>${t}</option>`).join('');
  }

  async start(model: string, task: string): Promise<void> {
    const resp = await fetch('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ model, task }),
    });
    if (!resp.ok) {
      this.showBanner(`session rejected: ${(await resp.json()).detail}`, 'error');
      return;
    }
    const { id, latent_dim, arm_count } = await resp.json();
    this.sessionId = id;
    const detail: TaskDetail = await fetch(`/tasks/${task}`).then((r) => r.json());
    const layout: ArmLayout = {
      armCount: detail.geometry.arm_count,
      jointsPerArm: detail.geometry.joints_per_arm,
      linkLength: detail.geometry.link_length,
      basePositions: detail.geometry.base_positions,
    };
    this.view = new SessionView(layout);
    this.view.overlay = overlayFor(detail);
    this.camera = cameraForBounds(this.canvas.width, this.canvas.height, boundsFor(layout));
    this.input = new InputSource(latent_dim);
    this.input.attach(window);
    this.connect();
    this.renderLoop();
  }

  private connect(): void {
    if (!this.sessionId) return;
    const proto = location.protocol === 'https:' ? 'wss' : 'ws';
    const ws = new WebSocket(`${proto}://${location.host}/session/${this.sessionId}`);
    this.ws = ws;
    ws.onopen = () => {
      this.hideBanner();
      this.reconnectDelay = 500;
      if (this.input) this.input.enabled = true;
      this.stopSend = startSendLoop(this.input!, (msg) => {
        if (ws.readyState === WebSocket.OPEN) ws.send(msg);
      });
    };
    ws.onmessage = (ev: MessageEvent) => {
      const msg = parseServerMessage(String(ev.data));
      if (!msg) return;
      if (isStateEvent(msg)) {
        this.view?.onState(msg);
        this.updateZWidget(msg.z);
      } else if (msg.type === 'fault') {
        this.showBanner(`fault: ${msg.reason} (input disabled; resume to continue)`, 'error');
        if (this.input) this.input.enabled = false;
      } else if (msg.type === 'warn_ood') {
        this.showBanner(`warning: off demonstrated states (distance ${msg.distance.toFixed(2)})`, 'warn');
      } else if (msg.type === 'lifecycle' && msg.event === 'resumed') {
        this.hideBanner();
        if (this.input) this.input.enabled = true;
      }
    };
    ws.onclose = () => {
      this.stopSend?.();
      if (this.view) this.view.stale = true;
      this.showBanner('connection lost, reconnecting…', 'warn');
      setTimeout(() => this.connect(), this.reconnectDelay);
      this.reconnectDelay = Math.min(this.reconnectDelay * 2, 5000);
    };
  }

  sendControl(kind: 'pause' | 'resume' | 'reset'): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(controlMessage(kind));
    } else {
      this.showBanner('not connected', 'warn');
    }
  }

  private renderLoop(): void {
    const ctx = this.canvas.getContext('2d');
    const frame = () => {
      if (ctx && this.view && this.camera) this.view.render(ctx, this.camera);
      requestAnimationFrame(frame);
    };
    requestAnimationFrame(frame);
  }

  private updateZWidget(z: number[]): void {
    this.zWidget.textContent = `z = [${z.map((v) => v.toFixed(2)).join(', ')}]`;
  }

  private showBanner(text: string, kind: 'warn' | 'error'): void {
    this.banner.textContent = text;
    this.banner.className = `banner ${kind}`;
    this.banner.style.display = 'block';
  }

  private hideBanner(): void {
    this.banner.style.display = 'none';
  }
}

export function boot(): void {
  const app = new App(
    document.getElementById('arena') as HTMLCanvasElement,
    document.getElementById('banner') as HTMLElement,
    document.getElementById('zwidget') as HTMLElement,
  );
  app.loadPickers();
  (document.getElementById('connect') as HTMLButtonElement).onclick = () => {
    const model = (document.getElementById('model') as HTMLSelectElement).value;
    const task = (document.getElementById('task') as HTMLSelectElement).value;
    app.start(model, task);
  };
  for (const kind of ['pause', 'resume', 'reset'] as const) {
    (document.getElementById(kind) as HTMLButtonElement).onclick = () => app.sendControl(kind);
  }
}

if (typeof document !== 'undefined' && document.getElementById('arena')) {
  boot();
}
