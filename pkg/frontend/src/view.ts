// Canvas rendering of the arm(s), task overlay, and recent ee trail.
// All geometry helpers are pure so tests can check pixel positions without
// rasterizing anything.

import { ArmLayout, armChain } from './fk.js';
import { StateEvent } from './protocol.js';

export interface Camera {
  scale: number; // pixels per meter
  offsetX: number; // canvas x of world origin
  offsetY: number; // canvas y of world origin (y axis flips)
}

export function cameraForBounds(
  canvasW: number,
  canvasH: number,
  bounds: { xMin: number; xMax: number; yMin: number; yMax: number },
  margin = 20,
): Camera {
  const w = bounds.xMax - bounds.xMin;
  const h = bounds.yMax - bounds.yMin;
  const scale = Math.min((canvasW - 2 * margin) / w, (canvasH - 2 * margin) / h);
  return {
    scale,
    offsetX: margin - bounds.xMin * scale + (canvasW - 2 * margin - w * scale) / 2,
    offsetY: canvasH - margin + bounds.yMin * scale - (canvasH - 2 * margin - h * scale) / 2,
  };
}

export function worldToCanvas(camera: Camera, p: [number, number]): [number, number] {
  return [camera.offsetX + p[0] * camera.scale, camera.offsetY - p[1] * camera.scale];
}

export interface TaskOverlay {
  kind: string;
  sine?: { amplitude: number; wavelength: number; span: [number, number] };
  circles?: { center: [number, number]; radii: number[] };
  goalRegion?: [number, number, number, number];
  pivotBox?: [number, number, number, number];
}

export class SessionView {
  layout: ArmLayout;
  overlay: TaskOverlay | null = null;
  latest: StateEvent | null = null;
  stale = false;
  trail: [number, number][] = [];
  static readonly TRAIL_CAP = 500;

  constructor(layout: ArmLayout) {
    this.layout = layout;
  }

  // coalesce to latest state only; the render loop never sees backlog
  onState(event: StateEvent): void {
    this.latest = event;
    this.stale = false;
    const ee = event.ee[0];
    this.trail.push([ee[0], ee[1]]);
    if (this.trail.length > SessionView.TRAIL_CAP) {
      this.trail.splice(0, this.trail.length - SessionView.TRAIL_CAP);
    }
  }

  armPixelChains(camera: Camera): [number, number][][] {
    if (!this.latest) return [];
    const chains: [number, number][][] = [];
    for (let arm = 0; arm < this.layout.armCount; arm++) {
      const chain = armChain(this.layout, this.latest.q, arm);
      chains.push(chain.points.map((p) => worldToCanvas(camera, p)));
    }
    return chains;
  }

  render(ctx: CanvasRenderingContext2D, camera: Camera): void {
    const canvas = ctx.canvas;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    this.drawOverlay(ctx, camera);
    ctx.strokeStyle = 'rgba(30,120,200,0.35)';
    ctx.beginPath();
    this.trail.forEach((p, i) => {
      const [x, y] = worldToCanvas(camera, p);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
    const chains = this.armPixelChains(camera);
    ctx.lineWidth = 4;
    ctx.strokeStyle = this.stale ? '#9aa0a6' : '#202124';
    for (const pts of chains) {
      ctx.beginPath();
      pts.forEach(([x, y], i) => (i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y)));
      ctx.stroke();
      for (const [x, y] of pts) {
        ctx.beginPath();
        ctx.arc(x, y, 4, 0, 2 * Math.PI);
        ctx.fillStyle = this.stale ? '#9aa0a6' : '#5f6368';
        ctx.fill();
      }
      const tip = pts[pts.length - 1];
      ctx.beginPath();
      ctx.arc(tip[0], tip[1], 6, 0, 2 * Math.PI);
      ctx.fillStyle = '#d93025';
      ctx.fill();
    }
    ctx.lineWidth = 1;
  }

  private drawOverlay(ctx: CanvasRenderingContext2D, camera: Camera): void {
    if (!this.overlay) return;
    ctx.strokeStyle = '#c8d0d8';
    ctx.fillStyle = 'rgba(160,200,160,0.25)';
    const o = this.overlay;
    if (o.sine) {
      ctx.beginPath();
      const [lo, hi] = o.sine.span;
      for (let i = 0; i <= 200; i++) {
        const x = lo + ((hi - lo) * i) / 200;
        const y = o.sine.amplitude * Math.sin((2 * Math.PI * x) / o.sine.wavelength);
        const [cx, cy] = worldToCanvas(camera, [x, y]);
        if (i === 0) ctx.moveTo(cx, cy);
        else ctx.lineTo(cx, cy);
      }
      ctx.stroke();
    }
    if (o.circles) {
      for (const r of o.circles.radii) {
        const [cx, cy] = worldToCanvas(camera, o.circles.center);
        ctx.beginPath();
        ctx.arc(cx, cy, r * camera.scale, 0, 2 * Math.PI);
        ctx.stroke();
      }
    }
    if (o.goalRegion) {
      const [x0, y0, x1, y1] = o.goalRegion;
      const [cx0, cy0] = worldToCanvas(camera, [x0, y1]);
      const [cx1, cy1] = worldToCanvas(camera, [x1, y0]);
      ctx.fillRect(cx0, cy0, cx1 - cx0, cy1 - cy0);
    }
    if (o.pivotBox) {
      const [x0, y0, x1, y1] = o.pivotBox;
      const [cx0, cy0] = worldToCanvas(camera, [x0, y1]);
      const [cx1, cy1] = worldToCanvas(camera, [x1, y0]);
      ctx.strokeRect(cx0, cy0, cx1 - cx0, cy1 - cy0);
    }
  }
}
