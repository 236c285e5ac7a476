// Latent input capture: gamepad left stick when one is connected, arrow
// keys otherwise. Sampled at the send rate; values under the deadzone are
// shown (and sent) as zero, mirroring the server's own gate.

import { inputMessage } from './protocol.js';

export class InputSource {
  latentDim: number;
  deadzone: number;
  enabled = true;
  private keys = new Set<string>();

  constructor(latentDim: number, deadzone = 0.05) {
    this.latentDim = latentDim;
    this.deadzone = deadzone;
  }

  attach(target: EventTarget): void {
    target.addEventListener('keydown', (e) => this.keys.add((e as KeyboardEvent).key));
    target.addEventListener('keyup', (e) => this.keys.delete((e as KeyboardEvent).key));
  }

  keyboardAxes(): number[] {
    const z = new Array(this.latentDim).fill(0);
    if (this.keys.has('ArrowRight')) z[0] += 1;
    if (this.keys.has('ArrowLeft')) z[0] -= 1;
    if (this.latentDim > 1) {
      if (this.keys.has('ArrowUp')) z[1] += 1;
      if (this.keys.has('ArrowDown')) z[1] -= 1;
    }
    return z;
  }

  gamepadAxes(): number[] | null {
    const pads = typeof navigator !== 'undefined' && navigator.getGamepads ? navigator.getGamepads() : [];
    for (const pad of pads || []) {
      if (pad && pad.connected) {
        // left stick: axis 0 right-positive, axis 1 down-positive (flip)
        const z = [pad.axes[0] ?? 0];
        if (this.latentDim > 1) z.push(-(pad.axes[1] ?? 0));
        return z.slice(0, this.latentDim);
      }
    }
    return null;
  }

  current(): number[] {
    if (!this.enabled) return new Array(this.latentDim).fill(0);
    const raw = this.gamepadAxes() ?? this.keyboardAxes();
    return raw.map((v) => {
      const clamped = Math.max(-1, Math.min(1, v));
      return Math.abs(clamped) < this.deadzone ? 0 : clamped;
    });
  }
}

export function startSendLoop(
  source: InputSource,
  send: (msg: string) => void,
  hz = 50,
  now: () => number = () => Date.now(),
): () => void {
  const period = 1000 / hz;
  const timer = setInterval(() => {
    if (!source.enabled) return;
    send(inputMessage(source.current(), now()));
  }, period);
  return () => clearInterval(timer);
}
