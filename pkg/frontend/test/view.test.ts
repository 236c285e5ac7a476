// State handling in the view: latest-state coalescing, bounded trail, and
// fault events disabling input.

import { describe, expect, it } from 'vitest';
import { readFileSync } from 'node:fs';
import { InputSource } from '../src/input.js';
import { parseServerMessage, StateEvent, isStateEvent } from '../src/protocol.js';
import { SessionView, cameraForBounds, worldToCanvas } from '../src/view.js';

const fixture = JSON.parse(readFileSync('fixtures/session_events.json', 'utf-8'));

const layout = {
  armCount: fixture.task.geometry.arm_count,
  jointsPerArm: fixture.task.geometry.joints_per_arm,
  linkLength: fixture.task.geometry.link_length,
  basePositions: fixture.task.geometry.base_positions,
};

const states: StateEvent[] = fixture.events.filter(isStateEvent);

describe('session view', () => {
  it('coalesces to the latest state', () => {
    const view = new SessionView(layout);
    for (const ev of states) view.onState(ev);
    expect(view.latest).toBe(states[states.length - 1]);
  });

  it('bounds the ee trail at 500 points', () => {
    const view = new SessionView(layout);
    for (let i = 0; i < 700; i++) view.onState(states[i % states.length]);
    expect(view.trail.length).toBeLessThanOrEqual(500);
  });

  it('pixel chains land inside the canvas for workspace bounds', () => {
    const view = new SessionView(layout);
    view.onState(states[0]);
    const camera = cameraForBounds(900, 700, { xMin: -5, xMax: 5, yMin: -5, yMax: 5 });
    for (const chain of view.armPixelChains(camera)) {
      for (const [x, y] of chain) {
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThanOrEqual(900);
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(700);
      }
    }
  });

  it('world-to-canvas is affine and y-flipping', () => {
    const camera = cameraForBounds(800, 600, { xMin: 0, xMax: 10, yMin: 0, yMax: 10 });
    const [x0, y0] = worldToCanvas(camera, [0, 0]);
    const [x1, y1] = worldToCanvas(camera, [1, 1]);
    expect(x1).toBeGreaterThan(x0);
    expect(y1).toBeLessThan(y0); // +y world goes up on screen
  });
});

describe('fault handling', () => {
  it('the recorded session contains a fault event and it disables input', () => {
    const fault = fixture.events.find((e: { type: string }) => e.type === 'fault');
    expect(fault).toBeDefined();
    const input = new InputSource(1);
    // mirror App.onmessage: a fault event turns input off until resume
    const parsed = parseServerMessage(JSON.stringify(fault))!;
    if (parsed.type === 'fault') input.enabled = false;
    expect(input.enabled).toBe(false);
    expect(input.current()).toEqual([0]);
    const resumed = parseServerMessage(JSON.stringify({ type: 'lifecycle', event: 'resumed', t: 1 }))!;
    if (resumed.type === 'lifecycle' && resumed.event === 'resumed') input.enabled = true;
    expect(input.enabled).toBe(true);
  });
});
