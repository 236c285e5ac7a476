// Wire types for the teleoperation service. Client messages are the only
// way the UI may affect simulation state.

export type ClientMessage =
  | { type: 'input'; z: number[]; t: number }
  | { type: 'pause' }
  | { type: 'resume' }
  | { type: 'reset' };

export type StateEvent = {
  type: 'state';
  t: number;
  q: number[];
  ee: [number, number, number][];
  z: number[];
  a: number[];
};

export type ServerMessage =
  | StateEvent
  | { type: 'fault'; reason: string; t?: number }
  | { type: 'warn_ood'; distance: number; t?: number }
  | { type: 'ack'; z: number[]; clamped: boolean; t: number | null }
  | { type: 'lifecycle'; event: string; t: number }
  | { type: 'overflow'; reason: string }
  | { type: 'error'; reason: string };

export function inputMessage(z: number[], t: number): string {
  const msg: ClientMessage = { type: 'input', z, t };
  return JSON.stringify(msg);
}

export function controlMessage(kind: 'pause' | 'resume' | 'reset'): string {
  return JSON.stringify({ type: kind });
}

export function parseServerMessage(raw: string): ServerMessage | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== 'object' || data === null || !('type' in data)) return null;
  return data as ServerMessage;
}

export function isStateEvent(msg: ServerMessage): msg is StateEvent {
  return msg.type === 'state';
}
