// Planar forward kinematics, duplicated client-side FOR DRAWING ONLY.
// The server remains authoritative for all simulation state; this exists so
// the client can draw every link from the joint angles it receives, and the
// duplication is pinned by a conformance test against recorded server poses.

export interface ArmLayout {
  armCount: number;
  jointsPerArm: number;
  linkLength: number;
  basePositions: [number, number][];
}

export interface JointChain {
  points: [number, number][]; // base + one point per link end
  orientation: number; // summed joint angles, wrapped to (-pi, pi]
}

export function wrapAngle(theta: number): number {
  let w = theta % (2 * Math.PI);
  if (w <= -Math.PI) w += 2 * Math.PI;
  if (w > Math.PI) w -= 2 * Math.PI;
  return w;
}

export function armChain(layout: ArmLayout, q: number[], armIndex: number): JointChain {
  const lo = armIndex * layout.jointsPerArm;
  const angles = q.slice(lo, lo + layout.jointsPerArm);
  const base = layout.basePositions[armIndex];
  const points: [number, number][] = [[base[0], base[1]]];
  let cum = 0;
  let [x, y] = base;
  for (const theta of angles) {
    cum += theta;
    x += layout.linkLength * Math.cos(cum);
    y += layout.linkLength * Math.sin(cum);
    points.push([x, y]);
  }
  return { points, orientation: wrapAngle(cum) };
}

export function endEffector(layout: ArmLayout, q: number[], armIndex: number): [number, number, number] {
  const chain = armChain(layout, q, armIndex);
  const tip = chain.points[chain.points.length - 1];
  return [tip[0], tip[1], chain.orientation];
}
