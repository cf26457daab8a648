/** Orbit camera with perspective projection onto a pixel viewport. */

export type Vec3 = [number, number, number];

export function add(a: Vec3, b: Vec3): Vec3 {
  return [a[0] + b[0], a[1] + b[1], a[2] + b[2]];
}

export function sub(a: Vec3, b: Vec3): Vec3 {
  return [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
}

export function scale(a: Vec3, s: number): Vec3 {
  return [a[0] * s, a[1] * s, a[2] * s];
}

export function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

export function norm(a: Vec3): number {
  return Math.sqrt(dot(a, a));
}

export function normalize(a: Vec3): Vec3 {
  const n = norm(a);
  return n > 0 ? scale(a, 1 / n) : [0, 0, 0];
}

export interface Projected {
  x: number;
  y: number;
  /** distance along the view direction; <= 0 means behind the camera */
  depth: number;
}

export class OrbitCamera {
  yaw = 0.6;
  pitch = 0.35;
  distance = 2.2;
  target: Vec3 = [0, 0, 0];
  fovY = Math.PI / 4;

  constructor(public width: number, public height: number) {}

  get position(): Vec3 {
    const cp = Math.cos(this.pitch);
    const offset: Vec3 = [
      this.distance * cp * Math.sin(this.yaw),
      this.distance * Math.sin(this.pitch),
      this.distance * cp * Math.cos(this.yaw),
    ];
    return add(this.target, offset);
  }

  /** Right-handed view basis: forward toward the target. */
  basis(): { forward: Vec3; right: Vec3; up: Vec3 } {
    const forward = normalize(sub(this.target, this.position));
    const worldUp: Vec3 = Math.abs(forward[1]) > 0.999 ? [1, 0, 0] : [0, 1, 0];
    const right = normalize(cross(forward, worldUp));
    const up = cross(right, forward);
    return { forward, right, up };
  }

  focalLength(): number {
    return this.height / (2 * Math.tan(this.fovY / 2));
  }

  project(p: Vec3): Projected {
    const { forward, right, up } = this.basis();
    const d = sub(p, this.position);
    const depth = dot(d, forward);
    const fl = this.focalLength();
    return {
      x: this.width / 2 + (fl * dot(d, right)) / depth,
      y: this.height / 2 - (fl * dot(d, up)) / depth,
      depth,
    };
  }

  /**
   * World-space translation that moves a point at the given view depth by
   * (dx, dy) pixels on screen: the drag plane is the view plane.
   */
  worldDelta(dxPx: number, dyPx: number, depth: number): Vec3 {
    const { right, up } = this.basis();
    const fl = this.focalLength();
    return add(scale(right, (dxPx * depth) / fl), scale(up, (-dyPx * depth) / fl));
  }

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    const cap = Math.PI / 2 - 0.05;
    this.pitch = Math.min(cap, Math.max(-cap, this.pitch + dPitch));
  }

  zoom(factor: number): void {
    this.distance = Math.min(50, Math.max(0.05, this.distance * factor));
  }

  /** Frame a bounding box: center the target and back off far enough. */
  frame(min: Vec3, max: Vec3): void {
    this.target = scale(add(min, max), 0.5);
    const radius = norm(sub(max, min)) / 2 || 1;
    this.distance = (radius / Math.tan(this.fovY / 2)) * 1.4;
  }
}
