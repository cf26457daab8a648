import { describe, expect, it } from "vitest";
import { OrbitCamera, Vec3, add, norm, sub } from "../src/camera.js";

describe("OrbitCamera", () => {
  it("projects the target to the viewport center", () => {
    const cam = new OrbitCamera(800, 600);
    cam.target = [0.1, -0.2, 0.3];
    const p = cam.project(cam.target);
    expect(p.x).toBeCloseTo(400, 6);
    expect(p.y).toBeCloseTo(300, 6);
    expect(p.depth).toBeCloseTo(cam.distance, 9);
  });

  it("keeps screen-space ordering consistent with the right axis", () => {
    const cam = new OrbitCamera(800, 600);
    cam.yaw = 0;
    cam.pitch = 0;
    // camera sits on +z looking toward -z: +x in world maps to +x on screen
    const left = cam.project([-0.2, 0, 0]);
    const right = cam.project([0.2, 0, 0]);
    expect(right.x).toBeGreaterThan(left.x);
    const up = cam.project([0, 0.2, 0]);
    const down = cam.project([0, -0.2, 0]);
    expect(up.y).toBeLessThan(down.y); // screen y grows downward
  });

  it("worldDelta inverts projection for in-plane moves", () => {
    const cam = new OrbitCamera(800, 600);
    cam.yaw = 0.7;
    cam.pitch = 0.3;
    const p: Vec3 = [0.05, -0.1, 0.02];
    const before = cam.project(p);
    const delta = cam.worldDelta(24, -13, before.depth);
    const after = cam.project(add(p, delta));
    expect(after.x - before.x).toBeCloseTo(24, 4);
    expect(after.y - before.y).toBeCloseTo(-13, 4);
  });

  it("frame centers the bbox and contains it in view", () => {
    const cam = new OrbitCamera(800, 600);
    cam.frame([-0.5, -0.25, -0.25], [0.5, 0.25, 0.25]);
    expect(cam.target).toEqual([0, 0, 0]);
    const corner = cam.project([0.5, 0.25, 0.25]);
    expect(corner.depth).toBeGreaterThan(0);
    expect(corner.x).toBeGreaterThan(0);
    expect(corner.x).toBeLessThan(800);
    expect(corner.y).toBeGreaterThan(0);
    expect(corner.y).toBeLessThan(600);
  });

  it("clamps pitch and floors zoom distance", () => {
    const cam = new OrbitCamera(100, 100);
    cam.orbit(0, 100);
    expect(cam.pitch).toBeLessThan(Math.PI / 2);
    cam.zoom(1e-9);
    expect(cam.distance).toBeGreaterThan(0);
  });

  it("vector helpers are consistent", () => {
    const a: Vec3 = [1, 2, 3];
    const b: Vec3 = [-2, 0.5, 4];
    expect(norm(sub(add(a, b), b))).toBeCloseTo(norm(a), 12);
  });
});
