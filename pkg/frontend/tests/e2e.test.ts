/**
 * End-to-end: the editor model against the real deformation service.
 *
 * Spawns the Python server, loads a bar with FEM energy, places two end
 * handles, and drags one end: the rendered geometry (always a server
 * response) must bend; a zero-delta drag must change nothing; an
 * instrumented drag burst must be throttled and resolve latest-wins.
 */
import { spawn, execFileSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { ApiClient } from "../src/api.js";
import { EditorModel } from "../src/model.js";

const PORT = 8942;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess | null = null;
let workDir: string;

async function serverReady(timeoutMs = 30_000): Promise<void> {
  const t0 = Date.now();
  while (Date.now() - t0 < timeoutMs) {
    try {
      const resp = await fetch(`${BASE}/sessions/probe`);
      if (resp.status === 404) return;
    } catch {
      /* not up yet */
    }
    await new Promise((r) => setTimeout(r, 150));
  }
  throw new Error("service did not come up");
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "lapdeform-e2e-"));
  // bar fixture: mesh files for the FEM energy + matching xyz cloud
  execFileSync("python3", [
    "-c",
    `
import lapdeform as ld
from lapdeform import io
mesh = ld.synth_shape("bar", 3, 0)
io.save_tet_mesh(mesh, "${workDir}/bar.node", "${workDir}/bar.ele")
io.save_point_cloud(mesh.point_cloud(), "${workDir}/bar.xyz")
`,
  ]);
  server = spawn(
    "python3",
    ["-m", "lapdeform.cli", "serve", "--port", String(PORT), "--host", "127.0.0.1"],
    { stdio: "ignore" },
  );
  await serverReady();
}, 60_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

function endVertices(positions: number[][]): { lo: number; hi: number } {
  let lo = 0;
  let hi = 0;
  positions.forEach((p, i) => {
    if (p[0] < positions[lo][0]) lo = i;
    if (p[0] > positions[hi][0]) hi = i;
  });
  return { lo, hi };
}

describe("editor against the live service", () => {
  it("bends a bar by dragging one end handle", async () => {
    const api = new ApiClient(BASE);
    const model = new EditorModel(api, {}, 20);
    const xyz = readFileSync(join(workDir, "bar.xyz"), "utf-8");
    await model.load(
      { inline_xyz: xyz },
      { type: "fem", node: join(workDir, "bar.node"), ele: join(workDir, "bar.ele") },
    );
    expect(model.surface.length).toBeGreaterThan(0);

    const { lo, hi } = endVertices(model.basePositions);
    await model.toggleHandle(lo);
    await model.toggleHandle(hi);
    expect(model.weightStats).not.toBeNull();
    expect(model.weightStats!.min_row_sum_pre_norm).toBeGreaterThan(0);

    // zero-delta drag: rendered positions unchanged
    const before = JSON.stringify(model.positions);
    model.dragBy(1, [0, 0, 0]);
    await model.drain();
    expect(JSON.stringify(model.positions)).toBe(before);

    // drag the +x end upward: its vertex follows, the anchored end stays
    model.dragBy(1, [0, 0.4, 0]);
    await model.drain();
    const moved = model.positions;
    const base = model.basePositions;
    expect(moved[hi][1] - base[hi][1]).toBeCloseTo(0.4, 6);
    expect(Math.abs(moved[lo][1] - base[lo][1])).toBeLessThan(1e-9);
    // a mid-bar vertex lands strictly between the ends: the bar is bent
    const midIdx = base.findIndex(
      (p) => Math.abs(p[0]) < 0.2 && Math.abs(p[1] - base[lo][1]) < 1e-9,
    );
    const midLift = moved[midIdx][1] - base[midIdx][1];
    expect(midLift).toBeGreaterThan(0.05);
    expect(midLift).toBeLessThan(0.35);
  }, 60_000);

  it("throttles an instrumented drag burst and applies latest-wins", async () => {
    const api = new ApiClient(BASE);
    const model = new EditorModel(api, {}, 25);
    const xyz = readFileSync(join(workDir, "bar.xyz"), "utf-8");
    await model.load(
      { inline_xyz: xyz },
      { type: "fem", node: join(workDir, "bar.node"), ele: join(workDir, "bar.ele") },
    );
    const { lo, hi } = endVertices(model.basePositions);
    await model.toggleHandle(lo);
    await model.toggleHandle(hi);

    const bursts = 40;
    for (let i = 0; i < bursts; i++) {
      model.dragBy(1, [0.002, 0.005, 0]);
      await new Promise((r) => setTimeout(r, 3));
    }
    await model.drain();

    expect(model.requestsSent).toBeLessThan(bursts / 2);
    expect(model.requestsSent).toBeGreaterThan(0);

    // final frame corresponds to the final pointer position: ask the
    // server directly for the same transforms and compare
    const direct = await api.deform(model.sessionId!, model.transforms());
    expect(model.positions).toEqual(direct.positions);
    const t = model.transforms()[1].translation;
    expect(t[0]).toBeCloseTo(0.002 * bursts, 9);
    expect(t[1]).toBeCloseTo(0.005 * bursts, 9);
  }, 60_000);
});
