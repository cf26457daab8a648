/**
 * Editor state machine.
 *
 * All displayed positions originate from server responses: the model never
 * blends weights locally. Drag gestures accumulate per-handle translations
 * and trigger deformation queries that are throttled (default ~30/s),
 * capped at one in flight with coalescing, and applied latest-wins (a
 * response older than one already applied is discarded).
 */
import { ApiClient, SessionInfo, Transform, WeightStats } from "./api.js";
import { OrbitCamera, Vec3, add } from "./camera.js";

export interface HandleMarker {
  vertex: number;
  translation: Vec3;
  /** optional linear part, entered numerically (drags stay pure translations) */
  linear?: number[][];
}

export function rotationMatrix(axis: "x" | "y" | "z", degrees: number): number[][] {
  const t = (degrees * Math.PI) / 180;
  const c = Math.cos(t);
  const s = Math.sin(t);
  if (axis === "x") return [[1, 0, 0], [0, c, -s], [0, s, c]];
  if (axis === "y") return [[c, 0, s], [0, 1, 0], [-s, 0, c]];
  return [[c, -s, 0], [s, c, 0], [0, 0, 1]];
}

export interface ModelEvents {
  onPositions?: (positions: number[][]) => void;
  onHandles?: (handles: HandleMarker[], stats: WeightStats | null) => void;
  onBusy?: (busy: boolean) => void;
  onError?: (message: string) => void;
}

type Scheduler = (fn: () => void, ms: number) => unknown;

export class EditorModel {
  sessionId: string | null = null;
  info: SessionInfo | null = null;
  /** source positions, straight from the server session summary */
  basePositions: number[][] = [];
  /** latest rendered positions; always a server response */
  positions: number[][] = [];
  surface: number[][] = [];
  handles: HandleMarker[] = [];
  revision = 0;
  weightStats: WeightStats | null = null;
  /** true while a weight solve (handle PUT) is running */
  weightsBusy = false;

  requestsSent = 0;
  private inFlight = false;
  private dirty = false;
  private timerArmed = false;
  private lastSendAt = -Infinity;
  private seq = 0;
  private appliedSeq = -1;

  constructor(
    private api: ApiClient,
    private events: ModelEvents = {},
    private throttleMs = 33,
    private schedule: Scheduler = (fn, ms) => setTimeout(fn, ms),
    private now: () => number = () => Date.now(),
  ) {}

  async load(shape: { inline_xyz?: string; path?: string }, energy: Parameters<ApiClient["createSession"]>[1]) {
    this.info = await this.api.createSession(shape, energy);
    this.sessionId = this.info.session_id;
    const summary = await this.api.getSummary(this.sessionId);
    this.basePositions = summary.positions;
    this.positions = summary.positions;
    this.revision = summary.revision;
    this.handles = [];
    this.weightStats = null;
    if (summary.has_surface) {
      this.surface = (await this.api.getSurface(this.sessionId)).triangles;
    } else {
      this.surface = [];
    }
    this.events.onPositions?.(this.positions);
    return this.info;
  }

  /** Nearest projected vertex within radiusPx of the click, or null. */
  pick(screenX: number, screenY: number, camera: OrbitCamera, radiusPx = 12): number | null {
    let best: number | null = null;
    let bestD2 = radiusPx * radiusPx;
    for (let i = 0; i < this.positions.length; i++) {
      const p = this.positions[i] as unknown as Vec3;
      const proj = camera.project(p);
      if (proj.depth <= 0) continue;
      const d2 = (proj.x - screenX) ** 2 + (proj.y - screenY) ** 2;
      if (d2 < bestD2) {
        bestD2 = d2;
        best = i;
      }
    }
    return best;
  }

  hasHandle(vertex: number): boolean {
    return this.handles.some((h) => h.vertex === vertex);
  }

  /** Add or remove a handle at the vertex and commit the set to the server. */
  async toggleHandle(vertex: number): Promise<void> {
    const next = this.hasHandle(vertex)
      ? this.handles.filter((h) => h.vertex !== vertex)
      : [...this.handles, { vertex, translation: [0, 0, 0] as Vec3 }];
    await this.commitHandles(next);
  }

  private async commitHandles(next: HandleMarker[]): Promise<void> {
    if (!this.sessionId) return;
    if (next.length === 0) {
      // no handles: drag mode is disabled and the shape returns to rest
      this.handles = [];
      this.weightStats = null;
      this.positions = this.basePositions;
      this.events.onHandles?.(this.handles, null);
      this.events.onPositions?.(this.positions);
      return;
    }
    this.weightsBusy = true;
    this.events.onBusy?.(true);
    try {
      const resp = await this.api.putHandles(
        this.sessionId,
        next.map((h) => [h.vertex]),
      );
      this.handles = next.map((h) => ({ ...h, translation: [0, 0, 0] as Vec3 }));
      this.revision = resp.revision;
      this.weightStats = resp.weight_stats;
      // a new handle set invalidates older deform responses
      this.appliedSeq = this.seq;
      this.positions = this.basePositions;
      this.events.onHandles?.(this.handles, this.weightStats);
      this.events.onPositions?.(this.positions);
    } catch (err) {
      this.events.onError?.(err instanceof Error ? err.message : String(err));
    } finally {
      this.weightsBusy = false;
      this.events.onBusy?.(false);
    }
  }

  get dragEnabled(): boolean {
    return this.handles.length > 0 && !this.weightsBusy;
  }

  /** Accumulate a world-space drag on one handle and schedule a deform. */
  dragBy(handleIndex: number, delta: Vec3): void {
    if (!this.dragEnabled || handleIndex < 0 || handleIndex >= this.handles.length) return;
    const h = this.handles[handleIndex];
    h.translation = add(h.translation, delta);
    this.dirty = true;
    this.pump();
  }

  transforms(): Transform[] {
    return this.handles.map((h) => ({
      translation: h.translation as [number, number, number],
      ...(h.linear ? { linear: h.linear } : {}),
    }));
  }

  /** Numeric rotation entry; drags themselves stay pure translations. */
  setHandleRotation(handleIndex: number, axis: "x" | "y" | "z", degrees: number): void {
    if (!this.dragEnabled || handleIndex < 0 || handleIndex >= this.handles.length) return;
    this.handles[handleIndex].linear = rotationMatrix(axis, degrees);
    this.dirty = true;
    this.pump();
  }

  reset(): void {
    for (const h of this.handles) {
      h.translation = [0, 0, 0];
      delete h.linear;
    }
    if (this.handles.length > 0) {
      this.dirty = true;
      this.pump();
    }
  }

  exportXyz(): string {
    return this.positions.map((p) => `${p[0]} ${p[1]} ${p[2]}`).join("\n") + "\n";
  }

  /** Resolves once no deform request is in flight or pending. */
  async drain(maxWaitMs = 10_000): Promise<void> {
    const t0 = this.now();
    while (this.inFlight || this.dirty || this.timerArmed) {
      if (this.now() - t0 > maxWaitMs) throw new Error("drain timed out");
      await new Promise((resolve) => this.schedule(resolve as () => void, 5));
    }
  }

  private pump(): void {
    if (!this.dirty || this.inFlight || this.timerArmed) return;
    const wait = this.throttleMs - (this.now() - this.lastSendAt);
    if (wait > 0) {
      this.timerArmed = true;
      this.schedule(() => {
        this.timerArmed = false;
        this.pump();
      }, wait);
      return;
    }
    void this.send();
  }

  private async send(): Promise<void> {
    if (!this.sessionId || this.handles.length === 0) {
      this.dirty = false;
      return;
    }
    this.dirty = false;
    this.inFlight = true;
    this.lastSendAt = this.now();
    const mySeq = ++this.seq;
    this.requestsSent++;
    try {
      const resp = await this.api.deform(this.sessionId, this.transforms());
      // latest-wins: ignore anything older than what is already applied
      if (mySeq > this.appliedSeq) {
        this.appliedSeq = mySeq;
        this.positions = resp.positions;
        this.events.onPositions?.(this.positions);
      }
    } catch (err) {
      this.events.onError?.(err instanceof Error ? err.message : String(err));
    } finally {
      this.inFlight = false;
      this.pump(); // coalesced follow-up if drags arrived meanwhile
    }
  }
}
