/** Typed client for the deformation service endpoints. */

export interface BBox {
  min: [number, number, number];
  max: [number, number, number];
}

export interface SessionInfo {
  session_id: string;
  n: number;
  bbox: BBox;
  energy: string;
  revision: number;
}

export interface SessionSummary {
  n: number;
  energy: string;
  handles: number[][];
  revision: number;
  bbox: BBox;
  has_surface: boolean;
  positions: number[][];
}

export interface WeightStats {
  min_row_sum_pre_norm: number;
  iterations: number;
  kkt_residual: number;
}

export interface HandlesResponse {
  m: number;
  weight_stats: WeightStats;
  revision: number;
  cached: boolean;
}

export interface DeformResponse {
  positions: number[][];
  revision: number;
}

export interface Transform {
  linear?: number[][];
  translation: [number, number, number];
}

export type EnergySpec =
  | { type: "fem"; node: string; ele: string }
  | { type: "learned"; model: string }
  | { type: "baseline"; k: number };

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await resp.text();
    if (!resp.ok) {
      let detail = text;
      try {
        const doc = JSON.parse(text);
        detail = doc.detail ?? doc.error ?? text;
      } catch {
        /* keep raw text */
      }
      throw new ApiError(resp.status, String(detail));
    }
    return JSON.parse(text) as T;
  }

  createSession(shape: { inline_xyz?: string; path?: string }, energy: EnergySpec) {
    return this.request<SessionInfo>("POST", "/sessions", { shape, energy });
  }

  getSummary(sessionId: string) {
    return this.request<SessionSummary>("GET", `/sessions/${sessionId}`);
  }

  getSurface(sessionId: string) {
    return this.request<{ triangles: number[][]; revision: number }>(
      "GET",
      `/sessions/${sessionId}/surface`,
    );
  }

  putHandles(sessionId: string, handles: number[][]) {
    return this.request<HandlesResponse>("PUT", `/sessions/${sessionId}/handles`, {
      handles: handles.map((vertices) => ({ vertices })),
    });
  }

  deform(sessionId: string, transforms: Transform[]) {
    return this.request<DeformResponse>("POST", `/sessions/${sessionId}/deform`, {
      transforms,
    });
  }
}
