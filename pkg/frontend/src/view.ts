/** Canvas2D renderer: depth-sorted points, wireframe surface, handle markers. */
import { OrbitCamera, Vec3 } from "./camera.js";
import { HandleMarker } from "./model.js";

export class CanvasView {
  private ctx: CanvasRenderingContext2D;

  constructor(private canvas: HTMLCanvasElement, public camera: OrbitCamera) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("no 2d context");
    this.ctx = ctx;
  }

  resize(width: number, height: number): void {
    this.canvas.width = width;
    this.canvas.height = height;
    this.camera.width = width;
    this.camera.height = height;
  }

  render(positions: number[][], surface: number[][], handles: HandleMarker[], busy: boolean): void {
    const { ctx } = this;
    ctx.fillStyle = "#10131a";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    const projected = positions.map((p) => this.camera.project(p as unknown as Vec3));

    // wireframe first, faint
    ctx.strokeStyle = "rgba(110,150,210,0.25)";
    ctx.lineWidth = 1;
    ctx.beginPath();
    for (const tri of surface) {
      const [a, b, c] = tri;
      const pa = projected[a];
      const pb = projected[b];
      const pc = projected[c];
      if (pa.depth <= 0 || pb.depth <= 0 || pc.depth <= 0) continue;
      ctx.moveTo(pa.x, pa.y);
      ctx.lineTo(pb.x, pb.y);
      ctx.lineTo(pc.x, pc.y);
      ctx.closePath();
    }
    ctx.stroke();

    // points, far to near
    const order = projected
      .map((p, i) => [p.depth, i] as [number, number])
      .filter(([d]) => d > 0)
      .sort((x, y) => y[0] - x[0]);
    for (const [depth, i] of order) {
      const p = projected[i];
      const r = Math.max(1.2, 5 / depth);
      ctx.fillStyle = "#9fc2e8";
      ctx.beginPath();
      ctx.arc(p.x, p.y, r, 0, Math.PI * 2);
      ctx.fill();
    }

    // handle markers on top, visually distinct
    handles.forEach((h, idx) => {
      const p = projected[h.vertex];
      if (!p || p.depth <= 0) return;
      ctx.fillStyle = "#ff9d2e";
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(p.x, p.y, 8, 0, Math.PI * 2);
      ctx.fill();
      ctx.stroke();
      ctx.fillStyle = "#10131a";
      ctx.font = "bold 10px sans-serif";
      ctx.textAlign = "center";
      ctx.textBaseline = "middle";
      ctx.fillText(String(idx), p.x, p.y);
    });

    if (busy) {
      ctx.fillStyle = "#ffd166";
      ctx.font = "14px sans-serif";
      ctx.textAlign = "left";
      ctx.fillText("solving weights...", 12, 22);
    }
  }
}
