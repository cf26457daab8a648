/** DOM wiring: pointer gestures, toolbar, status line. */
import { ApiClient, EnergySpec } from "./api.js";
import { OrbitCamera, Vec3 } from "./camera.js";
import { EditorModel } from "./model.js";
import { CanvasView } from "./view.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("viewport");
const status = el<HTMLDivElement>("status");
const camera = new OrbitCamera(canvas.clientWidth || 900, canvas.clientHeight || 600);
const view = new CanvasView(canvas, camera);
const api = new ApiClient("");

let rendered = false;
const model = new EditorModel(api, {
  onPositions: () => requestRender(),
  onHandles: (_handles, stats) => {
    status.textContent = stats
      ? `weights: ${stats.iterations} iters, kkt ${stats.kkt_residual.toExponential(1)}, ` +
        `min row sum ${stats.min_row_sum_pre_norm.toFixed(3)}`
      : "no handles: shift-click a vertex to add one";
    requestRender();
  },
  onBusy: () => requestRender(),
  onError: (message) => {
    status.textContent = `error: ${message}`;
  },
});

function requestRender(): void {
  if (rendered) return;
  rendered = true;
  requestAnimationFrame(() => {
    rendered = false;
    view.render(model.positions, model.surface, model.handles, model.weightsBusy);
  });
}

function fitCanvas(): void {
  const rect = canvas.parentElement!.getBoundingClientRect();
  view.resize(rect.width, rect.height - 4);
  requestRender();
}
window.addEventListener("resize", fitCanvas);

// pointer state: orbit on drag, move handle on drag-from-handle, shift-click picks
let pointerMode: "idle" | "orbit" | "drag" = "idle";
let lastX = 0;
let lastY = 0;
let dragHandleIndex = -1;
let dragDepth = 1;

canvas.addEventListener("pointerdown", (ev) => {
  canvas.setPointerCapture(ev.pointerId);
  lastX = ev.offsetX;
  lastY = ev.offsetY;
  if (ev.shiftKey) {
    const vertex = model.pick(ev.offsetX, ev.offsetY, camera);
    if (vertex !== null) void model.toggleHandle(vertex);
    return;
  }
  const picked = model.pick(ev.offsetX, ev.offsetY, camera);
  const handleIdx = picked === null ? -1 : model.handles.findIndex((h) => h.vertex === picked);
  if (handleIdx >= 0 && model.dragEnabled) {
    pointerMode = "drag";
    dragHandleIndex = handleIdx;
    const p = model.positions[model.handles[handleIdx].vertex] as unknown as Vec3;
    dragDepth = camera.project(p).depth;
  } else {
    pointerMode = "orbit";
  }
});

canvas.addEventListener("pointermove", (ev) => {
  if (pointerMode === "idle") return;
  const dx = ev.offsetX - lastX;
  const dy = ev.offsetY - lastY;
  lastX = ev.offsetX;
  lastY = ev.offsetY;
  if (pointerMode === "orbit") {
    camera.orbit(-dx * 0.008, dy * 0.008);
    requestRender();
  } else if (pointerMode === "drag") {
    model.dragBy(dragHandleIndex, camera.worldDelta(dx, dy, dragDepth));
  }
});

canvas.addEventListener("pointerup", () => {
  pointerMode = "idle";
  dragHandleIndex = -1;
});

canvas.addEventListener("wheel", (ev) => {
  ev.preventDefault();
  camera.zoom(Math.exp(ev.deltaY * 0.001));
  requestRender();
});

el<HTMLButtonElement>("rot-apply").addEventListener("click", () => {
  const idx = parseInt(el<HTMLInputElement>("rot-handle").value, 10);
  const axis = el<HTMLSelectElement>("rot-axis").value as "x" | "y" | "z";
  const deg = parseFloat(el<HTMLInputElement>("rot-deg").value);
  if (Number.isFinite(idx) && Number.isFinite(deg)) model.setHandleRotation(idx, axis, deg);
});

el<HTMLButtonElement>("reset").addEventListener("click", () => model.reset());

el<HTMLButtonElement>("export").addEventListener("click", () => {
  const blob = new Blob([model.exportXyz()], { type: "text/plain" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "deformed.xyz";
  a.click();
  URL.revokeObjectURL(a.href);
});

el<HTMLButtonElement>("load").addEventListener("click", () => {
  void (async () => {
    status.textContent = "loading...";
    const shapeText = el<HTMLTextAreaElement>("shape-input").value.trim();
    const energyKind = el<HTMLSelectElement>("energy-kind").value;
    const energyArg = el<HTMLInputElement>("energy-arg").value.trim();
    let energy: EnergySpec;
    if (energyKind === "fem") {
      const [node, ele] = energyArg.split(",");
      energy = { type: "fem", node: node?.trim() ?? "", ele: ele?.trim() ?? "" };
    } else if (energyKind === "learned") {
      energy = { type: "learned", model: energyArg };
    } else {
      energy = { type: "baseline", k: parseInt(energyArg || "12", 10) };
    }
    const shape = shapeText.startsWith("/") && !shapeText.includes("\n")
      ? { path: shapeText }
      : { inline_xyz: shapeText };
    try {
      const info = await model.load(shape, energy);
      camera.frame(info.bbox.min as Vec3, info.bbox.max as Vec3);
      status.textContent =
        `loaded ${info.n} points (${info.energy} energy): shift-click vertices to place handles, ` +
        `drag a handle to deform`;
      requestRender();
    } catch (err) {
      status.textContent = `error: ${err instanceof Error ? err.message : err}`;
    }
  })();
});

fitCanvas();
status.textContent = "paste xyz (or a server path) and press Load";
