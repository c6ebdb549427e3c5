/** Browser wiring: file loading, filter controls, drag-to-orbit, wheel zoom. */

import { renderScene } from "./render.js";
import {
  ViewerScene,
  applyCommunityFilter,
  applyNodeFilter,
  clearFilter,
  loadExport,
  orbitCamera,
  zoomCamera,
} from "./scene.js";
import { SchemaError } from "./types.js";

let scene: ViewerScene | null = null;

const $ = (id: string) => document.getElementById(id)!;

function status(msg: string, isError = false): void {
  const banner = $("status");
  banner.textContent = msg;
  banner.className = isError ? "status error" : "status";
}

function redraw(): void {
  if (!scene) return;
  const counts = renderScene(scene, $("viewport"));
  const total = { nodes: scene.full.nodes.length, edges: scene.full.edges.length };
  $("counts").textContent =
    `${counts.nodes}/${total.nodes} nodes, ${counts.edges}/${total.edges} edges`;
}

function rebuildCommunityBoxes(): void {
  const host = $("communities");
  host.innerHTML = "";
  if (!scene) return;
  const names = new Map<string, string>();
  for (const n of scene.full.nodes) {
    const key = n.community ?? "(none)";
    if (!names.has(key)) names.set(key, n.color);
  }
  for (const [name, color] of names) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = name;
    box.addEventListener("change", onFilterChange);
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    swatch.style.background = color;
    label.append(box, swatch, ` ${name}`);
    host.appendChild(label);
  }
}

function onFilterChange(): void {
  if (!scene) return;
  const checked = Array.from(
    document.querySelectorAll<HTMLInputElement>("#communities input:checked"),
  ).map((b) => (b.value === "(none)" ? "null" : b.value));
  scene = checked.length > 0 ? applyCommunityFilter(scene, checked) : clearFilter(scene);
  const idText = ($("node-ids") as HTMLInputElement).value.trim();
  if (idText) {
    const ids = idText
      .split(",")
      .flatMap((tok) => {
        const m = tok.trim().match(/^(\d+)-(\d+)$/);
        if (m) {
          const lo = parseInt(m[1], 10);
          const hi = parseInt(m[2], 10);
          return Array.from({ length: hi - lo + 1 }, (_, k) => lo + k);
        }
        return tok.trim() ? [parseInt(tok, 10)] : [];
      })
      .filter((v) => Number.isFinite(v));
    scene = applyNodeFilter(scene, ids);
  }
  redraw();
}

function loadDocument(doc: unknown, sourceName: string): void {
  try {
    scene = loadExport(doc);
  } catch (err) {
    if (err instanceof SchemaError) {
      status(`cannot load ${sourceName}: ${err.message}`, true);
      return;
    }
    throw err;
  }
  const meta = scene.full.metadata;
  const extra = meta && meta.source ? ` (source: ${meta.source})` : "";
  status(`loaded ${sourceName}${extra}`);
  rebuildCommunityBoxes();
  ($("node-ids") as HTMLInputElement).value = "";
  redraw();
}

async function loadFromUrl(url: string): Promise<void> {
  try {
    const resp = await fetch(url);
    if (!resp.ok) {
      status(`fetch ${url}: HTTP ${resp.status}`, true);
      return;
    }
    loadDocument(await resp.json(), url);
  } catch (err) {
    status(`fetch ${url} failed: ${err}`, true);
  }
}

function wireControls(): void {
  const fileInput = $("file-input") as HTMLInputElement;
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      loadDocument(JSON.parse(await file.text()), file.name);
    } catch (err) {
      status(`not valid JSON: ${err}`, true);
    }
  });

  $("clear-filter").addEventListener("click", () => {
    if (!scene) return;
    scene = clearFilter(scene);
    document
      .querySelectorAll<HTMLInputElement>("#communities input")
      .forEach((b) => (b.checked = false));
    ($("node-ids") as HTMLInputElement).value = "";
    redraw();
  });

  $("node-ids").addEventListener("change", onFilterChange);

  const viewport = $("viewport");
  let dragging = false;
  let last = { x: 0, y: 0 };
  viewport.addEventListener("mousedown", (ev) => {
    dragging = true;
    last = { x: (ev as MouseEvent).clientX, y: (ev as MouseEvent).clientY };
  });
  window.addEventListener("mouseup", () => (dragging = false));
  window.addEventListener("mousemove", (ev) => {
    if (!dragging || !scene) return;
    const me = ev as MouseEvent;
    const dx = me.clientX - last.x;
    const dy = me.clientY - last.y;
    last = { x: me.clientX, y: me.clientY };
    scene = orbitCamera(scene, dx * 0.008, dy * 0.006);
    redraw();
  });
  viewport.addEventListener(
    "wheel",
    (ev) => {
      if (!scene) return;
      ev.preventDefault();
      scene = zoomCamera(scene, (ev as WheelEvent).deltaY < 0 ? 1.1 : 1 / 1.1);
      redraw();
    },
    { passive: false },
  );
}

export function start(): void {
  wireControls();
  const src = new URLSearchParams(window.location.search).get("src");
  void loadFromUrl(src ?? "public/sample-export.json");
}

start();
