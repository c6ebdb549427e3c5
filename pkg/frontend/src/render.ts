/** SVG renderer: draws the projected scene into a container element. */

import { Projected, ViewerScene, project, projectNodes, visibleEdges, visibleNodes } from "./scene.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderOptions {
  width: number;
  height: number;
  nodeRadius: number;
  showSurface: boolean;
}

export const DEFAULT_RENDER: RenderOptions = {
  width: 900,
  height: 620,
  nodeRadius: 7,
  showSurface: true,
};

interface FitTransform {
  scale: number;
  ox: number;
  oy: number;
}

/** Map scene units into pixels, padded and centered on the full node cloud.

    The fit is computed from the unfiltered node set so toggling filters never
    re-scales the view. */
function fitTransform(scene: ViewerScene, opts: RenderOptions): FitTransform {
  const pts = scene.full.nodes.map((n) => project(scene.camera, n.x, n.y, n.z));
  if (pts.length === 0) {
    return { scale: 1, ox: opts.width / 2, oy: opts.height / 2 };
  }
  const xs = pts.map((p) => p.sx);
  const ys = pts.map((p) => p.sy);
  const spanX = Math.max(...xs) - Math.min(...xs) || 1;
  const spanY = Math.max(...ys) - Math.min(...ys) || 1;
  const pad = 0.12;
  const scale = Math.min(
    (opts.width * (1 - 2 * pad)) / spanX,
    (opts.height * (1 - 2 * pad)) / spanY,
  );
  const cx = (Math.max(...xs) + Math.min(...xs)) / 2;
  const cy = (Math.max(...ys) + Math.min(...ys)) / 2;
  return { scale, ox: opts.width / 2 - cx * scale, oy: opts.height / 2 - cy * scale };
}

function el(name: string, attrs: Record<string, string | number>): Element {
  const node = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) {
    node.setAttribute(k, String(v));
  }
  return node;
}

/** Decorative wireframe shell hinting at a cortical surface; not anatomical. */
function surfaceGroup(scene: ViewerScene, t: FitTransform, opts: RenderOptions): Element {
  const g = el("g", { class: "surface" });
  const rings = 7;
  const radius = 85; // generous shell around MNI-ish coordinates
  for (let i = 0; i < rings; i++) {
    const phi = (Math.PI * (i + 0.5)) / rings - Math.PI / 2;
    const pts: string[] = [];
    for (let s = 0; s <= 40; s++) {
      const theta = (2 * Math.PI * s) / 40;
      const x = radius * Math.cos(phi) * Math.cos(theta);
      const y = radius * 1.25 * Math.cos(phi) * Math.sin(theta);
      const z = radius * 0.9 * Math.sin(phi);
      const p = project(scene.camera, x, y, z);
      pts.push(`${(p.sx * t.scale + t.ox).toFixed(1)},${(p.sy * t.scale + t.oy).toFixed(1)}`);
    }
    g.appendChild(el("polyline", {
      points: pts.join(" "),
      fill: "none",
      stroke: "#c8cfd8",
      "stroke-width": 0.6,
      opacity: 0.55,
    }));
  }
  return g;
}

export interface RenderCounts {
  nodes: number;
  edges: number;
}

/** Clear the container and draw the scene; returns what was drawn. */
export function renderScene(
  scene: ViewerScene,
  container: Element,
  opts: RenderOptions = DEFAULT_RENDER,
): RenderCounts {
  container.innerHTML = "";
  const svg = el("svg", {
    width: opts.width,
    height: opts.height,
    viewBox: `0 0 ${opts.width} ${opts.height}`,
    class: "network-svg",
  });

  const t = fitTransform(scene, opts);
  if (opts.showSurface) {
    svg.appendChild(surfaceGroup(scene, t, opts));
  }

  const nodes = visibleNodes(scene);
  const projected = projectNodes(scene);
  const byId = new Map<number, Projected>(projected.map((p) => [p.id, p]));

  const edgeGroup = el("g", { class: "edges" });
  for (const [i, j] of visibleEdges(scene)) {
    const a = byId.get(i)!;
    const b = byId.get(j)!;
    edgeGroup.appendChild(el("line", {
      class: "edge",
      x1: a.sx * t.scale + t.ox,
      y1: a.sy * t.scale + t.oy,
      x2: b.sx * t.scale + t.ox,
      y2: b.sy * t.scale + t.oy,
      stroke: "#7a8699",
      "stroke-width": 1.1,
      opacity: 0.6,
    }));
  }
  svg.appendChild(edgeGroup);

  const nodeGroup = el("g", { class: "nodes" });
  const depthOrder = [...nodes].sort(
    (a, b) => byId.get(a.id)!.depth - byId.get(b.id)!.depth,
  );
  const depths = projected.map((p) => p.depth);
  const minD = Math.min(...depths);
  const maxD = Math.max(...depths);
  for (const n of depthOrder) {
    const p = byId.get(n.id)!;
    const rel = maxD > minD ? (p.depth - minD) / (maxD - minD) : 0.5;
    const r = opts.nodeRadius * (0.7 + 0.5 * rel);
    const circle = el("circle", {
      class: "node",
      cx: p.sx * t.scale + t.ox,
      cy: p.sy * t.scale + t.oy,
      r: r.toFixed(2),
      fill: n.color,
      stroke: "#2b2b2b",
      "stroke-width": 0.8,
      "data-id": n.id,
      "data-community": n.community ?? "",
    });
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `node ${n.id}${n.community ? ` (${n.community})` : ""}`;
    circle.appendChild(title);
    nodeGroup.appendChild(circle);
  }
  svg.appendChild(nodeGroup);
  container.appendChild(svg);
  return { nodes: nodes.length, edges: edgeGroup.childElementCount };
}
