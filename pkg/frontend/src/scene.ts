/** Scene state: the loaded export, the active filter, and the orbit camera. */

import { ExportEdge, ExportNode, NetworkExport, parseExport } from "./types.js";

export interface Camera {
  azimuth: number;   // radians, wraps at 2*pi
  elevation: number; // radians, clamped to +/- pi/2
  distance: number;  // zoom factor > 0
}

export interface Filter {
  communities: string[] | null;
  nodeIds: number[] | null;
}

export interface ViewerScene {
  full: NetworkExport;
  filter: Filter;
  camera: Camera;
}

export const DEFAULT_CAMERA: Camera = { azimuth: 0.6, elevation: 0.25, distance: 1.0 };

const TWO_PI = Math.PI * 2;

export function loadExport(doc: unknown): ViewerScene {
  return {
    full: parseExport(doc),
    filter: { communities: null, nodeIds: null },
    camera: { ...DEFAULT_CAMERA },
  };
}

/** Nodes surviving the active filter (no filter: all nodes). */
export function visibleNodes(scene: ViewerScene): ExportNode[] {
  const { communities, nodeIds } = scene.filter;
  let nodes = scene.full.nodes;
  if (communities !== null) {
    const wanted = new Set(communities.map((c) => (c === "null" ? null : c)));
    nodes = nodes.filter((n) => wanted.has(n.community));
  }
  if (nodeIds !== null) {
    const wanted = new Set(nodeIds);
    nodes = nodes.filter((n) => wanted.has(n.id));
  }
  return nodes;
}

/** Edges whose two endpoints both survive the filter. */
export function visibleEdges(scene: ViewerScene): ExportEdge[] {
  const ids = new Set(visibleNodes(scene).map((n) => n.id));
  return scene.full.edges.filter(([i, j]) => ids.has(i) && ids.has(j));
}

export function applyCommunityFilter(scene: ViewerScene, communities: string[]): ViewerScene {
  return { ...scene, filter: { communities: [...communities], nodeIds: scene.filter.nodeIds } };
}

export function applyNodeFilter(scene: ViewerScene, nodeIds: number[]): ViewerScene {
  return { ...scene, filter: { communities: scene.filter.communities, nodeIds: [...nodeIds] } };
}

export function clearFilter(scene: ViewerScene): ViewerScene {
  return { ...scene, filter: { communities: null, nodeIds: null } };
}

export function orbitCamera(scene: ViewerScene, dAzimuth: number, dElevation: number): ViewerScene {
  let azimuth = (scene.camera.azimuth + dAzimuth) % TWO_PI;
  if (azimuth < 0) azimuth += TWO_PI;
  const halfPi = Math.PI / 2;
  const elevation = Math.min(halfPi, Math.max(-halfPi, scene.camera.elevation + dElevation));
  return { ...scene, camera: { ...scene.camera, azimuth, elevation } };
}

export function zoomCamera(scene: ViewerScene, factor: number): ViewerScene {
  const distance = Math.min(20, Math.max(0.05, scene.camera.distance * factor));
  return { ...scene, camera: { ...scene.camera, distance } };
}

export interface Projected {
  id: number;
  sx: number;    // screen x in scene units (before the renderer's fit transform)
  sy: number;    // screen y, down-positive
  depth: number; // larger = nearer to the camera
}

/** Orthographic orbit projection of a point. */
export function project(camera: Camera, x: number, y: number, z: number): { sx: number; sy: number; depth: number } {
  const ca = Math.cos(camera.azimuth);
  const sa = Math.sin(camera.azimuth);
  const ce = Math.cos(camera.elevation);
  const se = Math.sin(camera.elevation);
  // spin about the vertical (z) axis, then tilt about the screen x-axis
  const rx = ca * x + sa * y;
  const ry = -sa * x + ca * y;
  const sy = se * ry - ce * z;
  const depth = ce * ry + se * z;
  return { sx: rx * camera.distance, sy: sy * camera.distance, depth };
}

export function projectNodes(scene: ViewerScene): Projected[] {
  return visibleNodes(scene).map((n) => {
    const p = project(scene.camera, n.x, n.y, n.z);
    return { id: n.id, sx: p.sx, sy: p.sy, depth: p.depth };
  });
}
