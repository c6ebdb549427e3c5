// @vitest-environment jsdom
import { readFileSync } from "node:fs";
import { resolve } from "node:path";
import { beforeEach, describe, expect, it } from "vitest";

import { renderScene } from "../src/render.js";
import { applyCommunityFilter, clearFilter, loadExport } from "../src/scene.js";

const samplePath = resolve(process.cwd(), "public/sample-export.json");
const sample = JSON.parse(readFileSync(samplePath, "utf-8"));

let container: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = '<div id="viewport"></div>';
  container = document.getElementById("viewport")!;
});

describe("renderScene DOM output", () => {
  it("draws exactly the export's node and edge counts", () => {
    const scene = loadExport(sample);
    const counts = renderScene(scene, container);
    expect(counts.nodes).toBe(sample.nodes.length);
    expect(counts.edges).toBe(sample.edges.length);
    expect(container.querySelectorAll("circle.node").length).toBe(sample.nodes.length);
    expect(container.querySelectorAll("line.edge").length).toBe(sample.edges.length);
  });

  it("community filter None+Visual reduces the drawn set to those communities", () => {
    const scene = applyCommunityFilter(loadExport(sample), ["None", "Visual"]);
    renderScene(scene, container);
    const circles = Array.from(container.querySelectorAll("circle.node"));
    const expected = sample.nodes.filter(
      (n: { community: string | null }) => n.community === "None" || n.community === "Visual",
    );
    expect(circles.length).toBe(expected.length);
    for (const c of circles) {
      expect(["None", "Visual"]).toContain(c.getAttribute("data-community"));
    }
    const keptIds = new Set(circles.map((c) => Number(c.getAttribute("data-id"))));
    for (const line of container.querySelectorAll("line.edge")) {
      void line;
    }
    const expectedEdges = sample.edges.filter(
      ([i, j]: [number, number]) =>
        keptIds.has(i) && keptIds.has(j),
    );
    expect(container.querySelectorAll("line.edge").length).toBe(expectedEdges.length);
  });

  it("filter then clear restores the full drawn counts", () => {
    let scene = loadExport(sample);
    renderScene(scene, container);
    const fullNodes = container.querySelectorAll("circle.node").length;
    const fullEdges = container.querySelectorAll("line.edge").length;

    scene = applyCommunityFilter(scene, ["Visual"]);
    renderScene(scene, container);
    expect(container.querySelectorAll("circle.node").length).toBeLessThan(fullNodes);

    scene = clearFilter(scene);
    renderScene(scene, container);
    expect(container.querySelectorAll("circle.node").length).toBe(fullNodes);
    expect(container.querySelectorAll("line.edge").length).toBe(fullEdges);
  });

  it("renders nodes-only exports without error", () => {
    const doc = { ...sample, edges: [] };
    const counts = renderScene(loadExport(doc), container);
    expect(counts.nodes).toBe(sample.nodes.length);
    expect(counts.edges).toBe(0);
  });

  it("re-rendering clears previous content", () => {
    const scene = loadExport(sample);
    renderScene(scene, container);
    renderScene(scene, container);
    expect(container.querySelectorAll("svg").length).toBe(1);
  });

  it("draws the decorative surface wireframe unless disabled", () => {
    const scene = loadExport(sample);
    renderScene(scene, container);
    expect(container.querySelectorAll("g.surface polyline").length).toBeGreaterThan(0);
    renderScene(scene, container, { width: 400, height: 300, nodeRadius: 5, showSurface: false });
    expect(container.querySelectorAll("g.surface polyline").length).toBe(0);
  });
});
