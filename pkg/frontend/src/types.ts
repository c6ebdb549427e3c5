/** Schema of the network export documents produced by the factorseg CLI/service. */

export interface ExportNode {
  id: number;
  community: string | null;
  x: number;
  y: number;
  z: number;
  color: string;
}

export type ExportEdge = [number, number];

export interface NetworkExport {
  schema_version: number;
  nodes: ExportNode[];
  edges: ExportEdge[];
  metadata: Record<string, unknown>;
}

export class SchemaError extends Error {}

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

/** Validate a parsed JSON document against the export schema. */
export function parseExport(doc: unknown): NetworkExport {
  if (typeof doc !== "object" || doc === null) {
    throw new SchemaError("export must be a JSON object");
  }
  const d = doc as Record<string, unknown>;
  if (!isFiniteNumber(d.schema_version)) {
    throw new SchemaError("missing schema_version");
  }
  if (!Array.isArray(d.nodes) || !Array.isArray(d.edges)) {
    throw new SchemaError("export needs 'nodes' and 'edges' arrays");
  }
  const nodes: ExportNode[] = [];
  const ids = new Set<number>();
  for (const raw of d.nodes) {
    const n = raw as Record<string, unknown>;
    if (!isFiniteNumber(n.id) || !isFiniteNumber(n.x) || !isFiniteNumber(n.y) || !isFiniteNumber(n.z)) {
      throw new SchemaError(`malformed node: ${JSON.stringify(raw)}`);
    }
    if (typeof n.color !== "string") {
      throw new SchemaError(`node ${n.id} has no color`);
    }
    const community = n.community === null || n.community === undefined ? null : String(n.community);
    if (ids.has(n.id)) {
      throw new SchemaError(`duplicate node id ${n.id}`);
    }
    ids.add(n.id);
    nodes.push({ id: n.id, community, x: n.x, y: n.y, z: n.z, color: n.color });
  }
  const edges: ExportEdge[] = [];
  for (const raw of d.edges) {
    if (!Array.isArray(raw) || raw.length !== 2 || !isFiniteNumber(raw[0]) || !isFiniteNumber(raw[1])) {
      throw new SchemaError(`malformed edge: ${JSON.stringify(raw)}`);
    }
    const [i, j] = raw as [number, number];
    if (!ids.has(i) || !ids.has(j)) {
      throw new SchemaError(`edge [${i}, ${j}] references a missing node`);
    }
    edges.push([i, j]);
  }
  const metadata = (typeof d.metadata === "object" && d.metadata !== null ? d.metadata : {}) as Record<string, unknown>;
  return { schema_version: d.schema_version, nodes, edges, metadata };
}
