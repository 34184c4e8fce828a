/**
 * Layered auto-layout for the service's derived process graph.
 *
 * The backend ships topology only ({nodes, edges}); placement happens here.
 * Longest-path layering over forward edges assigns columns, a barycenter pass
 * orders rows, and loop back-edges are routed through a lane below the rows.
 */

import type { GraphEdge, GraphView } from "./api.js";

export type NodeCategory = "task" | "gateway" | "event";

export interface PlacedNode {
  id: string;
  label: string;
  role: string; // service kind: start/end/task/xor_split/xor_join/and_split/and_join
  category: NodeCategory;
  x: number;
  y: number;
  width: number;
  height: number;
}

export interface Point {
  x: number;
  y: number;
}

export interface RoutedEdge {
  source: string;
  target: string;
  points: Point[];
  back: boolean;
}

export interface GraphLayout {
  nodes: PlacedNode[];
  edges: RoutedEdge[];
  width: number;
  height: number;
}

const SIZES: Record<NodeCategory, { width: number; height: number }> = {
  task: { width: 132, height: 52 },
  gateway: { width: 44, height: 44 },
  event: { width: 36, height: 36 },
};

const MARGIN = 28;
const COLUMN_GAP = 64;
const ROW_GAP = 84;
const LOOP_LANE_GAP = 36;

export function categoryOf(kind: string): NodeCategory {
  if (kind === "start" || kind === "end") return "event";
  if (kind.endsWith("_split") || kind.endsWith("_join")) return "gateway";
  return "task";
}

// edges to a node already on the DFS stack close a loop; they are excluded
// from layering and drawn through the return lane
function findBackEdges(graph: GraphView, roots: number[], index: Map<string, number>): Set<GraphEdge> {
  const out: number[][] = graph.nodes.map(() => []);
  const edgeAt: GraphEdge[][] = graph.nodes.map(() => []);
  for (const edge of graph.edges) {
    const s = index.get(edge.source);
    const t = index.get(edge.target);
    if (s === undefined || t === undefined) continue;
    out[s].push(t);
    edgeAt[s].push(edge);
  }
  const back = new Set<GraphEdge>();
  const state = new Array<number>(graph.nodes.length).fill(0); // 0 new, 1 open, 2 done
  for (const root of roots) {
    if (state[root] !== 0) continue;
    const stack: Array<{ node: number; next: number }> = [{ node: root, next: 0 }];
    state[root] = 1;
    while (stack.length > 0) {
      const frame = stack[stack.length - 1];
      if (frame.next >= out[frame.node].length) {
        state[frame.node] = 2;
        stack.pop();
        continue;
      }
      const pick = frame.next++;
      const target = out[frame.node][pick];
      if (state[target] === 1) {
        back.add(edgeAt[frame.node][pick]);
      } else if (state[target] === 0) {
        state[target] = 1;
        stack.push({ node: target, next: 0 });
      }
    }
  }
  return back;
}

function longestPathLayers(count: number, forward: Array<[number, number]>, roots: number[]): number[] {
  const out: number[][] = Array.from({ length: count }, () => []);
  const indeg = new Array<number>(count).fill(0);
  for (const [s, t] of forward) {
    out[s].push(t);
    indeg[t] += 1;
  }
  const layer = new Array<number>(count).fill(0);
  const queue = roots.filter((n) => indeg[n] === 0);
  const pending = indeg.slice();
  const seen = new Array<boolean>(count).fill(false);
  while (queue.length > 0) {
    const node = queue.shift()!;
    if (seen[node]) continue;
    seen[node] = true;
    for (const target of out[node]) {
      layer[target] = Math.max(layer[target], layer[node] + 1);
      pending[target] -= 1;
      if (pending[target] === 0) queue.push(target);
    }
  }
  return layer;
}

/** Computes positions for every node and a polyline for every edge. */
export function layoutGraph(graph: GraphView): GraphLayout {
  const index = new Map<string, number>();
  graph.nodes.forEach((node, i) => index.set(node.id, i));

  const indeg = new Array<number>(graph.nodes.length).fill(0);
  for (const edge of graph.edges) {
    const t = index.get(edge.target);
    if (t !== undefined) indeg[t] += 1;
  }
  let roots = graph.nodes.map((_, i) => i).filter((i) => indeg[i] === 0);
  if (roots.length === 0 && graph.nodes.length > 0) roots = [0];

  const back = findBackEdges(graph, roots, index);
  const forward: Array<[number, number]> = [];
  for (const edge of graph.edges) {
    if (back.has(edge)) continue;
    const s = index.get(edge.source);
    const t = index.get(edge.target);
    if (s !== undefined && t !== undefined) forward.push([s, t]);
  }
  const layer = longestPathLayers(graph.nodes.length, forward, roots);

  // rows per column, ordered by mean predecessor row with input order as tiebreak
  const columnCount = graph.nodes.length > 0 ? Math.max(...layer) + 1 : 0;
  const columns: number[][] = Array.from({ length: columnCount }, () => []);
  graph.nodes.forEach((_, i) => columns[layer[i]].push(i));
  const row = new Array<number>(graph.nodes.length).fill(0);
  const preds: number[][] = graph.nodes.map(() => []);
  for (const [s, t] of forward) preds[t].push(s);
  for (const column of columns) {
    const keyed = column.map((node, position) => {
      const upstream = preds[node].filter((p) => layer[p] < layer[node]);
      const mean =
        upstream.length > 0
          ? upstream.reduce((acc, p) => acc + row[p], 0) / upstream.length
          : position;
      return { node, mean, position };
    });
    keyed.sort((a, b) => a.mean - b.mean || a.position - b.position);
    keyed.forEach((entry, position) => {
      row[entry.node] = position;
    });
  }

  const slotWidth = SIZES.task.width;
  const tallest = Math.max(1, ...columns.map((c) => c.length));
  const placed: PlacedNode[] = graph.nodes.map((node, i) => {
    const category = categoryOf(node.kind);
    const { width, height } = SIZES[category];
    const offset = ((tallest - columns[layer[i]].length) * ROW_GAP) / 2;
    return {
      id: node.id,
      label: node.label,
      role: node.kind,
      category,
      x: MARGIN + layer[i] * (slotWidth + COLUMN_GAP) + (slotWidth - width) / 2,
      y: MARGIN + offset + row[i] * ROW_GAP + (ROW_GAP - height) / 2,
      width,
      height,
    };
  });
  const byId = new Map(placed.map((node) => [node.id, node]));

  const bodyBottom =
    placed.length > 0 ? Math.max(...placed.map((n) => n.y + n.height)) : MARGIN;
  let lane = 0;
  const edges: RoutedEdge[] = graph.edges.map((edge) => {
    const source = byId.get(edge.source);
    const target = byId.get(edge.target);
    if (!source || !target) return { source: edge.source, target: edge.target, points: [], back: false };
    if (back.has(edge)) {
      const laneY = bodyBottom + LOOP_LANE_GAP * (1 + lane++);
      return {
        source: edge.source,
        target: edge.target,
        back: true,
        points: [
          { x: source.x + source.width / 2, y: source.y + source.height },
          { x: source.x + source.width / 2, y: laneY },
          { x: target.x + target.width / 2, y: laneY },
          { x: target.x + target.width / 2, y: target.y + target.height },
        ],
      };
    }
    return {
      source: edge.source,
      target: edge.target,
      back: false,
      points: [
        { x: source.x + source.width, y: source.y + source.height / 2 },
        { x: target.x, y: target.y + target.height / 2 },
      ],
    };
  });

  const width =
    placed.length > 0 ? Math.max(...placed.map((n) => n.x + n.width)) + MARGIN : 2 * MARGIN;
  const height = bodyBottom + LOOP_LANE_GAP * (lane + 1) + MARGIN;
  return { nodes: placed, edges, width, height };
}
