// Policy-graph editor model and canvas rendering. The model is pure
// state (edges drawn, infected cells selected) so tests can drive it
// headlessly; the server stays the source of truth after every
// round-trip.

import type { Edge, PolicyDoc } from "./types.js";

export function edgeKey(a: number, b: number): string {
  return a < b ? `${a}-${b}` : `${b}-${a}`;
}

export function sortedEdges(keys: Iterable<string>): Edge[] {
  const edges: Edge[] = [];
  for (const key of keys) {
    const [a, b] = key.split("-").map(Number);
    edges.push([a, b]);
  }
  edges.sort((p, q) => (p[0] - q[0] !== 0 ? p[0] - q[0] : p[1] - q[1]));
  return edges;
}

export class EditorState {
  readonly width: number;
  readonly height: number;
  private edges = new Set<string>();
  readonly infected = new Set<number>();

  constructor(width: number, height: number) {
    this.width = width;
    this.height = height;
  }

  get cellCount(): number {
    return this.width * this.height;
  }

  inRange(cell: number): boolean {
    return Number.isInteger(cell) && cell >= 0 && cell < this.cellCount;
  }

  hasEdge(a: number, b: number): boolean {
    return this.edges.has(edgeKey(a, b));
  }

  /** Toggle the edge between two distinct cells; returns true if now present. */
  toggleEdge(a: number, b: number): boolean {
    if (a === b || !this.inRange(a) || !this.inRange(b)) return false;
    const key = edgeKey(a, b);
    if (this.edges.has(key)) {
      this.edges.delete(key);
      return false;
    }
    this.edges.add(key);
    return true;
  }

  toggleInfected(cell: number): boolean {
    if (!this.inRange(cell)) return false;
    if (this.infected.has(cell)) {
      this.infected.delete(cell);
      return false;
    }
    this.infected.add(cell);
    return true;
  }

  edgeList(): Edge[] {
    return sortedEdges(this.edges);
  }

  edgeCount(): number {
    return this.edges.size;
  }

  clear(): void {
    this.edges.clear();
  }

  /** Replace the drawn graph with a server response. */
  setFromDoc(doc: Pick<PolicyDoc, "edges">): void {
    this.edges.clear();
    for (const [a, b] of doc.edges) this.edges.add(edgeKey(a, b));
  }

  /** Body for PUT /policy kind=custom. */
  toCustomParams(): { edges: Edge[] } {
    return { edges: this.edgeList() };
  }

  sameGraph(doc: Pick<PolicyDoc, "edges">): boolean {
    if (doc.edges.length !== this.edges.size) return false;
    return doc.edges.every(([a, b]) => this.edges.has(edgeKey(a, b)));
  }
}

// ── Rendering ────────────────────────────────────────────────────────

export interface CellGeometry {
  cellAt(x: number, y: number): number | null;
  center(cell: number): [number, number];
  size: number;
}

export function gridGeometry(
  width: number,
  height: number,
  pixelWidth: number,
  pixelHeight: number,
  pad = 12,
): CellGeometry {
  const size = Math.min((pixelWidth - 2 * pad) / width, (pixelHeight - 2 * pad) / height);
  return {
    size,
    cellAt(x: number, y: number): number | null {
      const col = Math.floor((x - pad) / size);
      const row = Math.floor((y - pad) / size);
      if (col < 0 || col >= width || row < 0 || row >= height) return null;
      return row * width + col;
    },
    center(cell: number): [number, number] {
      const row = Math.floor(cell / width);
      const col = cell % width;
      return [pad + (col + 0.5) * size, pad + (row + 0.5) * size];
    },
  };
}

export interface EditorPalette {
  cell: string;
  cellBorder: string;
  infected: string;
  edge: string;
  node: string;
  dragLine: string;
}

export const DEFAULT_PALETTE: EditorPalette = {
  cell: "#16202c",
  cellBorder: "#2c3e50",
  infected: "#7c2d36",
  edge: "#4db6ac",
  node: "#90a4ae",
  dragLine: "#e0a030",
};

export function drawEditor(
  ctx: CanvasRenderingContext2D,
  state: EditorState,
  geom: CellGeometry,
  drag: { from: number; toXY: [number, number] } | null = null,
  palette: EditorPalette = DEFAULT_PALETTE,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  for (let cell = 0; cell < state.cellCount; cell++) {
    const [cx, cy] = geom.center(cell);
    const half = geom.size / 2 - 1;
    ctx.fillStyle = state.infected.has(cell) ? palette.infected : palette.cell;
    ctx.strokeStyle = palette.cellBorder;
    ctx.fillRect(cx - half, cy - half, 2 * half, 2 * half);
    ctx.strokeRect(cx - half, cy - half, 2 * half, 2 * half);
  }
  ctx.strokeStyle = palette.edge;
  ctx.lineWidth = 1.5;
  for (const [a, b] of state.edgeList()) {
    const [ax, ay] = geom.center(a);
    const [bx, by] = geom.center(b);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(bx, by);
    ctx.stroke();
  }
  ctx.fillStyle = palette.node;
  for (let cell = 0; cell < state.cellCount; cell++) {
    const [cx, cy] = geom.center(cell);
    ctx.beginPath();
    ctx.arc(cx, cy, Math.max(2, geom.size / 10), 0, 2 * Math.PI);
    ctx.fill();
  }
  if (drag) {
    const [ax, ay] = geom.center(drag.from);
    ctx.strokeStyle = palette.dragLine;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(ax, ay);
    ctx.lineTo(drag.toXY[0], drag.toXY[1]);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}
