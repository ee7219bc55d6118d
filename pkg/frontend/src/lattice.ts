/** Geometry for the subset-lattice graph view.
 *
 * Rows are cardinality levels, full set at the top and empty set at the
 * bottom; within a row nodes sit in ascending bit-pattern order, which is
 * the order the miner emits them, so the picture fills top-down as a run
 * proceeds.  Edges connect each subset to its immediate supersets.
 */

import type { RunView } from "./fold.js";

/** Above this many sources only evaluated and minimal nodes are drawn. */
export const FULL_RENDER_LIMIT = 10;

export interface NodePosition {
  mask: number;
  cardinality: number;
  x: number;
  y: number;
}

export interface LatticeEdge {
  /** Mask of the larger subset (one extra bit). */
  parent: number;
  /** Mask of the smaller subset. */
  child: number;
}

export interface LatticeLayout {
  n: number;
  /** rows[r] = masks at cardinality n - r, ascending. */
  rows: number[][];
  positions: Map<number, NodePosition>;
  edges: LatticeEdge[];
  width: number;
  height: number;
  /** True when the lattice was too large to draw in full. */
  truncated: boolean;
}

export const NODE_RADIUS = 11;
const ROW_GAP = 64;
const COLUMN_GAP = 34;
const MARGIN = 28;

function popcount(mask: number): number {
  let count = 0;
  for (let m = mask; m !== 0; m &= m - 1) {
    count++;
  }
  return count;
}

/** Masks to draw: everything for small lattices, else only nodes the run
 * actually touched with a model call plus minimal rules. */
export function visibleMasks(view: RunView): Set<number> | null {
  if (view.n <= FULL_RENDER_LIMIT) {
    return null;
  }
  const visible = new Set<number>();
  for (const node of view.nodes.values()) {
    if (node.state === "valid" || node.state === "invalid" || node.minimal) {
      visible.add(node.mask);
    }
  }
  return visible;
}

export function layoutLattice(n: number, visible: Set<number> | null): LatticeLayout {
  const rows: number[][] = Array.from({ length: n + 1 }, () => []);
  if (visible === null) {
    for (let mask = 0; mask < 1 << n; mask++) {
      rows[n - popcount(mask)]!.push(mask);
    }
  } else {
    for (const mask of visible) {
      rows[n - popcount(mask)]!.push(mask);
    }
  }
  for (const row of rows) {
    row.sort((a, b) => a - b);
  }

  const widest = Math.max(1, ...rows.map((row) => row.length));
  const width = 2 * MARGIN + widest * COLUMN_GAP;
  const height = 2 * MARGIN + n * ROW_GAP;
  const positions = new Map<number, NodePosition>();
  rows.forEach((row, r) => {
    const y = MARGIN + r * ROW_GAP;
    row.forEach((mask, i) => {
      const x = (width * (i + 1)) / (row.length + 1);
      positions.set(mask, { mask, cardinality: n - r, x, y });
    });
  });

  const edges: LatticeEdge[] = [];
  for (const parent of positions.keys()) {
    for (let bit = 0; bit < n; bit++) {
      if (parent & (1 << bit)) {
        const child = parent & ~(1 << bit);
        if (positions.has(child)) {
          edges.push({ parent, child });
        }
      }
    }
  }
  return { n, rows, positions, edges, width, height, truncated: visible !== null };
}
