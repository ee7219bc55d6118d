/** Pure fold of the mining event stream into renderable run state.
 *
 * Node states come solely from received events and the minimal-rule list
 * equals the received rule_minimal events — validity and minimality are
 * never recomputed on the client.  Applying a message returns a fresh
 * state, so replaying the same log always yields the same view.
 */

import type {
  EventPayload,
  FailurePayload,
  RuleRecord,
  RunSummary,
  StreamMessage,
} from "./types.js";

export type NodeState = "pending" | "valid" | "invalid" | "pruned";

export interface NodeView {
  mask: number;
  ids: string[];
  state: NodeState;
  minimal: boolean;
  record: RuleRecord | null;
}

export interface RunView {
  /** Retrieved source ids in rank order; bit i of a mask is sourceIds[i]. */
  sourceIds: string[];
  n: number;
  nodes: ReadonlyMap<number, NodeView>;
  currentLevel: number | null;
  minimalRules: string[][];
  summary: RunSummary | null;
  complete: boolean;
  failure: string | null;
  eventCount: number;
}

/** Bitmask of a subset given as source ids (bit i = rank-i source). */
export function maskOf(ids: string[], sourceIds: string[]): number {
  let mask = 0;
  for (const id of ids) {
    const position = sourceIds.indexOf(id);
    if (position < 0) {
      throw new Error(`unknown source id ${JSON.stringify(id)}`);
    }
    mask |= 1 << position;
  }
  return mask;
}

/** Rank label (S1, S2, ...) for a source id. */
export function labelOf(id: string, sourceIds: string[]): string {
  const position = sourceIds.indexOf(id);
  return position < 0 ? id : `S${position + 1}`;
}

export function emptyRunView(sourceIds: string[]): RunView {
  const n = sourceIds.length;
  const nodes = new Map<number, NodeView>();
  for (let mask = 0; mask < 1 << n; mask++) {
    nodes.set(mask, {
      mask,
      ids: sourceIds.filter((_, i) => mask & (1 << i)),
      state: "pending",
      minimal: false,
      record: null,
    });
  }
  return {
    sourceIds: [...sourceIds],
    n,
    nodes,
    currentLevel: null,
    minimalRules: [],
    summary: null,
    complete: false,
    failure: null,
    eventCount: 0,
  };
}

function withNode(view: RunView, mask: number, patch: Partial<NodeView>): RunView {
  const nodes = new Map(view.nodes);
  const node = nodes.get(mask);
  if (node === undefined) {
    throw new Error(`subset mask ${mask} outside the ${view.n}-source lattice`);
  }
  nodes.set(mask, { ...node, ...patch });
  return { ...view, nodes };
}

export function applyMessage(view: RunView, message: StreamMessage): RunView {
  const next = { ...view, eventCount: view.eventCount + 1 };
  if (message.event === "run_failed") {
    const payload = message.data as FailurePayload;
    return {
      ...next,
      failure: payload.message,
      summary: payload.summary ?? view.summary,
    };
  }
  const payload = message.data as EventPayload;
  switch (message.event) {
    case "level_started":
      return { ...next, currentLevel: payload.level };
    case "subset_evaluated": {
      const record = payload.record ?? null;
      const mask = maskOf(payload.subset ?? [], view.sourceIds);
      return withNode(next, mask, {
        state: record?.valid ? "valid" : "invalid",
        record,
      });
    }
    case "rule_valid": {
      const mask = maskOf(payload.subset ?? [], view.sourceIds);
      return withNode(next, mask, {
        state: "valid",
        record: payload.record ?? null,
      });
    }
    case "subset_pruned": {
      const mask = maskOf(payload.subset ?? [], view.sourceIds);
      return withNode(next, mask, {
        state: "pruned",
        record: payload.record ?? null,
      });
    }
    case "rule_minimal": {
      const ids = payload.subset ?? [];
      const mask = maskOf(ids, view.sourceIds);
      const patched = withNode(next, mask, {
        minimal: true,
        record: payload.record ?? next.nodes.get(mask)?.record ?? null,
      });
      return { ...patched, minimalRules: [...view.minimalRules, [...ids]] };
    }
    case "mining_complete":
      return { ...next, complete: true, summary: payload.summary ?? null };
    default:
      // Unknown kinds are skipped so the client tolerates additions.
      return next;
  }
}

export function foldMessages(
  sourceIds: string[],
  messages: Iterable<StreamMessage>,
): RunView {
  let view = emptyRunView(sourceIds);
  for (const message of messages) {
    view = applyMessage(view, message);
  }
  return view;
}
