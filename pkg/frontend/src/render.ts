/** DOM builders for the three run views: minimal-rule list, lattice
 * graph, and the status/failure line.  All of them render purely from a
 * folded RunView, so replaying an event log reproduces the exact DOM.
 */

import type { NodeView, RunView } from "./fold.js";
import { labelOf } from "./fold.js";
import { layoutLattice, NODE_RADIUS, visibleMasks } from "./lattice.js";
import type { SourceView } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function subsetLabel(ids: string[], sourceIds: string[]): string {
  if (ids.length === 0) {
    return "{}";
  }
  return `{${ids.map((id) => labelOf(id, sourceIds)).join(",")}}`;
}

/** Minimal rules as chip sets, or the empty-state once a run finishes dry. */
export function renderRulePanel(container: HTMLElement, view: RunView): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (view.failure !== null) {
    const banner = el(doc, "div", "failure-banner");
    banner.append(
      el(doc, "strong", undefined, "Run failed: "),
      doc.createTextNode(view.failure),
      el(
        doc,
        "span",
        "failure-note",
        " Partial results from before the failure are shown below.",
      ),
    );
    container.append(banner);
  }
  if (view.minimalRules.length > 0) {
    const list = el(doc, "div", "rule-list");
    view.minimalRules.forEach((ids, index) => {
      const chipSet = el(doc, "div", "chip-set");
      chipSet.dataset["ruleIndex"] = String(index);
      for (const id of ids) {
        const chip = el(doc, "span", "chip", labelOf(id, view.sourceIds));
        chip.dataset["sourceId"] = id;
        chip.title = id;
        chipSet.append(chip);
      }
      list.append(chipSet);
    });
    container.append(list);
    return;
  }
  if (view.complete) {
    container.append(
      el(
        doc,
        "p",
        "empty-state",
        "No rules found: the output predicate did not hold on any subset of the sources.",
      ),
    );
  } else if (view.failure === null && view.eventCount > 0) {
    container.append(el(doc, "p", "mining-note", "Mining…"));
  } else if (view.failure === null) {
    container.append(el(doc, "p", "idle-note", "No run yet."));
  }
}

function nodeTooltip(node: NodeView, view: RunView): string {
  const name = subsetLabel(node.ids, view.sourceIds);
  const minimal = node.minimal ? ", minimal rule" : "";
  const call =
    node.record?.model_call_index !== undefined
      ? ` (call #${node.record.model_call_index})`
      : "";
  return `${name}: ${node.state}${minimal}${call}`;
}

/** The subset lattice as an SVG, nodes colored by their folded state. */
export function renderLattice(container: HTMLElement, view: RunView): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  const visible = visibleMasks(view);
  const layout = layoutLattice(view.n, visible);
  if (layout.truncated) {
    container.append(
      el(
        doc,
        "p",
        "truncation-note",
        `Lattice too large to draw in full (${view.n} sources); showing evaluated nodes and minimal rules only.`,
      ),
    );
  }

  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "lattice");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));
  svg.setAttribute("role", "img");

  for (const edge of layout.edges) {
    const from = layout.positions.get(edge.parent)!;
    const to = layout.positions.get(edge.child)!;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("class", "edge");
    line.setAttribute("data-parent", String(edge.parent));
    line.setAttribute("data-child", String(edge.child));
    line.setAttribute("x1", String(from.x));
    line.setAttribute("y1", String(from.y));
    line.setAttribute("x2", String(to.x));
    line.setAttribute("y2", String(to.y));
    svg.append(line);
  }

  for (const position of layout.positions.values()) {
    const node = view.nodes.get(position.mask);
    if (node === undefined) {
      continue;
    }
    const group = doc.createElementNS(SVG_NS, "g");
    group.setAttribute("class", "lattice-node");
    group.setAttribute("data-mask", String(position.mask));
    group.setAttribute("data-state", node.state);
    group.setAttribute("data-cardinality", String(position.cardinality));
    group.setAttribute(
      "transform",
      `translate(${position.x}, ${position.y})`,
    );
    if (node.minimal) {
      const ring = doc.createElementNS(SVG_NS, "circle");
      ring.setAttribute("class", "minimal-ring");
      ring.setAttribute("r", String(NODE_RADIUS + 4));
      group.append(ring);
    }
    const circle = doc.createElementNS(SVG_NS, "circle");
    circle.setAttribute("class", "node-dot");
    circle.setAttribute("r", String(NODE_RADIUS));
    group.append(circle);
    const title = doc.createElementNS(SVG_NS, "title");
    title.textContent = nodeTooltip(node, view);
    group.append(title);
    svg.append(group);
  }
  container.append(svg);
}

/** One-line progress/status readout under the generate controls. */
export function renderRunStatus(container: HTMLElement, view: RunView): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  if (view.eventCount === 0) {
    return;
  }
  let evaluated = 0;
  let pruned = 0;
  for (const node of view.nodes.values()) {
    if (node.state === "valid" || node.state === "invalid") {
      evaluated++;
    } else if (node.state === "pruned") {
      pruned++;
    }
  }
  const parts = [
    view.complete
      ? "run complete"
      : view.failure !== null
        ? "run failed"
        : view.currentLevel !== null
          ? `sweeping level ${view.currentLevel}`
          : "starting",
    `${evaluated} evaluated`,
    `${pruned} pruned`,
  ];
  if (view.summary !== null) {
    parts.push(`${view.summary.model_call_count} model calls`);
  }
  container.append(el(doc, "span", "run-status", parts.join(" · ")));
}

export interface SourceCardHandlers {
  onSave(sourceId: string, newText: string): void;
  onReset(sourceId: string): void;
}

/** Editable cards for the retrieved sources, in rank order. */
export function renderSourceCards(
  container: HTMLElement,
  sources: SourceView[],
  handlers: SourceCardHandlers,
  disabled: boolean,
): void {
  const doc = container.ownerDocument;
  container.replaceChildren();
  for (const source of sources) {
    const card = el(doc, "article", "source-card");
    card.dataset["sourceId"] = source.id;

    const header = el(doc, "header", "source-header");
    header.append(
      el(doc, "span", "source-label", source.label),
      el(doc, "span", "source-title", source.title),
      el(doc, "span", "source-score", source.score.toFixed(3)),
    );
    if (source.edited) {
      header.append(el(doc, "span", "edited-badge", "edited"));
    }
    card.append(header);

    const text = el(doc, "textarea", "source-text");
    text.rows = 6;
    text.value = source.current_text;
    text.disabled = disabled;
    card.append(text);

    const footer = el(doc, "footer", "source-actions");
    const save = el(doc, "button", "save-edit", "Apply edit");
    save.type = "button";
    save.disabled = disabled;
    save.addEventListener("click", () => handlers.onSave(source.id, text.value));
    const reset = el(doc, "button", "reset-edit", "Reset to original");
    reset.type = "button";
    reset.disabled = disabled || !source.edited;
    reset.addEventListener("click", () => handlers.onReset(source.id));
    footer.append(save, reset);
    card.append(footer);

    container.append(card);
  }
}
