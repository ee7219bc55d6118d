/** Application controller: wires the session workflow (pick a system,
 * ask, edit sources, toggle safety, generate) to the service client and
 * re-renders the run views from the folded event stream.
 */

import { ApiClient } from "./api.js";
import type { RunView } from "./fold.js";
import { applyMessage, emptyRunView } from "./fold.js";
import {
  renderLattice,
  renderRulePanel,
  renderRunStatus,
  renderSourceCards,
} from "./render.js";
import { streamMessages } from "./sse.js";
import type { SessionSnapshot, SystemInfo } from "./types.js";

const SKELETON = `
  <header class="app-header">
    <h1>Retrieval rule miner</h1>
    <div class="system-bar">
      <label>System
        <select class="system-select"></select>
      </label>
      <span class="system-description"></span>
    </div>
  </header>
  <p class="error-line" hidden></p>
  <section class="ask-panel">
    <form class="ask-form">
      <input class="question-input" type="text"
             placeholder="Ask the assistant a question" />
      <button class="ask-button" type="submit">Retrieve</button>
    </form>
  </section>
  <section class="sources-panel" hidden>
    <h2>Retrieved sources</h2>
    <div class="source-cards"></div>
  </section>
  <section class="mine-panel" hidden>
    <h2>Rule generation</h2>
    <div class="mine-controls">
      <label class="safety-label">
        <input type="checkbox" class="safety-toggle" checked />
        Safety instructions
      </label>
      <label>Oracle
        <select class="oracle-select"></select>
      </label>
      <button class="generate-button" type="button">Generate &amp; mine</button>
    </div>
    <div class="run-status-line"></div>
    <div class="run-views">
      <div class="rules-panel">
        <h3>Minimal rules</h3>
        <div class="rule-panel-body"></div>
      </div>
      <div class="graph-panel">
        <h3>Lattice</h3>
        <div class="lattice-body"></div>
      </div>
    </div>
  </section>
`;

export class App {
  private systems: SystemInfo[] = [];
  private snapshot: SessionSnapshot | null = null;
  private runView: RunView | null = null;
  private mining = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    root.innerHTML = SKELETON;
    this.query<HTMLSelectElement>(".system-select").addEventListener(
      "change",
      () => void this.selectSystem(this.query<HTMLSelectElement>(".system-select").value),
    );
    this.query<HTMLFormElement>(".ask-form").addEventListener("submit", (e) => {
      e.preventDefault();
      void this.ask(this.query<HTMLInputElement>(".question-input").value);
    });
    this.query<HTMLButtonElement>(".generate-button").addEventListener(
      "click",
      () => void this.generate(),
    );
  }

  query<T extends Element>(selector: string): T {
    const node = this.root.querySelector(selector);
    if (node === null) {
      throw new Error(`missing element ${selector}`);
    }
    return node as T;
  }

  get session(): SessionSnapshot | null {
    return this.snapshot;
  }

  get view(): RunView | null {
    return this.runView;
  }

  async init(): Promise<void> {
    this.systems = await this.api.listSystems();
    const select = this.query<HTMLSelectElement>(".system-select");
    select.replaceChildren();
    for (const system of this.systems) {
      const option = select.ownerDocument.createElement("option");
      option.value = system.system_tag;
      option.textContent = system.system_tag;
      select.append(option);
    }
    const first = this.systems[0];
    if (first !== undefined) {
      select.value = first.system_tag;
      await this.selectSystem(first.system_tag);
    }
  }

  async selectSystem(systemTag: string): Promise<void> {
    await this.guard(async () => {
      this.snapshot = await this.api.createSession(systemTag);
      this.runView = null;
      const system = this.systems.find((s) => s.system_tag === systemTag);
      this.query(".system-description").textContent = system?.description ?? "";
      const oracleSelect = this.query<HTMLSelectElement>(".oracle-select");
      oracleSelect.replaceChildren();
      for (const name of system?.oracles ?? []) {
        const option = oracleSelect.ownerDocument.createElement("option");
        option.value = name;
        option.textContent = name;
        oracleSelect.append(option);
      }
      if (system !== undefined) {
        oracleSelect.value = system.default_oracle;
      }
      this.query<HTMLInputElement>(".question-input").value = "";
      this.render();
    });
  }

  async ask(question: string): Promise<void> {
    if (this.snapshot === null || this.mining) {
      return;
    }
    const id = this.snapshot.session_id;
    await this.guard(async () => {
      this.snapshot = await this.api.ask(id, question);
      this.runView = null;
      this.render();
    });
  }

  async saveEdit(sourceId: string, newText: string): Promise<void> {
    if (this.snapshot === null || this.mining) {
      return;
    }
    const id = this.snapshot.session_id;
    await this.guard(async () => {
      this.snapshot = await this.api.edit(id, sourceId, newText);
      this.render();
    });
  }

  async resetEdit(sourceId: string): Promise<void> {
    if (this.snapshot === null || this.mining) {
      return;
    }
    const id = this.snapshot.session_id;
    await this.guard(async () => {
      this.snapshot = await this.api.reset(id, sourceId);
      this.render();
    });
  }

  async generate(): Promise<void> {
    if (this.snapshot === null || this.mining) {
      return;
    }
    const id = this.snapshot.session_id;
    const oracleName = this.query<HTMLSelectElement>(".oracle-select").value;
    const safetyEnabled =
      this.query<HTMLInputElement>(".safety-toggle").checked;
    this.mining = true;
    this.runView = emptyRunView(this.snapshot.sources.map((s) => s.id));
    this.render();
    try {
      const response = await this.api.generate(id, {
        oracleName,
        safetyEnabled,
      });
      if (response.body !== null) {
        for await (const message of streamMessages(response.body)) {
          this.runView = applyMessage(this.runView, {
            event: message.event,
            data: JSON.parse(message.data) as unknown,
          });
          this.renderRun();
        }
      }
      this.snapshot = await this.api.getSession(id);
    } catch (error) {
      this.showError(error);
    } finally {
      this.mining = false;
      this.render();
    }
  }

  private async guard(action: () => Promise<void>): Promise<void> {
    try {
      this.showError(null);
      await action();
    } catch (error) {
      this.showError(error);
    }
  }

  private showError(error: unknown): void {
    const line = this.query<HTMLParagraphElement>(".error-line");
    if (error === null) {
      line.hidden = true;
      line.textContent = "";
      return;
    }
    line.hidden = false;
    line.textContent = error instanceof Error ? error.message : String(error);
  }

  private render(): void {
    const snapshot = this.snapshot;
    const retrieved = snapshot !== null && snapshot.sources.length > 0;
    this.query<HTMLElement>(".sources-panel").hidden = !retrieved;
    this.query<HTMLElement>(".mine-panel").hidden = !retrieved;
    this.query<HTMLButtonElement>(".ask-button").disabled = this.mining;
    this.query<HTMLInputElement>(".question-input").disabled = this.mining;
    this.query<HTMLSelectElement>(".system-select").disabled = this.mining;
    this.query<HTMLButtonElement>(".generate-button").disabled =
      this.mining || !retrieved;
    this.query<HTMLSelectElement>(".oracle-select").disabled = this.mining;
    this.query<HTMLInputElement>(".safety-toggle").disabled = this.mining;
    if (snapshot !== null) {
      this.query<HTMLInputElement>(".safety-toggle").checked =
        snapshot.safety_enabled;
      renderSourceCards(
        this.query<HTMLElement>(".source-cards"),
        snapshot.sources,
        {
          onSave: (sourceId, newText) => void this.saveEdit(sourceId, newText),
          onReset: (sourceId) => void this.resetEdit(sourceId),
        },
        this.mining,
      );
    }
    this.renderRun();
  }

  private renderRun(): void {
    const rules = this.query<HTMLElement>(".rule-panel-body");
    const graph = this.query<HTMLElement>(".lattice-body");
    const status = this.query<HTMLElement>(".run-status-line");
    if (this.runView === null) {
      rules.replaceChildren();
      graph.replaceChildren();
      status.replaceChildren();
      return;
    }
    renderRunStatus(status, this.runView);
    renderRulePanel(rules, this.runView);
    renderLattice(graph, this.runView);
  }
}

export function createApp(root: HTMLElement, api: ApiClient): App {
  return new App(root, api);
}
