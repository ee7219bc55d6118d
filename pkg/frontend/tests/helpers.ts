import type { NodeState } from "../src/fold.js";
import type { RuleRecord, RunDetail, StreamMessage } from "../src/types.js";

import strongRaw from "./fixtures/finance-strong.json";
import weakRaw from "./fixtures/finance-weak.json";

/** Shape of the recorded service traffic in tests/fixtures/. */
export interface Fixture {
  system_tag: string;
  oracle_name: string;
  question: string;
  source_ids: string[];
  labels: string[];
  events: StreamMessage[];
  run: RunDetail;
}

export const weakFixture = weakRaw as unknown as Fixture;
export const strongFixture = strongRaw as unknown as Fixture;

/** The node state a finished run's record must have produced in the UI. */
export function expectedStateOf(record: RuleRecord): NodeState {
  if (record.pruned) {
    return "pruned";
  }
  return record.valid ? "valid" : "invalid";
}
