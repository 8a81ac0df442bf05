// Client-side view state. Nothing here holds derived numbers: the current
// cube id points at server state, and every rendering pulls from the last
// payload received.

import type { CubeRendering, ModelInfo } from "./types.js";
import type { RuleDraft } from "./rules.js";
import { emptyDraft } from "./rules.js";

export type MiningTask = "opac" | "mca" | "rules";

export interface ViewState {
  model: ModelInfo | null;
  cube: CubeRendering | null;
  ruleDraft: RuleDraft;
  miningTask: MiningTask;
  opacK: number;
}

export function initialState(): ViewState {
  return {
    model: null,
    cube: null,
    ruleDraft: emptyDraft(),
    miningTask: "opac",
    opacK: 2,
  };
}
