// Browser wiring: tabs, forms and event handlers around the pure rendering
// modules. Every number on screen is copied from the latest API payload.

import { ApiError, Client, OperatorRequest } from "./api.js";
import {
  renderDendrogram,
  renderHeatmap,
  renderPartition,
  renderQualityTable,
  renderRulesTable,
} from "./mining.js";
import { escapeHtml, renderCubeSummary, renderPivot } from "./pivot.js";
import {
  draftToBody,
  describeRule,
  parseValueList,
  renderFindings,
  renderGroups,
} from "./rules.js";
import { initialState, ViewState } from "./state.js";
import type { ConditionTerm, CubeRendering, ModelInfo, RuleBody } from "./types.js";

const client = new Client("");
const state: ViewState = initialState();

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function showError(err: unknown): void {
  const bar = $("error-bar");
  if (err instanceof ApiError) {
    bar.innerHTML =
      `<code>${escapeHtml(err.code)}</code> ${escapeHtml(err.message)}` +
      (err.where ? ` <em>(${escapeHtml(err.where)})</em>` : "");
  } else {
    bar.textContent = String(err);
  }
  bar.hidden = false;
}

function clearError(): void {
  $("error-bar").hidden = true;
}

async function guard<T>(action: () => Promise<T>): Promise<T | undefined> {
  try {
    clearError();
    return await action();
  } catch (err) {
    showError(err);
    return undefined;
  }
}

// ---------------------------------------------------------------------------
// Model tree

function renderModelTree(model: ModelInfo): void {
  const dims = model.dimensions
    .map((d) => {
      const levels = d.levels
        .map(
          (lv) =>
            `<li><code>${escapeHtml(lv.id)}</code> ` +
            `<span class="count">${lv.members.length} members</span></li>`,
        )
        .join("");
      return `<li><strong>${escapeHtml(d.id)}</strong><ul>${levels}</ul></li>`;
    })
    .join("");
  $("model-tree").innerHTML =
    `<ul>${dims}</ul>` +
    `<p>${model.facts.rows} facts · measures: ` +
    model.facts.measures.map((m) => escapeHtml(m.id)).join(", ") +
    "</p>";
}

async function refreshModel(): Promise<void> {
  const model = await guard(() => client.getModel());
  if (!model) return;
  state.model = model;
  renderModelTree(model);
  populateCubeForm(model);
  populateRuleEditor(model);
  populateMiningForms(model);
}

// ---------------------------------------------------------------------------
// Pivot explorer

function axisOptions(model: ModelInfo): string {
  return model.dimensions
    .flatMap((d) =>
      d.levels.map(
        (lv) =>
          `<option value="${escapeHtml(d.id)}:${escapeHtml(lv.id)}">` +
          `${escapeHtml(d.id)} · ${escapeHtml(lv.id)}</option>`,
      ),
    )
    .join("");
}

function populateCubeForm(model: ModelInfo): void {
  const axes = axisOptions(model);
  $("axis-row").innerHTML = `<option value="">(none)</option>` + axes;
  $("axis-col").innerHTML = `<option value="">(none)</option>` + axes;
  $("measure").innerHTML = model.facts.measures
    .map((m) => `<option>${escapeHtml(m.id)}</option>`)
    .join("");
}

function setCube(cube: CubeRendering): void {
  state.cube = cube;
  $("pivot").innerHTML = renderCubeSummary(cube) + renderPivot(cube);
  populateToolbar(cube);
  $("opac-dimension").innerHTML = cube.axes
    .map((ax) => `<option>${escapeHtml(ax.dimension)}</option>`)
    .join("");
}

function populateToolbar(cube: CubeRendering): void {
  const dims = cube.axes
    .map((ax) => `<option>${escapeHtml(ax.dimension)}</option>`)
    .join("");
  $("op-dimension").innerHTML = dims;
  refreshOpLevels();
}

function refreshOpLevels(): void {
  if (!state.model || !state.cube) return;
  const dimId = ($("op-dimension") as HTMLSelectElement).value;
  const dim = state.model.dimensions.find((d) => d.id === dimId);
  const axis = state.cube.axes.find((ax) => ax.dimension === dimId);
  if (!dim || !axis) return;
  $("op-level").innerHTML = dim.levels
    .filter((lv) => lv.id !== axis.level)
    .map((lv) => `<option>${escapeHtml(lv.id)}</option>`)
    .join("");
  $("op-member").innerHTML = axis.members
    .map((m) => `<option>${escapeHtml(m)}</option>`)
    .join("");
}

async function buildCube(): Promise<void> {
  const axes: { dimension: string; level: string }[] = [];
  for (const id of ["axis-row", "axis-col"]) {
    const value = ($(id) as HTMLSelectElement).value;
    if (value) {
      const [dimension, level] = value.split(":");
      axes.push({ dimension, level });
    }
  }
  const cube = await guard(() =>
    client.createCube({
      axes,
      measure: ($("measure") as HTMLSelectElement).value,
      aggregate: ($("aggregate") as HTMLSelectElement).value,
    }),
  );
  if (cube) setCube(cube);
}

async function applyOperator(request: OperatorRequest): Promise<void> {
  if (!state.cube) return;
  const cube = await guard(() => client.operate(state.cube!.id, request));
  if (cube) setCube(cube);
}

function toolbarHandlers(): void {
  $("op-dimension").addEventListener("change", refreshOpLevels);
  $("btn-build").addEventListener("click", () => void buildCube());
  $("btn-rollup").addEventListener("click", () =>
    void applyOperator({
      op: "roll-up",
      dimension: ($("op-dimension") as HTMLSelectElement).value,
      level: ($("op-level") as HTMLSelectElement).value,
    }));
  $("btn-drilldown").addEventListener("click", () =>
    void applyOperator({
      op: "drill-down",
      dimension: ($("op-dimension") as HTMLSelectElement).value,
      level: ($("op-level") as HTMLSelectElement).value,
    }));
  $("btn-slice").addEventListener("click", () =>
    void applyOperator({
      op: "slice",
      dimension: ($("op-dimension") as HTMLSelectElement).value,
      member: ($("op-member") as HTMLSelectElement).value,
    }));
  $("btn-dice").addEventListener("click", () => {
    const members = parseValueList(($("op-members") as HTMLInputElement).value);
    void applyOperator({
      op: "dice",
      predicates: { [($("op-dimension") as HTMLSelectElement).value]: members },
    });
  });
  $("btn-switch").addEventListener("click", () => {
    const members = parseValueList(($("op-members") as HTMLInputElement).value);
    void applyOperator({
      op: "switch",
      dimension: ($("op-dimension") as HTMLSelectElement).value,
      members,
    });
  });
  $("btn-rotate").addEventListener("click", () => {
    const n = state.cube?.axes.length ?? 0;
    if (n < 2) return;
    const order = [1, 0, ...Array.from({ length: n - 2 }, (_, i) => i + 2)];
    void applyOperator({ op: "rotate", order });
  });
  $("btn-push").addEventListener("click", () =>
    void applyOperator({
      op: "push",
      dimension: ($("op-dimension") as HTMLSelectElement).value,
    }));
  $("btn-pull").addEventListener("click", () => void applyOperator({ op: "pull" }));
}

// ---------------------------------------------------------------------------
// Rule editor

function populateRuleEditor(model: ModelInfo): void {
  $("rule-source").innerHTML = model.dimensions
    .flatMap((d) =>
      d.levels.map(
        (lv) =>
          `<option value="${escapeHtml(d.id)}:${escapeHtml(lv.id)}">` +
          `${escapeHtml(d.id)} · ${escapeHtml(lv.id)}</option>`,
      ),
    )
    .join("");
  refreshConditionAttrs();
}

function refreshConditionAttrs(): void {
  if (!state.model) return;
  const [dimId, levelId] = ($("rule-source") as HTMLSelectElement).value.split(":");
  const level = state.model.dimensions
    .find((d) => d.id === dimId)
    ?.levels.find((lv) => lv.id === levelId);
  const attrs = (level?.attributes.map((a) => a.name) ?? []).concat(["id"]);
  $("rule-attr").innerHTML = attrs
    .map((a) => `<option>${escapeHtml(a)}</option>`)
    .join("");
}

function currentDraft(): RuleBody {
  const [dimension, sourceLevel] =
    ($("rule-source") as HTMLSelectElement).value.split(":");
  state.ruleDraft.dimension = dimension;
  state.ruleDraft.sourceLevel = sourceLevel;
  state.ruleDraft.targetLevel = ($("rule-target-level") as HTMLInputElement).value;
  state.ruleDraft.targetAttributes = [
    ($("rule-target-attr") as HTMLInputElement).value || "group-name",
  ];
  state.ruleDraft.conditionAttributes = Array.from(
    new Set(state.ruleDraft.rules.flatMap((r) => r.condition.map((t) => t.attr))),
  );
  return draftToBody(state.ruleDraft);
}

function renderDraftRules(): void {
  const items = state.ruleDraft.rules
    .map(
      (rule, i) =>
        `<li>(${i + 1}) ${escapeHtml(describeRule(rule))} ` +
        `<button type="button" data-remove="${i}">✕</button></li>`,
    )
    .join("");
  $("rule-list").innerHTML = items || "<li><em>no data rules yet</em></li>";
  for (const btn of $("rule-list").querySelectorAll("button[data-remove]")) {
    btn.addEventListener("click", () => {
      state.ruleDraft.rules.splice(Number((btn as HTMLElement).dataset.remove), 1);
      renderDraftRules();
      void dryRun();
    });
  }
}

function addDataRule(): void {
  const attr = ($("rule-attr") as HTMLSelectElement).value;
  const op = ($("rule-op") as HTMLSelectElement).value as ConditionTerm["op"];
  const values = parseValueList(($("rule-values") as HTMLInputElement).value);
  const targetValue = ($("rule-target-value") as HTMLInputElement).value;
  if (!targetValue || (op !== "=" && values.length === 0)) return;
  const term: ConditionTerm =
    op === "="
      ? { attr, op, value: values[0] ?? "" }
      : { attr, op, values };
  const targetAttr = ($("rule-target-attr") as HTMLInputElement).value || "group-name";
  state.ruleDraft.rules.push({
    condition: [term],
    target: { [targetAttr]: targetValue },
  });
  renderDraftRules();
  void dryRun();
}

async function dryRun(): Promise<void> {
  if (state.ruleDraft.rules.length === 0) {
    $("rule-findings").innerHTML = "";
    return;
  }
  const result = await guard(() => client.applyRules(currentDraft(), true));
  if (result) {
    $("rule-findings").innerHTML = renderFindings(result.findings);
  }
}

async function applyRules(): Promise<void> {
  const result = await guard(() => client.applyRules(currentDraft(), false));
  if (!result) return;
  $("rule-findings").innerHTML = renderFindings(result.findings);
  if (result.applied && result.change) {
    $("rule-findings").innerHTML +=
      `<p class="applied">Level <code>${escapeHtml(result.change.new_level)}</code>` +
      ` created on <code>${escapeHtml(result.change.dimension)}</code>.</p>` +
      renderGroups(result.change.groups);
    state.ruleDraft.rules = [];
    renderDraftRules();
    await refreshModel();
    if (state.cube) {
      const cube = await guard(() => client.getCube(state.cube!.id));
      if (cube) setCube(cube); // re-render to pick up the stale flag
    }
  }
}

// ---------------------------------------------------------------------------
// Mining panels

function populateMiningForms(model: ModelInfo): void {
  const slots = model.dimensions
    .flatMap((d) =>
      d.levels.map(
        (lv) => `<option value="${escapeHtml(d.id)}:${escapeHtml(lv.id)}">` +
          `${escapeHtml(d.id)} · ${escapeHtml(lv.id)}</option>`,
      ),
    )
    .join("");
  $("meta-antecedent").innerHTML = slots;
  $("meta-consequent").innerHTML = slots;
  $("meta-measure").innerHTML = model.facts.measures
    .map((m) => `<option>${escapeHtml(m.id)}</option>`)
    .join("");
}

async function runOpac(): Promise<void> {
  if (!state.cube) return;
  state.opacK = Number(($("opac-k") as HTMLInputElement).value);
  const result = await guard(() =>
    client.mineOpac({
      cube: state.cube!.id,
      dimension: ($("opac-dimension") as HTMLSelectElement).value,
      k: state.opacK,
      target_level: ($("opac-target") as HTMLInputElement).value || undefined,
    }),
  );
  if (!result) return;
  ($("opac-k") as HTMLInputElement).max = String(result.members.length);
  $("opac-output").innerHTML =
    `<ul class="dendrogram">${renderDendrogram(result.dendrogram)}</ul>` +
    renderQualityTable(result.quality, state.opacK) +
    renderPartition(result);
  const editorButton = $("opac-to-editor");
  editorButton.hidden = !result.ruleset;
  if (result.ruleset) {
    editorButton.onclick = () => {
      const body = result.ruleset!.json;
      state.ruleDraft = {
        dimension: body.dimension,
        sourceLevel: body.structure.source_level,
        conditionAttributes: body.structure.condition_attributes,
        targetLevel: body.structure.target_level,
        targetAttributes: body.structure.target_attributes,
        rules: body.data.map((d) => ({ condition: d.condition, target: d.target })),
      };
      ($("rule-source") as HTMLSelectElement).value =
        `${body.dimension}:${body.structure.source_level}`;
      ($("rule-target-level") as HTMLInputElement).value =
        body.structure.target_level;
      ($("rule-target-attr") as HTMLInputElement).value =
        body.structure.target_attributes[0];
      renderDraftRules();
      selectTab("rules");
      void dryRun();
    };
  }
}

async function runMca(): Promise<void> {
  if (!state.cube) return;
  const before = state.cube;
  const result = await guard(() => client.mineMca({ cube: before.id }));
  if (!result) return;
  $("mca-output").innerHTML =
    `<p>eigenvalues: ${result.eigenvalues.map(String).join(", ")}</p>` +
    renderHeatmap(before, "initial order", result.homogeneity_before) +
    renderHeatmap(result.arranged_cube, "test-value order",
                  result.homogeneity_after) +
    `<button type="button" id="mca-adopt">Adopt arranged cube</button>`;
  $("mca-adopt").addEventListener("click", () => {
    setCube(result.arranged_cube);
    selectTab("pivot");
  });
}

async function runRulesMining(): Promise<void> {
  const antecedent = Array.from(
    ($("meta-antecedent") as HTMLSelectElement).selectedOptions,
  ).map((o) => {
    const [dimension, level] = o.value.split(":");
    return { dimension, level };
  });
  const consequent = Array.from(
    ($("meta-consequent") as HTMLSelectElement).selectedOptions,
  ).map((o) => {
    const [dimension, level] = o.value.split(":");
    return { dimension, level };
  });
  const result = await guard(() =>
    client.mineRules({
      meta: {
        antecedent,
        consequent,
        measure: ($("meta-measure") as HTMLSelectElement).value,
        aggregate: ($("meta-aggregate") as HTMLSelectElement).value,
      },
      min_support: Number(($("min-support") as HTMLInputElement).value),
      min_confidence: Number(($("min-confidence") as HTMLInputElement).value),
    }),
  );
  if (result) {
    $("rules-output").innerHTML = renderRulesTable(result);
  }
}

// ---------------------------------------------------------------------------
// Tabs and boot

function selectTab(name: string): void {
  for (const tab of document.querySelectorAll<HTMLElement>(".tab")) {
    tab.hidden = tab.id !== `tab-${name}`;
  }
  for (const btn of document.querySelectorAll<HTMLElement>("nav button")) {
    btn.classList.toggle("active", btn.dataset.tab === name);
  }
}

export async function boot(): Promise<void> {
  for (const btn of document.querySelectorAll<HTMLElement>("nav button")) {
    btn.addEventListener("click", () => selectTab(btn.dataset.tab!));
  }
  toolbarHandlers();
  $("rule-source").addEventListener("change", () => {
    refreshConditionAttrs();
    void dryRun();
  });
  $("btn-add-rule").addEventListener("click", addDataRule);
  $("btn-validate").addEventListener("click", () => void dryRun());
  $("btn-apply").addEventListener("click", () => void applyRules());
  $("btn-opac").addEventListener("click", () => void runOpac());
  $("btn-mca").addEventListener("click", () => void runMca());
  $("btn-mine-rules").addEventListener("click", () => void runRulesMining());
  for (const sel of ["mine-opac", "mine-mca", "mine-rules"]) {
    $(`show-${sel}`).addEventListener("click", () => {
      for (const panel of ["opac", "mca", "rules"]) {
        $(`panel-${panel}`).hidden = `show-mine-${panel}` !== `show-${sel}`;
      }
    });
  }
  renderDraftRules();
  selectTab("pivot");
  await refreshModel();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void boot();
}
