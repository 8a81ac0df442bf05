// Rule drafting: the editor keeps a structured draft, converts it to the
// API's rule body, and renders validation findings inline. The apply path
// is exactly Client.applyRules(draftToBody(draft)) — the same body shape
// the CLI accepts as rules JSON, which is what the parity test pins down.

import type { ConditionTerm, Finding, RuleBody } from "./types.js";
import { escapeHtml } from "./pivot.js";

export interface DataRuleDraft {
  condition: ConditionTerm[];
  target: Record<string, string>;
}

export interface RuleDraft {
  dimension?: string;
  sourceLevel: string;
  conditionAttributes: string[];
  targetLevel: string;
  targetAttributes: string[];
  rules: DataRuleDraft[];
}

export function emptyDraft(): RuleDraft {
  return {
    sourceLevel: "",
    conditionAttributes: [],
    targetLevel: "",
    targetAttributes: [],
    rules: [],
  };
}

export function draftToBody(draft: RuleDraft): RuleBody {
  const body: RuleBody = {
    structure: {
      source_level: draft.sourceLevel,
      condition_attributes: draft.conditionAttributes,
      target_level: draft.targetLevel,
      target_attributes: draft.targetAttributes,
    },
    data: draft.rules.map((rule) => ({
      condition: rule.condition,
      target: rule.target,
    })),
  };
  if (draft.dimension) body.dimension = draft.dimension;
  return body;
}

/** Parse a comma-separated member list typed into a condition field. */
export function parseValueList(text: string): string[] {
  return text
    .split(",")
    .map((v) => v.trim())
    .filter((v) => v.length > 0);
}

function describeTerm(term: ConditionTerm): string {
  if (term.op === "=") return `${term.attr} = '${term.value ?? ""}'`;
  const values = (term.values ?? []).map((v) => `'${v}'`).join(", ");
  return `${term.attr} ${term.op === "in" ? "in" : "not in"} {${values}}`;
}

export function describeRule(rule: DataRuleDraft): string {
  const condition = rule.condition.map(describeTerm).join(" and ");
  const target = Object.entries(rule.target)
    .map(([attr, value]) => `${attr}={${value}}`)
    .join(" and ");
  return `if ${condition} then ${target}`;
}

export function renderFindings(findings: Finding[]): string {
  if (findings.length === 0) {
    return '<p class="findings ok">No findings — the rule set is applicable.</p>';
  }
  const items = findings
    .map(
      (f) =>
        `<li class="finding ${escapeHtml(f.severity)}">` +
        `<code>${escapeHtml(f.kind)}</code> ${escapeHtml(f.message)}</li>`,
    )
    .join("");
  return `<ul class="findings">${items}</ul>`;
}

/** Group preview shown next to a clean dry run: which source members land
 * in which new instance, straight from the apply/dry-run change summary or
 * recomputed by the server on apply. */
export function renderGroups(groups: Record<string, string[]>): string {
  const rows = Object.entries(groups)
    .map(
      ([name, members]) =>
        `<tr><th scope="row">${escapeHtml(name)}</th>` +
        `<td>${members.map(escapeHtml).join(", ")}</td></tr>`,
    )
    .join("");
  return `<table class="groups"><thead><tr><th>new instance</th>` +
    `<th>drill-down</th></tr></thead><tbody>${rows}</tbody></table>`;
}
