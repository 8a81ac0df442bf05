// Mining panel rendering: dendrogram with a k cut, per-k quality table,
// before/after heatmaps with homogeneity scores, and the mined-rules table.
// Pure payload-to-HTML functions; numbers appear exactly as the API sent
// them (the server owns ordering and rounding semantics).

import type {
  CubeRendering,
  DendrogramNode,
  HomogeneityInfo,
  MinedRule,
  OpacResult,
  QualityRow,
  RulesMiningResult,
} from "./types.js";
import { displayNumber, escapeHtml } from "./pivot.js";

export function renderDendrogram(node: DendrogramNode): string {
  if (node.member !== undefined) {
    return `<li class="leaf">${escapeHtml(node.member)}</li>`;
  }
  const children = (node.children ?? []).map(renderDendrogram).join("");
  return (
    `<li class="merge"><span class="height">${displayNumber(node.height)}</span>` +
    `<ul>${children}</ul></li>`
  );
}

export function renderQualityTable(rows: QualityRow[], selectedK?: number): string {
  const body = rows
    .map((q) => {
      const cls = q.k === selectedK ? ' class="selected"' : "";
      return (
        `<tr${cls}><td>${q.k}</td><td>${displayNumber(q.within)}</td>` +
        `<td>${displayNumber(q.between)}</td><td>${displayNumber(q.ratio)}</td></tr>`
      );
    })
    .join("");
  return (
    '<table class="quality"><thead><tr><th>k</th><th>within</th>' +
    "<th>between</th><th>between/total</th></tr></thead>" +
    `<tbody>${body}</tbody></table>`
  );
}

export function renderPartition(result: OpacResult): string {
  if (!result.partition) return "";
  const rows = result.partition
    .map(
      (cluster, i) =>
        `<tr><th scope="row">cluster ${i + 1}</th>` +
        `<td>${cluster.map(escapeHtml).join(", ")}</td></tr>`,
    )
    .join("");
  return `<table class="partition"><tbody>${rows}</tbody></table>`;
}

/** Heatmap for a one- or two-axis cube; shade comes from the server-sent
 * cell values relative to the payload's own min/max (presentation only). */
export function renderHeatmap(cube: CubeRendering, caption: string,
                              score: HomogeneityInfo): string {
  const [rowAxis, colAxis] = cube.axes;
  if (!rowAxis) return "";
  const byKey = new Map(cube.cells.map((c) => [c.coordinate.join("\u0000"), c]));
  const values = cube.cells.map((c) => c.value);
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const shade = (v: number) =>
    hi === lo ? 0.6 : 0.25 + 0.6 * ((v - lo) / (hi - lo));

  let html = `<figure class="heatmap"><figcaption>${escapeHtml(caption)} — ` +
    `homogeneity <strong>${displayNumber(score.value)}</strong> ` +
    `(${score.full_cells}/${score.cells} full)</figcaption><table><tbody>`;
  const cols = colAxis ? colAxis.members : [null];
  for (const row of rowAxis.members) {
    html += `<tr><th scope="row">${escapeHtml(row)}</th>`;
    for (const col of cols) {
      const key = col === null ? row : `${row}\u0000${col}`;
      const cell = byKey.get(key);
      if (cell === undefined) {
        html += '<td class="empty"></td>';
      } else {
        html += `<td class="full" style="--w:${shade(cell.value).toFixed(3)}" ` +
          `title="${escapeHtml(displayNumber(cell.value))}"></td>`;
      }
    }
    html += "</tr>";
  }
  html += "</tbody></table></figure>";
  return html;
}

function itemsText(items: string[][]): string {
  return items.map(([d, , m]) => `${d}=${m}`).join(" & ");
}

export function renderRulesTable(result: RulesMiningResult): string {
  if (result.rules.length === 0) {
    return '<p class="rules-empty">No rule clears the thresholds.</p>';
  }
  const rows = result.rules
    .map(
      (r: MinedRule) =>
        "<tr>" +
        `<td>${escapeHtml(itemsText(r.antecedent))}</td>` +
        `<td>${escapeHtml(itemsText(r.consequent))}</td>` +
        `<td>${displayNumber(r.support)}</td>` +
        `<td>${displayNumber(r.confidence)}</td>` +
        `<td>${displayNumber(r.lift)}</td>` +
        `<td>${displayNumber(r.loevinger)}</td>` +
        "</tr>",
    )
    .join("");
  return (
    '<table class="mined-rules"><thead><tr><th>antecedent</th>' +
    "<th>consequent</th><th>support</th><th>confidence</th><th>lift</th>" +
    `<th>loevinger</th></tr></thead><tbody>${rows}</tbody></table>`
  );
}
