// Pivot rendering: pure functions from a cube payload to HTML strings.
// At most two axes are displayed (rows x columns); any further axis must be
// sliced away first and the table says so. Cell text is the payload value
// rendered verbatim (String(value)) — the client never computes numbers.
// Empty cells (absent from the payload) are visually distinct from cells
// whose value is 0.

import type { CellInfo, CubeRendering } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Verbatim display of a payload number. */
export function displayNumber(value: number | null): string {
  return value === null ? "—" : String(value);
}

export interface PivotModel {
  rowAxis: { dimension: string; level: string; members: string[] } | null;
  colAxis: { dimension: string; level: string; members: string[] } | null;
  extraAxes: string[];
  cellAt(row: string | null, col: string | null): CellInfo | undefined;
}

export function pivotModel(cube: CubeRendering): PivotModel {
  const [rowAxis = null, colAxis = null] = cube.axes;
  const extraAxes = cube.axes.slice(2).map((ax) => ax.dimension);
  const byKey = new Map<string, CellInfo>();
  for (const cell of cube.cells) {
    byKey.set(cell.coordinate.join("\u0000"), cell);
  }
  const cellAt = (row: string | null, col: string | null) => {
    const coordinate = [];
    if (rowAxis && row !== null) coordinate.push(row);
    if (colAxis && col !== null) coordinate.push(col);
    return byKey.get(coordinate.join("\u0000"));
  };
  return { rowAxis, colAxis, extraAxes, cellAt };
}

function cellTd(cell: CellInfo | undefined): string {
  if (cell === undefined) {
    return '<td class="cell empty" title="no contributing facts">·</td>';
  }
  const detail = `sum=${cell.sum} count=${cell.count} min=${cell.min} max=${cell.max}`;
  return `<td class="cell full" title="${escapeHtml(detail)}">` +
    `${escapeHtml(displayNumber(cell.value))}</td>`;
}

export function renderPivot(cube: CubeRendering): string {
  const model = pivotModel(cube);
  const stale = cube.stale
    ? '<p class="stale-warning">This cube predates the last hierarchy change — rebuild it.</p>'
    : "";
  if (model.extraAxes.length > 0) {
    return (
      stale +
      `<p class="pivot-note">Cube has ${cube.axes.length} axes; slice ` +
      `${model.extraAxes.map(escapeHtml).join(", ")} to a single member to pivot.</p>`
    );
  }
  if (!model.rowAxis) {
    const cell = model.cellAt(null, null);
    return (
      stale +
      `<table class="pivot"><tbody><tr>` +
      `<th>${escapeHtml(cube.aggregate)}(${escapeHtml(cube.measure)})</th>` +
      cellTd(cell) +
      `</tr></tbody></table>`
    );
  }

  const row = model.rowAxis;
  const headerLabel = `${row.dimension} : ${row.level}`;
  let html = stale + '<table class="pivot"><thead><tr>';
  html += `<th class="corner">${escapeHtml(headerLabel)}</th>`;
  if (model.colAxis) {
    for (const member of model.colAxis.members) {
      html += `<th scope="col">${escapeHtml(member)}</th>`;
    }
  } else {
    html += `<th scope="col">${escapeHtml(cube.aggregate)}(${escapeHtml(cube.measure)})</th>`;
  }
  html += "</tr></thead><tbody>";
  for (const member of row.members) {
    html += `<tr><th scope="row">${escapeHtml(member)}</th>`;
    if (model.colAxis) {
      for (const col of model.colAxis.members) {
        html += cellTd(model.cellAt(member, col));
      }
    } else {
      html += cellTd(model.cellAt(member, null));
    }
    html += "</tr>";
  }
  html += "</tbody></table>";
  return html;
}

/** Summary line under the pivot: axes, filters, measure. */
export function renderCubeSummary(cube: CubeRendering): string {
  const axes = cube.axes
    .map((ax) => `${ax.dimension}:${ax.level} (${ax.members.length})`)
    .join(" × ") || "grand total";
  const filters = cube.filters
    .map((f) => `${f.dimension}:${f.level} ∈ {${f.members.join(", ")}}`)
    .join("; ");
  const parts = [
    `<span class="cube-id">${escapeHtml(cube.id)}</span>`,
    escapeHtml(`${cube.aggregate}(${cube.measure})`),
    escapeHtml(axes),
  ];
  if (filters) parts.push(`filters: ${escapeHtml(filters)}`);
  parts.push(`${cube.cell_total} non-empty cells`);
  return `<p class="cube-summary">${parts.join(" · ")}</p>`;
}
