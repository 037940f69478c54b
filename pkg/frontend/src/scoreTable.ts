/** Results-table rendering: one row per scored line, color-graded cells. */

import { alignmentColor, bridginessColor, textColorFor } from "./colors.js";
import type { EditorState } from "./state.js";
import { isStale } from "./state.js";
import type { ScoreEntry } from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function scoreCell(value: number, background: string): string {
  const style = `background:${background};color:${textColorFor(background)}`;
  // two decimals shown, full precision in the tooltip
  return `<td class="score" style="${style}" title="${value}">${value.toFixed(2)}</td>`;
}

export function renderScoreRow(entry: ScoreEntry, index: number, selected: boolean): string {
  const classes = selected ? ' class="selected"' : "";
  return (
    `<tr data-row="${index}"${classes}>` +
    `<td class="text">${escapeHtml(entry.text)}</td>` +
    scoreCell(entry.bridginess, bridginessColor(entry.bridginess)) +
    scoreCell(entry.alignment, alignmentColor(entry.alignment)) +
    "</tr>"
  );
}

export function renderScoreTable(state: EditorState): string {
  const stale = isStale(state) ? ' class="stale"' : "";
  const rows = state.rows
    .map((entry, i) => renderScoreRow(entry, i, state.selectedRow === i))
    .join("");
  const errorRow = state.error
    ? `<tr class="error"><td colspan="3">${escapeHtml(state.error)}</td></tr>`
    : "";
  return (
    `<table${stale}>` +
    "<thead><tr><th>draft</th><th>bridginess</th><th>alignment</th></tr></thead>" +
    `<tbody>${rows}${errorRow}</tbody>` +
    "</table>"
  );
}
