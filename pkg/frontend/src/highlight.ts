/** Word highlighting and the hover popup with corpus statistics. */

import { highlightColor } from "./colors.js";
import { escapeHtml } from "./scoreTable.js";
import type { ExplainWord } from "./types.js";

export function renderHighlightedText(words: ExplainWord[]): string {
  return words
    .map((w, i) => {
      const tint = highlightColor(w.side, w.intensity);
      return (
        `<span class="hl" data-word="${i}" style="background:${tint}">` +
        escapeHtml(w.word) +
        "</span>"
      );
    })
    .join(" ");
}

/** Popup body for one hovered word; "no data" for unseen words. */
export function renderWordPopup(word: ExplainWord): string {
  if (word.stats === null) {
    return `<div class="popup"><strong>${escapeHtml(word.word)}</strong><p>no data</p></div>`;
  }
  const outletRows = Object.entries(word.stats.outlet_counts)
    .map(([outlet, count]) => `<tr><td>${escapeHtml(outlet)}</td><td>${count}</td></tr>`)
    .join("");
  return (
    `<div class="popup"><strong>${escapeHtml(word.word)}</strong>` +
    "<table>" +
    `<tr><td>p(word | left)</td><td>${word.stats.p_left.toFixed(6)}</td></tr>` +
    `<tr><td>p(word | right)</td><td>${word.stats.p_right.toFixed(6)}</td></tr>` +
    `<tr><td>left/right ratio</td><td>${word.stats.ratio.toFixed(3)}</td></tr>` +
    outletRows +
    "</table></div>"
  );
}
