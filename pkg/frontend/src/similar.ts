/** Similar-historical-tweets panel shown when a results row is clicked. */

import { bridginessColor, textColorFor } from "./colors.js";
import { escapeHtml } from "./scoreTable.js";
import type { Neighbor } from "./types.js";

function formatDate(timestamp: number): string {
  return new Date(timestamp * 1000).toISOString().slice(0, 10);
}

export function renderNeighbors(neighbors: Neighbor[]): string {
  const rows = neighbors
    .map((n) => {
      const bg = bridginessColor(n.bridginess);
      return (
        "<tr>" +
        `<td class="text">${escapeHtml(n.text)}</td>` +
        `<td>${escapeHtml(n.outlet)}</td>` +
        `<td>${formatDate(n.timestamp)}</td>` +
        `<td>${n.retweets}</td>` +
        `<td style="background:${bg};color:${textColorFor(bg)}" title="${n.bridginess}">` +
        `${n.bridginess.toFixed(2)}</td>` +
        "</tr>"
      );
    })
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>tweet</th><th>outlet</th><th>date</th><th>retweets</th><th>bridginess</th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}
