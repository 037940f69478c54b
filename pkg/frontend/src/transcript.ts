/** Transcript explorer: score-vs-segment chart data and rendering. */

import { alignmentColor, bridginessColor, textColorFor } from "./colors.js";
import { escapeHtml } from "./scoreTable.js";
import type { ScoredSegment, TranscriptSegmentIn } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export interface ChartSeries {
  bridginess: Point[];
  alignment: Point[];
}

/** One point per segment per series; x is the segment index. */
export function chartSeries(segments: ScoredSegment[]): ChartSeries {
  return {
    bridginess: segments.map((s) => ({ x: s.index, y: s.bridginess })),
    alignment: segments.map((s) => ({ x: s.index, y: s.alignment })),
  };
}

export interface ChartGeometry {
  width: number;
  height: number;
  yMin: number;
  yMax: number;
}

export function polylinePoints(points: Point[], geom: ChartGeometry): string {
  if (points.length === 0) {
    return "";
  }
  const xMax = Math.max(1, ...points.map((p) => p.x));
  const span = geom.yMax - geom.yMin || 1;
  return points
    .map((p) => {
      const px = (p.x / xMax) * geom.width;
      const py = geom.height - ((p.y - geom.yMin) / span) * geom.height;
      return `${px.toFixed(1)},${py.toFixed(1)}`;
    })
    .join(" ");
}

export function renderChart(segments: ScoredSegment[]): string {
  const geom: ChartGeometry = { width: 640, height: 160, yMin: -2, yMax: 2 };
  const series = chartSeries(segments);
  return (
    `<svg viewBox="0 0 ${geom.width} ${geom.height}" class="chart">` +
    `<polyline fill="none" stroke="#1b5e20" points="${polylinePoints(series.bridginess, geom)}"/>` +
    `<polyline fill="none" stroke="#c62828" points="${polylinePoints(series.alignment, geom)}"/>` +
    "</svg>"
  );
}

export function renderTranscriptTable(segments: ScoredSegment[]): string {
  const rows = segments
    .map((s) => {
      const bg = bridginessColor(s.bridginess);
      const ag = alignmentColor(s.alignment);
      return (
        "<tr>" +
        `<td>${s.index}</td>` +
        `<td>${escapeHtml(s.speaker)}</td>` +
        `<td class="text">${escapeHtml(s.text)}</td>` +
        `<td style="background:${bg};color:${textColorFor(bg)}">${s.bridginess.toFixed(2)}</td>` +
        `<td style="background:${ag};color:${textColorFor(ag)}">${s.alignment.toFixed(2)}</td>` +
        "</tr>"
      );
    })
    .join("");
  return (
    "<table><thead><tr>" +
    "<th>#</th><th>speaker</th><th>segment</th><th>bridginess</th><th>alignment</th>" +
    `</tr></thead><tbody>${rows}</tbody></table>`
  );
}

/** Parse a JSON-lines transcript file ({speaker, text} per line). */
export function parseTranscriptJsonl(content: string): TranscriptSegmentIn[] {
  const segments: TranscriptSegmentIn[] = [];
  for (const line of content.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) {
      continue;
    }
    const parsed = JSON.parse(trimmed);
    segments.push({ speaker: String(parsed.speaker ?? ""), text: String(parsed.text ?? "") });
  }
  return segments;
}
