/** Browser wiring: connects the pure renderers to the DOM and the API.
 *
 * Scoring runs on explicit submit (never per keystroke); edits after a
 * submit only mark the table stale until the next submission.
 */

import { ApiClient, ApiError, SIMILAR_K } from "./api.js";
import { renderHighlightedText, renderWordPopup } from "./highlight.js";
import { renderScoreTable } from "./scoreTable.js";
import { renderNeighbors } from "./similar.js";
import {
  applyError,
  applyNeighbors,
  applyScores,
  applyTranscript,
  initialState,
  nonEmptyLines,
  selectRow,
  setDraft,
  type EditorState,
} from "./state.js";
import { parseTranscriptJsonl, renderChart, renderTranscriptTable } from "./transcript.js";
import type { ExplainWord } from "./types.js";

const api = new ApiClient();
let state: EditorState = initialState();
let explainWords: ExplainWord[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function update(next: EditorState): void {
  state = next;
  el<HTMLDivElement>("score-table").innerHTML = renderScoreTable(state);
  el<HTMLDivElement>("similar-panel").innerHTML = state.neighbors
    ? renderNeighbors(state.neighbors)
    : "";
  if (state.transcript) {
    el<HTMLDivElement>("transcript-chart").innerHTML = renderChart(state.transcript);
    el<HTMLDivElement>("transcript-table").innerHTML = renderTranscriptTable(state.transcript);
  }
  el<HTMLDivElement>("highlighted").innerHTML = renderHighlightedText(explainWords);
}

function toast(message: string): void {
  const node = el<HTMLDivElement>("toast");
  node.textContent = message;
  node.classList.add("visible");
  setTimeout(() => node.classList.remove("visible"), 4000);
}

async function submit(): Promise<void> {
  const lines = nonEmptyLines(state.draft);
  if (lines.length === 0) {
    return;
  }
  try {
    const response = await api.score(lines);
    if (response) {
      update(applyScores(state, response.scores));
      void explainFirstLine(lines[0]);
    }
  } catch (err) {
    update(applyError(state, err instanceof ApiError ? err.message : "scoring failed"));
  }
}

async function explainFirstLine(text: string): Promise<void> {
  try {
    const response = await api.explain(text);
    if (response) {
      explainWords = response.words;
      update(state);
    }
  } catch {
    // highlighting is best-effort; keep the last good words
  }
}

async function onRowClick(row: number): Promise<void> {
  const entry = state.rows[row];
  if (!entry) {
    return;
  }
  update(selectRow(state, row));
  try {
    const response = await api.similar(entry.text, SIMILAR_K);
    if (response) {
      update(applyNeighbors(state, response.neighbors));
    }
  } catch (err) {
    toast(err instanceof ApiError ? err.message : "similar-tweet lookup failed");
  }
}

async function onTranscriptFile(file: File): Promise<void> {
  try {
    const segments = parseTranscriptJsonl(await file.text());
    const response = await api.transcript(segments);
    if (response) {
      update(applyTranscript(state, response.segments));
      if (response.warnings.length > 0) {
        toast(`${response.warnings.length} segment(s) skipped`);
      }
    }
  } catch (err) {
    toast(err instanceof ApiError ? err.message : "transcript analysis failed");
  }
}

export function init(): void {
  const draft = el<HTMLTextAreaElement>("draft");
  draft.addEventListener("input", () => update(setDraft(state, draft.value)));
  el<HTMLButtonElement>("submit").addEventListener("click", () => void submit());

  el<HTMLDivElement>("score-table").addEventListener("click", (event) => {
    const row = (event.target as HTMLElement).closest("tr[data-row]");
    if (row) {
      void onRowClick(Number(row.getAttribute("data-row")));
    }
  });

  el<HTMLDivElement>("highlighted").addEventListener("mouseover", (event) => {
    const span = (event.target as HTMLElement).closest("span[data-word]");
    const popup = el<HTMLDivElement>("popup");
    if (!span) {
      popup.classList.remove("visible");
      return;
    }
    const word = explainWords[Number(span.getAttribute("data-word"))];
    if (word) {
      popup.innerHTML = renderWordPopup(word);
      const rect = (span as HTMLElement).getBoundingClientRect();
      popup.style.left = `${rect.left + window.scrollX}px`;
      popup.style.top = `${rect.bottom + window.scrollY + 4}px`;
      popup.classList.add("visible");
    }
  });

  el<HTMLInputElement>("transcript-file").addEventListener("change", (event) => {
    const input = event.target as HTMLInputElement;
    if (input.files && input.files[0]) {
      void onTranscriptFile(input.files[0]);
    }
  });

  update(state);
}

if (typeof document !== "undefined" && document.getElementById("draft")) {
  init();
}
