/** Editor state and its pure transitions.
 *
 * Score rows correspond one-to-one to the non-empty draft lines of the
 * last submission; edits after that mark the table stale until the next
 * submit. Nothing here touches the DOM or the network.
 */

import type { Neighbor, ScoreEntry, ScoredSegment } from "./types.js";

export interface EditorState {
  draft: string;
  scoredDraft: string | null;
  rows: ScoreEntry[];
  selectedRow: number | null;
  neighbors: Neighbor[] | null;
  transcript: ScoredSegment[] | null;
  error: string | null;
}

export function initialState(): EditorState {
  return {
    draft: "",
    scoredDraft: null,
    rows: [],
    selectedRow: null,
    neighbors: null,
    transcript: null,
    error: null,
  };
}

export function nonEmptyLines(draft: string): string[] {
  return draft.split("\n").filter((line) => line.trim().length > 0);
}

export function isStale(state: EditorState): boolean {
  return state.scoredDraft !== null && state.draft !== state.scoredDraft;
}

export function setDraft(state: EditorState, draft: string): EditorState {
  return { ...state, draft };
}

export function applyScores(state: EditorState, rows: ScoreEntry[]): EditorState {
  return {
    ...state,
    scoredDraft: state.draft,
    rows,
    selectedRow: null,
    neighbors: null,
    error: null,
  };
}

/** A service failure shows inline but never clears existing results. */
export function applyError(state: EditorState, message: string): EditorState {
  return { ...state, error: message };
}

export function selectRow(state: EditorState, row: number | null): EditorState {
  return { ...state, selectedRow: row, neighbors: null };
}

export function applyNeighbors(state: EditorState, neighbors: Neighbor[]): EditorState {
  return { ...state, neighbors, error: null };
}

export function applyTranscript(state: EditorState, segments: ScoredSegment[]): EditorState {
  return { ...state, transcript: segments, error: null };
}
