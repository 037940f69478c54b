/** Wire types mirroring the scoring service's JSON contract verbatim. */

export interface ScoreEntry {
  text: string;
  bridginess: number;
  alignment: number;
  model_hash: string;
}

export interface ScoreResponse {
  scores: ScoreEntry[];
}

export interface WordStatsPayload {
  p_left: number;
  p_right: number;
  ratio: number;
  outlet_counts: Record<string, number>;
}

export interface ExplainWord {
  word: string;
  side: "left" | "right" | "neutral";
  intensity: number;
  stats: WordStatsPayload | null;
}

export interface ExplainResponse {
  words: ExplainWord[];
}

export interface Neighbor {
  tweet_id: string;
  text: string;
  outlet: string;
  timestamp: number;
  retweets: number;
  bridginess: number;
  similarity: number;
}

export interface SimilarResponse {
  neighbors: Neighbor[];
}

export interface TranscriptSegmentIn {
  speaker: string;
  text: string;
}

export interface ScoredSegment {
  index: number;
  speaker: string;
  text: string;
  bridginess: number;
  alignment: number;
}

export interface TranscriptResponse {
  segments: ScoredSegment[];
  warnings: string[];
}
