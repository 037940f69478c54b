/** Thin typed client over the scoring service.
 *
 * At most one reply per endpoint kind is ever applied: each request
 * bumps that kind's sequence number and a reply landing after a newer
 * request resolves to null so stale data never reaches the UI.
 */

import type {
  ExplainResponse,
  ScoreResponse,
  SimilarResponse,
  TranscriptResponse,
  TranscriptSegmentIn,
} from "./types.js";

export type EndpointKind = "score" | "explain" | "similar" | "transcript";

export const SIMILAR_K = 10;

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private seq: Record<EndpointKind, number> = {
    score: 0,
    explain: 0,
    similar: 0,
    transcript: 0,
  };

  constructor(
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
    private base = "",
  ) {}

  private async post<T>(kind: EndpointKind, body: unknown): Promise<T | null> {
    const ticket = ++this.seq[kind];
    const response = await this.fetchFn(`${this.base}/${kind}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (ticket !== this.seq[kind]) {
      return null; // a newer request superseded this reply
    }
    if (!response.ok) {
      let message = `${kind} failed with status ${response.status}`;
      try {
        const payload = await response.json();
        if (payload && typeof payload.error === "string") {
          message = payload.error;
        }
      } catch {
        // keep the status message
      }
      throw new ApiError(response.status, message);
    }
    return (await response.json()) as T;
  }

  score(texts: string[]): Promise<ScoreResponse | null> {
    return this.post<ScoreResponse>("score", { texts });
  }

  explain(text: string): Promise<ExplainResponse | null> {
    return this.post<ExplainResponse>("explain", { text });
  }

  similar(text: string, k: number = SIMILAR_K): Promise<SimilarResponse | null> {
    return this.post<SimilarResponse>("similar", { text, k });
  }

  transcript(segments: TranscriptSegmentIn[]): Promise<TranscriptResponse | null> {
    return this.post<TranscriptResponse>("transcript", { segments });
  }
}
