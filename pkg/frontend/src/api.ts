import type { DocumentPayload, JudgmentAck, Label, TopicSummary } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Judgment rejected because another assessor holds the lease. */
export class ConflictError extends Error {}

/** Any other non-OK response from the service. */
export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function detail(response: Response): Promise<string> {
  try {
    const body = await response.json();
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async listTopics(): Promise<TopicSummary[]> {
    const response = await this.fetchImpl(`${this.baseUrl}/topics`);
    if (!response.ok) throw new ApiError(await detail(response), response.status);
    return response.json();
  }

  /** Next leased document for this assessor; null when the topic is done. */
  async nextDocument(topicId: number, assessor: string): Promise<DocumentPayload | null> {
    const url = `${this.baseUrl}/topics/${topicId}/next?assessor=${encodeURIComponent(assessor)}`;
    const response = await this.fetchImpl(url);
    if (response.status === 204) return null;
    if (!response.ok) throw new ApiError(await detail(response), response.status);
    return response.json();
  }

  async submitJudgment(
    topicId: number,
    docId: string,
    assessor: string,
    label: Label,
  ): Promise<JudgmentAck> {
    const response = await this.fetchImpl(`${this.baseUrl}/topics/${topicId}/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ doc_id: docId, assessor_id: assessor, label }),
    });
    if (response.status === 409) throw new ConflictError(await detail(response));
    if (!response.ok) throw new ApiError(await detail(response), response.status);
    return response.json();
  }
}
