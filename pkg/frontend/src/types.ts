/** Wire types of the assessor service. */

export type Label = 0 | 1 | 2;

export interface Counters {
  m: number;
  n: number;
  assessed_count: number;
  budget_remaining: number | null;
  stop_recommended: boolean;
}

export interface DocumentPayload extends Counters {
  doc_id: string;
  title: string;
  abstract: string;
  authors: string;
  year: string;
  publisher: string;
  highlight_terms: string[];
}

export interface JudgmentAck extends Counters {
  doc_id: string;
  label: number;
  retrained: boolean;
}

export interface TopicSummary extends Counters {
  topic_id: number;
  query: string;
}
