import type { DocumentPayload } from "../src/types.js";

export function makePayload(overrides: Partial<DocumentPayload> = {}): DocumentPayload {
  return {
    doc_id: "doc001",
    title: "Virus transmission dynamics",
    abstract: "We study virus spread in closed rooms.",
    authors: "A. Author; B. Writer",
    year: "2020",
    publisher: "Journal of Examples",
    highlight_terms: ["virus", "spread"],
    m: 3,
    n: 7,
    assessed_count: 10,
    budget_remaining: 290,
    stop_recommended: false,
    ...overrides,
  };
}

export function stripTags(html: string): string {
  return html.replace(/<[^>]+>/g, "");
}
