/** Pure HTML builders; the DOM layer only assigns their output. */

import { segmentText } from "./highlight.js";
import type { Counters, DocumentPayload } from "./types.js";

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function highlightHtml(text: string, terms: string[]): string {
  return segmentText(text, terms)
    .map((segment) =>
      segment.emphasized
        ? `<mark>${escapeHtml(segment.text)}</mark>`
        : escapeHtml(segment.text),
    )
    .join("");
}

export function renderDocument(doc: DocumentPayload): string {
  const terms = doc.highlight_terms;
  const field = (label: string, value: string) =>
    `<div class="field"><span class="field-name">${label}</span> ` +
    `<span class="field-value">${highlightHtml(value, terms)}</span></div>`;
  return [
    `<article class="doc" data-doc-id="${escapeHtml(doc.doc_id)}">`,
    `<h2 class="doc-title">${highlightHtml(doc.title, terms)}</h2>`,
    field("authors", doc.authors),
    field("year", doc.year),
    field("publisher", doc.publisher),
    `<p class="doc-abstract">${highlightHtml(doc.abstract, terms)}</p>`,
    `</article>`,
  ].join("\n");
}

export function renderCounters(counters: Counters): string {
  const budget =
    counters.budget_remaining === null ? "" : ` · budget left ${counters.budget_remaining}`;
  return (
    `relevant ${counters.m} · not relevant ${counters.n} · ` +
    `assessed ${counters.assessed_count}${budget}`
  );
}

export function renderStopBanner(): string {
  return `<div class="stop-banner">Stopping rule satisfied - you can stop reviewing this topic.</div>`;
}

export function renderComplete(): string {
  return `<div class="complete">Topic complete - no documents left to review.</div>`;
}

export function renderError(message: string): string {
  return `<div class="error">Something went wrong: ${escapeHtml(message)}<br/>` +
    `<button id="retry">Retry</button></div>`;
}
