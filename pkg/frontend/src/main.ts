/** DOM glue: binds the controller to the page served at /ui/. */

import { ApiClient } from "./api.js";
import { ReviewController, type Screen, type View } from "./controller.js";
import {
  renderComplete,
  renderCounters,
  renderDocument,
  renderError,
  renderStopBanner,
} from "./render.js";
import type { Counters } from "./types.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

class DomView implements View {
  constructor(
    private readonly doc: HTMLElement,
    private readonly counters: HTMLElement,
    private readonly banner: HTMLElement,
    private readonly notices: HTMLElement,
    private readonly onRetry: () => void,
  ) {}

  show(screen: Screen): void {
    switch (screen.kind) {
      case "loading":
        this.doc.innerHTML = `<div class="loading">Loading…</div>`;
        break;
      case "document":
        this.doc.innerHTML = renderDocument(screen.doc);
        break;
      case "complete":
        this.doc.innerHTML = renderComplete();
        break;
      case "error":
        this.doc.innerHTML = renderError(screen.message);
        document.getElementById("retry")?.addEventListener("click", this.onRetry);
        break;
    }
  }

  updateCounters(counters: Counters): void {
    this.counters.textContent = renderCounters(counters);
    this.banner.innerHTML = counters.stop_recommended ? renderStopBanner() : "";
  }

  notify(message: string): void {
    this.notices.textContent = message;
    window.setTimeout(() => {
      if (this.notices.textContent === message) this.notices.textContent = "";
    }, 4000);
  }
}

function mount(): void {
  const topicId = Number(param("topic", "1"));
  const assessor = param("assessor", "anonymous");
  const api = new ApiClient("..");

  const view = new DomView(
    document.getElementById("document")!,
    document.getElementById("counters")!,
    document.getElementById("banner")!,
    document.getElementById("notices")!,
    () => void controller.loadNext(),
  );
  const controller = new ReviewController(api, topicId, assessor, view);

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement) return;
    void controller.handleKey(event.key);
  });
  for (const button of document.querySelectorAll<HTMLButtonElement>("button[data-label]")) {
    button.addEventListener("click", () => {
      void controller.handleKey(button.dataset.label!);
    });
  }
  const heading = document.getElementById("topic-heading");
  if (heading) heading.textContent = `Topic ${topicId} — assessor ${assessor}`;

  void controller.start();
}

mount();
