/** Review flow state machine, independent of the DOM.
 *
 * One document on screen at a time; one in-flight judgment at a time
 * (repeat key presses are ignored until the ack lands). The controller
 * never reorders or re-scores anything - the service decides what to
 * show next.
 */

import { ApiClient, ConflictError } from "./api.js";
import type { Counters, DocumentPayload, Label } from "./types.js";

export type Screen =
  | { kind: "loading" }
  | { kind: "document"; doc: DocumentPayload }
  | { kind: "complete" }
  | { kind: "error"; message: string };

export interface View {
  show(screen: Screen): void;
  updateCounters(counters: Counters): void;
  notify(message: string): void;
}

export class ReviewController {
  private current: DocumentPayload | null = null;
  private inFlight = false;

  constructor(
    private readonly api: ApiClient,
    private readonly topicId: number,
    private readonly assessor: string,
    private readonly view: View,
  ) {}

  get currentDocument(): DocumentPayload | null {
    return this.current;
  }

  async start(): Promise<void> {
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.current = null;
    this.view.show({ kind: "loading" });
    let doc: DocumentPayload | null;
    try {
      doc = await this.api.nextDocument(this.topicId, this.assessor);
    } catch (error) {
      this.view.show({ kind: "error", message: String(error) });
      return;
    }
    if (doc === null) {
      this.view.show({ kind: "complete" });
      return;
    }
    this.current = doc;
    this.view.show({ kind: "document", doc });
    this.view.updateCounters(doc);
  }

  /** Submit a judgment for the document on screen, then advance. */
  async judge(label: Label): Promise<void> {
    if (this.current === null || this.inFlight) return;
    const doc = this.current;
    this.inFlight = true;
    try {
      const ack = await this.api.submitJudgment(
        this.topicId,
        doc.doc_id,
        this.assessor,
        label,
      );
      this.view.updateCounters(ack);
    } catch (error) {
      if (error instanceof ConflictError) {
        // Lease lost (expired or taken over): the judgment cannot apply;
        // move on to a document that is actually ours.
        this.view.notify(`Document ${doc.doc_id} was claimed elsewhere; fetching the next one.`);
        this.inFlight = false;
        await this.loadNext();
        return;
      }
      // Network or server failure: keep the document on screen so the
      // judgment is not silently dropped; the assessor can retry.
      this.view.notify(`Could not submit judgment (${String(error)}); please retry.`);
      this.inFlight = false;
      return;
    }
    this.inFlight = false;
    await this.loadNext();
  }

  /** Keyboard binding: keys 0/1/2 map to the three relevance labels. */
  async handleKey(key: string): Promise<void> {
    if (key === "0" || key === "1" || key === "2") {
      await this.judge(Number(key) as Label);
    }
  }
}
