import { describe, expect, it } from "vitest";

import { emphasizedTokens, segmentText } from "../src/highlight.js";

describe("segmentText", () => {
  it("emphasizes case-insensitive whole-token matches", () => {
    const segments = segmentText("The Virus spreads; virus mutates.", ["virus"]);
    const emphasized = segments.filter((s) => s.emphasized).map((s) => s.text);
    expect(emphasized).toEqual(["Virus", "virus"]);
  });

  it("does not emphasize partial tokens", () => {
    const segments = segmentText("viruses and antivirus tools", ["virus"]);
    expect(segments.some((s) => s.emphasized)).toBe(false);
  });

  it("keeps separators and reassembles the original text", () => {
    const text = "aa, bb - cc (dd)";
    const segments = segmentText(text, ["bb", "dd"]);
    expect(segments.map((s) => s.text).join("")).toBe(text);
  });

  it("handles punctuation boundaries", () => {
    const segments = segmentText("spike-protein: virus,", ["virus", "spike"]);
    const emphasized = segments.filter((s) => s.emphasized).map((s) => s.text);
    expect(emphasized).toEqual(["spike", "virus"]);
  });

  it("returns no segments for empty text", () => {
    expect(segmentText("", ["x"])).toEqual([]);
  });

  it("emphasizes nothing when no terms are served", () => {
    expect(segmentText("plain text", []).some((s) => s.emphasized)).toBe(false);
  });
});

describe("emphasizedTokens", () => {
  it("is exactly the served terms that occur in the text", () => {
    const text = "Measles virus versus influenza virus studies";
    const terms = ["virus", "influenza", "absent"];
    expect(emphasizedTokens(text, terms)).toEqual(new Set(["virus", "influenza"]));
  });
});
