/** Key-term highlighting: case-insensitive whole-token matching.
 *
 * Tokens are maximal alphanumeric runs, mirroring the service's
 * featurizer, so the emphasized words are exactly the ones the model
 * scored. The UI never invents or drops highlight terms.
 */

export interface TextSegment {
  text: string;
  emphasized: boolean;
}

const TOKEN_RE = /[\p{L}\p{N}]+/gu;

export function segmentText(text: string, terms: string[]): TextSegment[] {
  const wanted = new Set(terms.map((t) => t.toLowerCase()));
  const segments: TextSegment[] = [];
  let cursor = 0;
  for (const match of text.matchAll(TOKEN_RE)) {
    const start = match.index ?? 0;
    if (start > cursor) {
      segments.push({ text: text.slice(cursor, start), emphasized: false });
    }
    segments.push({
      text: match[0],
      emphasized: wanted.has(match[0].toLowerCase()),
    });
    cursor = start + match[0].length;
  }
  if (cursor < text.length) {
    segments.push({ text: text.slice(cursor), emphasized: false });
  }
  return segments;
}

/** The distinct lowercased tokens of `text` that would be emphasized. */
export function emphasizedTokens(text: string, terms: string[]): Set<string> {
  const out = new Set<string>();
  for (const segment of segmentText(text, terms)) {
    if (segment.emphasized) out.add(segment.text.toLowerCase());
  }
  return out;
}
