/** Replay of the refiner's edit list over the raw transcript tokens.
 *
 * Edit spans are sequential patch coordinates: each span indexes the token
 * stream as it stands after all earlier edits have been applied, so the
 * list must be replayed in order to find where edits landed in the final
 * text.
 */

import type { EditSpan } from "./api.js";

export interface HeardToken {
  text: string;
  edit: EditSpan | null;
}

function words(text: string): string[] {
  return text.split(/\s+/).filter((w) => w.length > 0);
}

export function replayEdits(rawText: string, edits: readonly EditSpan[]): HeardToken[] {
  const tokens: HeardToken[] = words(rawText).map((text) => ({ text, edit: null }));
  for (const edit of edits) {
    const [start, end] = edit.span;
    if (start < 0 || end < start || end > tokens.length) {
      throw new Error(`edit span ${start}..${end} out of range`);
    }
    const slice = tokens
      .slice(start, end)
      .map((t) => t.text)
      .join(" ");
    if (slice !== edit.original) {
      throw new Error(`edit original ${JSON.stringify(edit.original)} does not match ${JSON.stringify(slice)}`);
    }
    const replacement: HeardToken[] = words(edit.replacement).map((text) => ({ text, edit }));
    tokens.splice(start, end - start, ...replacement);
  }
  return tokens;
}

/** Final refined text implied by the edit list; must equal the server's. */
export function replayedText(rawText: string, edits: readonly EditSpan[]): string {
  return replayEdits(rawText, edits)
    .map((t) => t.text)
    .join(" ");
}
