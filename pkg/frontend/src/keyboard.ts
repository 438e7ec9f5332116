/** Keyboard-first review flow: annotators working through hundreds of items
 * should never need the mouse.
 *
 *   c            verdict: correct
 *   x            verdict: incorrect
 *   1..9         pick replacement label (implies incorrect)
 *   Enter        submit when the form is valid
 *   j / ArrowDown, k / ArrowUp   move between pending items
 */

export type KeyAction =
  | { kind: "verdict-correct" }
  | { kind: "verdict-incorrect" }
  | { kind: "pick-label"; label: number }
  | { kind: "submit" }
  | { kind: "move"; delta: 1 | -1 };

export function keyToAction(key: string, schemaSize: number): KeyAction | null {
  switch (key) {
    case "c":
      return { kind: "verdict-correct" };
    case "x":
      return { kind: "verdict-incorrect" };
    case "Enter":
      return { kind: "submit" };
    case "j":
    case "ArrowDown":
      return { kind: "move", delta: 1 };
    case "k":
    case "ArrowUp":
      return { kind: "move", delta: -1 };
    default: {
      if (/^[1-9]$/.test(key)) {
        const label = Number(key) - 1;
        if (label < schemaSize) return { kind: "pick-label", label };
      }
      return null;
    }
  }
}

/** True for events that should never be treated as shortcuts (typing, menus). */
export function shouldIgnore(event: KeyboardEvent): boolean {
  if (event.ctrlKey || event.metaKey || event.altKey) return true;
  const target = event.target as { tagName?: string } | null;
  const tag = target?.tagName ?? "";
  return tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT";
}
