/** Key events to UI actions, as data.
 *
 * The whole keyboard layer is this one pure function, so "ranking is
 * achievable by keyboard alone" is a table the tests can read back. The
 * DOM layer owns focus; actions here say what should happen to the focused
 * card or the screen, never to a specific element.
 */

import type { Phase } from "./api.js";

export type UiAction =
  | { kind: "focus-next" }
  | { kind: "focus-prev" }
  | { kind: "rank-focused" }
  | { kind: "unrank-focused" }
  | { kind: "move-earlier" }
  | { kind: "move-later" }
  | { kind: "pick-focused" }
  | { kind: "submit" }
  | { kind: "none" };

export interface KeyContext {
  phase: Phase;
  /** Which card group holds focus: the unranked pool or the ranked tray. */
  zone: "cards" | "tray";
}

export function keyToAction(
  context: KeyContext,
  key: string,
  shiftKey = false,
): UiAction {
  if (key === "s" || key === "S") {
    return { kind: "submit" };
  }
  if (shiftKey && context.phase === "rank" && context.zone === "tray") {
    if (key === "ArrowUp" || key === "ArrowLeft") {
      return { kind: "move-earlier" };
    }
    if (key === "ArrowDown" || key === "ArrowRight") {
      return { kind: "move-later" };
    }
  }
  if (key === "ArrowRight" || key === "ArrowDown") {
    return { kind: "focus-next" };
  }
  if (key === "ArrowLeft" || key === "ArrowUp") {
    return { kind: "focus-prev" };
  }
  if (key === "Enter" || key === " ") {
    if (context.phase === "select") {
      return { kind: "pick-focused" };
    }
    return context.zone === "tray" ? { kind: "unrank-focused" } : { kind: "rank-focused" };
  }
  if ((key === "Backspace" || key === "Delete") && context.zone === "tray") {
    return { kind: "unrank-focused" };
  }
  return { kind: "none" };
}
