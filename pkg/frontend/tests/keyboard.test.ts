import { describe, expect, it } from "vitest";

import { keyToAction } from "../src/keyboard.js";
import type { KeyContext } from "../src/keyboard.js";

const RANK_CARDS: KeyContext = { phase: "rank", zone: "cards" };
const RANK_TRAY: KeyContext = { phase: "rank", zone: "tray" };
const SELECT: KeyContext = { phase: "select", zone: "cards" };

describe("keyToAction", () => {
  it("moves focus with arrows in every context", () => {
    for (const context of [RANK_CARDS, RANK_TRAY, SELECT]) {
      expect(keyToAction(context, "ArrowRight")).toEqual({ kind: "focus-next" });
      expect(keyToAction(context, "ArrowDown")).toEqual({ kind: "focus-next" });
      expect(keyToAction(context, "ArrowLeft")).toEqual({ kind: "focus-prev" });
      expect(keyToAction(context, "ArrowUp")).toEqual({ kind: "focus-prev" });
    }
  });

  it("ranks from the pool and unranks from the tray with enter or space", () => {
    for (const key of ["Enter", " "]) {
      expect(keyToAction(RANK_CARDS, key)).toEqual({ kind: "rank-focused" });
      expect(keyToAction(RANK_TRAY, key)).toEqual({ kind: "unrank-focused" });
    }
  });

  it("picks with enter or space on the select screen", () => {
    expect(keyToAction(SELECT, "Enter")).toEqual({ kind: "pick-focused" });
    expect(keyToAction(SELECT, " ")).toEqual({ kind: "pick-focused" });
  });

  it("removes a tray card with backspace or delete", () => {
    expect(keyToAction(RANK_TRAY, "Backspace")).toEqual({ kind: "unrank-focused" });
    expect(keyToAction(RANK_TRAY, "Delete")).toEqual({ kind: "unrank-focused" });
    expect(keyToAction(RANK_CARDS, "Backspace")).toEqual({ kind: "none" });
  });

  it("reorders the tray with shifted arrows, only there", () => {
    expect(keyToAction(RANK_TRAY, "ArrowUp", true)).toEqual({ kind: "move-earlier" });
    expect(keyToAction(RANK_TRAY, "ArrowLeft", true)).toEqual({ kind: "move-earlier" });
    expect(keyToAction(RANK_TRAY, "ArrowDown", true)).toEqual({ kind: "move-later" });
    expect(keyToAction(RANK_TRAY, "ArrowRight", true)).toEqual({ kind: "move-later" });
    expect(keyToAction(RANK_CARDS, "ArrowUp", true)).toEqual({ kind: "focus-prev" });
    expect(keyToAction(SELECT, "ArrowDown", true)).toEqual({ kind: "focus-next" });
  });

  it("submits with s from anywhere", () => {
    for (const context of [RANK_CARDS, RANK_TRAY, SELECT]) {
      expect(keyToAction(context, "s")).toEqual({ kind: "submit" });
      expect(keyToAction(context, "S")).toEqual({ kind: "submit" });
    }
  });

  it("leaves unrelated keys alone", () => {
    for (const key of ["a", "Escape", "Tab", "F5"]) {
      expect(keyToAction(RANK_CARDS, key)).toEqual({ kind: "none" });
    }
  });
});
