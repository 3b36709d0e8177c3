import { describe, expect, it } from "vitest";

import { mulberry32, shuffled } from "../src/shuffle.js";

const IDS = ["c01", "c02", "c03", "c04", "c05", "c06"];

describe("shuffled", () => {
  it("returns a permutation: same cards, nothing lost or duplicated", () => {
    for (let seed = 0; seed < 25; seed += 1) {
      const dealt = shuffled(IDS, seed);
      expect([...dealt].sort()).toEqual([...IDS].sort());
    }
  });

  it("is deterministic per seed and leaves the input alone", () => {
    const before = [...IDS];
    const first = shuffled(IDS, 7);
    const second = shuffled(IDS, 7);
    expect(first).toEqual(second);
    expect(IDS).toEqual(before);
  });

  it("actually shuffles: many seeds produce many orders", () => {
    const seen = new Set<string>();
    for (let seed = 0; seed < 25; seed += 1) {
      seen.add(shuffled(IDS, seed).join(","));
    }
    expect(seen.size).toBeGreaterThan(10);
    expect([...seen].some((order) => order !== IDS.join(","))).toBe(true);
  });

  it("handles empty and single-card batches", () => {
    expect(shuffled([], 1)).toEqual([]);
    expect(shuffled(["only"], 1)).toEqual(["only"]);
  });
});

describe("mulberry32", () => {
  it("emits floats in [0, 1) and repeats per seed", () => {
    const a = mulberry32(123);
    const b = mulberry32(123);
    for (let i = 0; i < 100; i += 1) {
      const value = a();
      expect(value).toBeGreaterThanOrEqual(0);
      expect(value).toBeLessThan(1);
      expect(b()).toBe(value);
    }
  });
});
