import { describe, expect, it } from "vitest";

import { normalizeWeights, Store } from "../src/state";
import type { Vec4 } from "../src/types";
import { recommendationFor } from "./fixtures";

function sum(v: Vec4): number {
  return v.reduce((a, b) => a + b, 0);
}

describe("normalizeWeights", () => {
  it("always sums to 1", () => {
    const cases: Vec4[] = [
      [1, 0, 0, 0],
      [0.2, 0.2, 0.2, 0.2],
      [5, 1, 3, 7],
      [0, 0, 0, 0],
      [-1, -2, 0, 0],
    ];
    for (const raw of cases) {
      expect(sum(normalizeWeights(raw))).toBeCloseTo(1, 12);
    }
  });

  it("preserves proportions of positive weights", () => {
    expect(normalizeWeights([2, 2, 4, 0])).toEqual([0.25, 0.25, 0.5, 0]);
  });

  it("falls back to uniform when nothing is positive", () => {
    expect(normalizeWeights([0, 0, 0, 0])).toEqual([0.25, 0.25, 0.25, 0.25]);
  });
});

describe("Store", () => {
  it("displayed weights sum to 1 after any interaction sequence", () => {
    const store = new Store();
    const values = [0.9, 0, 0.33, 1, 0.001, 0.5];
    for (let i = 0; i < 60; i++) {
      store.setWeight(i % 4, values[i % values.length]);
      expect(sum(store.displayedWeights())).toBeCloseTo(1, 12);
    }
  });

  it("ignores out-of-range and negative slider updates", () => {
    const store = new Store();
    const before = store.snapshot().rawWeights;
    store.setWeight(7, 0.5);
    store.setWeight(0, -3);
    store.setWeight(0, NaN);
    expect(store.snapshot().rawWeights).toEqual(before);
  });

  it("tracks soft-constraint toggles as a sorted unique set", () => {
    const store = new Store();
    store.toggleSoftConstraint(17, true);
    store.toggleSoftConstraint(16, true);
    store.toggleSoftConstraint(17, true);
    expect(store.snapshot().enabledSoftConstraints).toEqual([16, 17]);
    store.toggleSoftConstraint(16, false);
    expect(store.snapshot().enabledSoftConstraints).toEqual([17]);
  });

  it("rejects degenerate projection axes", () => {
    const store = new Store();
    store.setAxes(1, 1);
    expect(store.snapshot().axes).toEqual([0, 2]);
    store.setAxes(1, 3);
    expect(store.snapshot().axes).toEqual([1, 3]);
  });

  it("a service error keeps the previous recommendation", () => {
    const store = new Store();
    store.applyRecommendation(recommendationFor(1));
    store.applyServiceError("connection refused");
    const state = store.snapshot();
    expect(state.serviceError).toBe("connection refused");
    expect(state.recommendation?.record).toBe(1);
  });

  it("notifies subscribers with fresh snapshots", () => {
    const store = new Store();
    const seen: number[] = [];
    store.subscribe((s) => seen.push(s.rawWeights[0]));
    store.setWeight(0, 0.7);
    store.setWeight(0, 0.1);
    expect(seen).toEqual([0.7, 0.1]);
  });
});
