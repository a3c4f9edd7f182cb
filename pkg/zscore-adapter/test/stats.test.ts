import { describe, expect, it } from "vitest";

import { STD_FLOOR, fitStats, rowEnergy, scoreWindows } from "../src/stats";

describe("fitStats", () => {
  it("computes per-feature mean and population std", () => {
    // Feature 0: values 1, 3 -> mean 2, deviations +-1, std 1.
    // Feature 1: values 2, 6 -> mean 4, deviations +-2, std 2.
    const stats = fitStats([
      [1, 2],
      [3, 6],
    ]);
    expect(stats.mean).toEqual([2, 4]);
    expect(stats.std).toEqual([1, 2]);
  });

  it("floors the std of a constant feature", () => {
    const stats = fitStats([
      [7, 1],
      [7, 3],
    ]);
    expect(stats.std[0]).toBe(STD_FLOOR);
    expect(stats.std[1]).toBe(1);
  });

  it("rejects empty and ragged input", () => {
    expect(() => fitStats([])).toThrow("empty");
    expect(() => fitStats([[1, 2], [3]])).toThrow("ragged");
  });
});

describe("rowEnergy", () => {
  it("sums squared z-scores across features", () => {
    const stats = { mean: [0, 0], std: [1, 1] };
    expect(rowEnergy([3, 4], stats)).toBe(25);
  });
});

describe("scoreWindows", () => {
  it("scores a test span equal to the train mean as all zeros", () => {
    const stats = fitStats([[0], [2]]);
    const test = [[1], [1], [1], [1], [1], [1]];
    expect(scoreWindows(test, stats, 3)).toEqual([0, 0, 0, 0]);
  });

  it("spreads a single spike over every window that contains it", () => {
    // Train values -1, 1 give mean 0 and std 1, so the spike row has
    // energy 10^2 and the flat rows energy 0. With w = 2 the spike sits
    // in windows ending at rows 2 and 3 and nowhere else.
    const stats = fitStats([[-1], [1]]);
    const test = [[0], [0], [10], [0], [0]];
    expect(scoreWindows(test, stats, 2)).toEqual([0, 100, 100, 0]);
  });

  it("emits T - w + 1 scores", () => {
    const stats = fitStats([[0], [2]]);
    const test = Array.from({ length: 40 }, (_, i) => [Math.sin(i)]);
    for (const w of [1, 8, 33, 40]) {
      expect(scoreWindows(test, stats, w)).toHaveLength(40 - w + 1);
    }
  });

  it("rejects a window length outside the test span", () => {
    const stats = fitStats([[0], [2]]);
    const test = [[1], [2], [3]];
    expect(() => scoreWindows(test, stats, 0)).toThrow("positive integer");
    expect(() => scoreWindows(test, stats, 2.5)).toThrow("positive integer");
    expect(() => scoreWindows(test, stats, 4)).toThrow("exceeds test length");
  });
});
