import { describe, expect, it } from "vitest";

import { formatValue } from "../src/format.js";

describe("formatValue", () => {
  // the same table the service formatting obeys
  const cases: [number, string][] = [
    [84.41, "84.41"],
    [85.7, "85.7"],
    [0.08, "0.08"],
    [6.6, "6.6"],
    [2.0, "2"],
    [-3.56, "-3.56"],
    [-1.29, "-1.29"],
    [0, "0"],
    [-0.001, "0"],
    [0.005, "0.01"],
    [2.675, "2.68"],
    [127.4999999402616, "127.5"],
    [-0.94, "-0.94"],
    [9.999, "10"],
    [-9.995, "-10"],
    [82.40000004204039, "82.4"],
    [2.5000000477053987, "2.5"],
  ];
  for (const [input, expected] of cases) {
    it(`${input} -> ${expected}`, () => {
      expect(formatValue(input)).toBe(expected);
    });
  }

  it("rejects non-finite input", () => {
    expect(() => formatValue(Number.NaN)).toThrow();
    expect(() => formatValue(Infinity)).toThrow();
  });
});
