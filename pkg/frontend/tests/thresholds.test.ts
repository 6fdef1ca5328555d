import { describe, expect, it } from "vitest";

import { composeNextPass, parseThresholdInput, testedKeys } from "../src/thresholds.js";

describe("parseThresholdInput", () => {
  it("parses a comma list", () => {
    const out = parseThresholdInput("0.75, 0.8, 0.85");
    expect(out).toEqual({ ok: true, values: ["0.75", "0.8", "0.85"] });
  });

  it("expands a range helper on the exact decimal grid", () => {
    const out = parseThresholdInput("0.01:0.09:0.02");
    expect(out).toEqual({ ok: true, values: ["0.01", "0.03", "0.05", "0.07", "0.09"] });
  });

  it("expands a dense second-pass grid without float drift", () => {
    const out = parseThresholdInput("0.02:0.24:0.01");
    expect(out.ok).toBe(true);
    if (out.ok) {
      expect(out.values).toHaveLength(23);
      expect(out.values[6]).toBe("0.08");
      expect(out.values[21]).toBe("0.23");
    }
  });

  it("mixes ranges and singletons", () => {
    const out = parseThresholdInput("0.1, 0.75:0.85:0.05");
    expect(out).toEqual({ ok: true, values: ["0.1", "0.75", "0.8", "0.85"] });
  });

  it("blocks decreasing input", () => {
    const out = parseThresholdInput("0.8, 0.75");
    expect(out.ok).toBe(false);
    if (!out.ok) expect(out.error).toMatch(/strictly increasing/);
  });

  it("blocks values outside (0, 1)", () => {
    expect(parseThresholdInput("0").ok).toBe(false);
    expect(parseThresholdInput("1").ok).toBe(false);
    expect(parseThresholdInput("abc").ok).toBe(false);
  });

  it("treats an empty field as an omitted constraint", () => {
    expect(parseThresholdInput("   ")).toEqual({ ok: true, values: [] });
  });
});

describe("composeNextPass", () => {
  it("builds the run_pass body", () => {
    const out = composeNextPass(["0.75, 0.8, 0.85", ""], "bn", new Set());
    expect(out.ok).toBe(true);
    if (out.ok) {
      expect(out.body).toEqual({
        plan: { thresholds: [["0.75", "0.8", "0.85"], []] },
        heuristic: "bn",
      });
      expect(out.duplicates).toEqual([]);
    }
  });

  it("warns about thresholds already tested", () => {
    const tested = testedKeys([{ thresholds: [["0.25", "0.5"], []] }]);
    const out = composeNextPass(["0.5, 0.75", ""], "b", tested);
    expect(out.ok).toBe(true);
    if (out.ok) {
      expect(out.duplicates).toEqual(["constraint 1 threshold 0.5"]);
    }
  });

  it("rejects an entirely empty pass", () => {
    const out = composeNextPass(["", ""], "bn", new Set());
    expect(out.ok).toBe(false);
  });

  it("rejects unknown heuristics", () => {
    const out = composeNextPass(["0.5"], "zz", new Set());
    expect(out.ok).toBe(false);
  });

  it("propagates per-constraint validation errors", () => {
    const out = composeNextPass(["0.5", "0.9, 0.2"], "bn", new Set());
    expect(out.ok).toBe(false);
    if (!out.ok) expect(out.error).toMatch(/constraint 2/);
  });
});
