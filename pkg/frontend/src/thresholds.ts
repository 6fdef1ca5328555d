/** Threshold input parsing and next-pass composition.
 *
 * Accepts comma-separated decimals plus a range helper `start:stop:step`
 * (inclusive of stop when it lands on the grid), e.g. "0.75:0.85:0.05"
 * means 0.75, 0.8, 0.85. All arithmetic runs on scaled integers so the
 * emitted strings are exact decimals. The server remains the authority;
 * this is first-line validation only.
 */

import type { RunPassBody } from "./types.js";

export interface ParseOk {
  ok: true;
  values: string[];
}

export interface ParseError {
  ok: false;
  error: string;
}

export type ParseResult = ParseOk | ParseError;

const DECIMAL = /^(?:0?\.\d+|0|1(?:\.0*)?)$/;

function decimalPlaces(text: string): number {
  const dot = text.indexOf(".");
  return dot === -1 ? 0 : text.length - dot - 1;
}

/** Scaled-integer representation: value = digits / 10^places. */
function toScaled(text: string, places: number): number {
  const dot = text.indexOf(".");
  const whole = dot === -1 ? text : text.slice(0, dot);
  const frac = dot === -1 ? "" : text.slice(dot + 1);
  const padded = frac.padEnd(places, "0");
  return Number(whole) * 10 ** places + (padded === "" ? 0 : Number(padded));
}

function fromScaled(scaled: number, places: number): string {
  if (places === 0) return String(scaled);
  const raw = String(scaled).padStart(places + 1, "0");
  const whole = raw.slice(0, raw.length - places);
  let frac = raw.slice(raw.length - places);
  frac = frac.replace(/0+$/, "");
  return frac === "" ? whole : `${whole}.${frac}`;
}

function expandRange(spec: string): ParseResult {
  const parts = spec.split(":").map((part) => part.trim());
  if (parts.length !== 3) {
    return { ok: false, error: `range needs start:stop:step, got "${spec}"` };
  }
  for (const part of parts) {
    if (!DECIMAL.test(part)) {
      return { ok: false, error: `"${part}" is not a decimal in [0, 1]` };
    }
  }
  const places = Math.max(...parts.map(decimalPlaces));
  const [start, stop, step] = parts.map((part) => toScaled(part, places));
  if (step <= 0) {
    return { ok: false, error: "range step must be positive" };
  }
  if (stop < start) {
    return { ok: false, error: "range stop must not precede start" };
  }
  const values: string[] = [];
  for (let v = start; v <= stop; v += step) {
    values.push(fromScaled(v, places));
  }
  return { ok: true, values };
}

/** One constraint's input field -> ordered threshold strings (may be empty:
 * the constraint is then skipped this pass). */
export function parseThresholdInput(text: string): ParseResult {
  const trimmed = text.trim();
  if (trimmed === "") return { ok: true, values: [] };
  const values: string[] = [];
  for (const piece of trimmed.split(",")) {
    const token = piece.trim();
    if (token === "") continue;
    if (token.includes(":")) {
      const range = expandRange(token);
      if (!range.ok) return range;
      values.push(...range.values);
    } else {
      if (!DECIMAL.test(token)) {
        return { ok: false, error: `"${token}" is not a decimal in [0, 1]` };
      }
      values.push(token);
    }
  }
  for (const value of values) {
    const x = Number(value);
    if (!(x > 0 && x < 1)) {
      return { ok: false, error: `threshold ${value} must lie strictly in (0, 1)` };
    }
  }
  for (let i = 1; i < values.length; i++) {
    if (Number(values[i]) <= Number(values[i - 1])) {
      return {
        ok: false,
        error: `thresholds must be strictly increasing (${values[i - 1]} then ${values[i]})`,
      };
    }
  }
  return { ok: true, values };
}

export interface ComposeOk {
  ok: true;
  body: RunPassBody;
  duplicates: string[];
}

export type ComposeResult = ComposeOk | ParseError;

/** Build the POST body for the next pass from per-constraint inputs.
 * `tested` holds "constraint:threshold" keys already decided in earlier
 * passes; duplicates are allowed (the server recycles the stored decision)
 * but surfaced as a warning. */
export function composeNextPass(
  inputs: string[],
  heuristic: string,
  tested: Set<string>,
): ComposeResult {
  const rows: string[][] = [];
  const duplicates: string[] = [];
  for (let ell = 0; ell < inputs.length; ell++) {
    const parsed = parseThresholdInput(inputs[ell]);
    if (!parsed.ok) {
      return { ok: false, error: `constraint ${ell + 1}: ${parsed.error}` };
    }
    for (const value of parsed.values) {
      if (tested.has(`${ell}:${Number(value)}`)) {
        duplicates.push(`constraint ${ell + 1} threshold ${value}`);
      }
    }
    rows.push(parsed.values);
  }
  if (rows.every((row) => row.length === 0)) {
    return { ok: false, error: "at least one constraint needs thresholds" };
  }
  if (!["b", "n", "bn"].includes(heuristic)) {
    return { ok: false, error: `unknown heuristic "${heuristic}"` };
  }
  return { ok: true, body: { plan: { thresholds: rows }, heuristic }, duplicates };
}

/** Keys of already-tested thresholds, for duplicate warnings. */
export function testedKeys(history: { thresholds: string[][] }[]): Set<string> {
  const keys = new Set<string>();
  for (const pass of history) {
    pass.thresholds.forEach((row, ell) => {
      for (const h of row) keys.add(`${ell}:${Number(h)}`);
    });
  }
  return keys;
}
