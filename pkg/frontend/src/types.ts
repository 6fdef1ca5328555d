/** Mirrors of the session-service /v1 payloads. The console renders only
 * server state; nothing here is computed client-side. */

export type DecisionText = "feasible" | "infeasible" | "pending";

export interface EnvelopeFraction {
  num: number;
  den: number;
}

export interface SystemStateView {
  r: number;
  sum_y: number[];
  v_lb: EnvelopeFraction[];
  v_ub: EnvelopeFraction[];
  last: string[];
  seeds: {
    y: { seed: string; stream_id: string };
    u: { seed: string; stream_id: string };
  };
}

export interface PassView {
  pass_index: number;
  heuristic: string | null;
  thresholds: string[][];
  /** decisions[system][constraint][m] */
  decisions: DecisionText[][][];
  stages: number[][][];
  decided_by: number[][][];
  obs_new: number[];
  r_after: number[];
  capped: boolean;
}

export interface SpecView {
  k: number;
  s: number;
  alpha: number;
  theta: number[];
  sampling: string;
  split_scheme: string;
  expect_more_passes: boolean;
  obs_cap: number | null;
}

export interface SessionSnapshot {
  id: string;
  status: "idle" | "running_pass" | "complete";
  spec: SpecView;
  halfwidths: number[];
  budgets: string[];
  states: SystemStateView[];
  history: PassView[];
  obs_cumulative: number[];
  truth_classes?: string[][][][];
  first_plan?: string[][] | null;
}

export interface CreateSessionBody {
  spec: {
    alpha: number;
    theta: number[];
    sampling?: string;
    expect_more_passes?: boolean;
  };
  source: { kind: "synthetic"; p: number[][]; coupling?: string };
  plan: { thresholds: string[][] };
  seed?: number;
  truth?: number[][];
}

export interface RunPassBody {
  plan?: { thresholds: string[][] };
  heuristic?: string;
}
