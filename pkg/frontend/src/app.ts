/** Console wiring: create a session, run passes, render everything from
 * GET /sessions/{id}. The server is the single source of truth; a refresh
 * mid-session reproduces the grid exactly. */

import { createSession, getSession, pollUntilIdle, runPass } from "./api.js";
import { matrixCells, renderConstraintMeta, renderMatrix, renderPassTabs } from "./matrix.js";
import { renderObsDashboard } from "./obs.js";
import { composeNextPass, parseThresholdInput, testedKeys } from "./thresholds.js";
import type { SessionSnapshot } from "./types.js";

interface ConsoleState {
  sessionId: string | null;
  snapshot: SessionSnapshot | null;
  selectedPass: number;
}

export const state: ConsoleState = { sessionId: null, snapshot: null, selectedPass: 1 };

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function setMessage(text: string, isError = false): void {
  const box = el<HTMLElement>("message");
  box.textContent = text;
  box.className = isError ? "message error" : "message";
}

export function renderSnapshot(snapshot: SessionSnapshot): void {
  state.snapshot = snapshot;
  if (state.selectedPass > snapshot.history.length) {
    state.selectedPass = Math.max(1, snapshot.history.length);
  }
  el<HTMLElement>("session-id").textContent = snapshot.id;
  el<HTMLElement>("session-status").textContent = snapshot.status;
  renderConstraintMeta(el("constraint-meta"), snapshot);
  renderPassTabs(el("pass-tabs"), snapshot, state.selectedPass, (passIndex) => {
    state.selectedPass = passIndex;
    renderSnapshot(snapshot);
  });
  const matrixBox = el<HTMLElement>("matrix");
  if (snapshot.history.length === 0) {
    matrixBox.textContent = "no passes run yet";
  } else {
    renderMatrix(matrixBox, snapshot.history[state.selectedPass - 1]);
  }
  renderObsDashboard(el("obs"), snapshot);
  const composer = el<HTMLElement>("composer");
  composer.style.display = snapshot.history.length > 0 ? "block" : "none";
  if (snapshot.history.length > 0) {
    buildComposerInputs(snapshot);
  }
}

export async function refresh(): Promise<void> {
  if (!state.sessionId) return;
  renderSnapshot(await getSession(state.sessionId));
}

function parseMatrixField(text: string): number[][] {
  const rows = text
    .trim()
    .split(/\n+/)
    .map((line) => line.split(",").map((token) => Number(token.trim())))
    .filter((row) => row.length > 0 && !(row.length === 1 && Number.isNaN(row[0])));
  if (rows.length === 0) throw new Error("the probability matrix is empty");
  const width = rows[0].length;
  for (const row of rows) {
    if (row.length !== width || row.some((x) => Number.isNaN(x) || !(x > 0 && x < 1))) {
      throw new Error("every row needs the same count of probabilities in (0, 1)");
    }
  }
  return rows;
}

export async function handleCreate(): Promise<void> {
  try {
    const p = parseMatrixField(el<HTMLTextAreaElement>("p-matrix").value);
    const s = p[0].length;
    const alpha = Number(el<HTMLInputElement>("alpha").value);
    const theta = el<HTMLInputElement>("theta").value.split(",").map((t) => Number(t.trim()));
    if (theta.length !== s) throw new Error(`need ${s} theta values`);
    const planInputs: string[][] = [];
    const planText = el<HTMLTextAreaElement>("plan1").value.trim().split(/\n+/);
    for (let ell = 0; ell < s; ell++) {
      const parsed = parseThresholdInput(planText[ell] ?? "");
      if (!parsed.ok) throw new Error(`constraint ${ell + 1}: ${parsed.error}`);
      planInputs.push(parsed.values);
    }
    const seed = Number(el<HTMLInputElement>("seed").value || "0");
    const created = await createSession({
      spec: { alpha, theta },
      source: { kind: "synthetic", p },
      plan: { thresholds: planInputs },
      seed,
    });
    state.sessionId = created.id;
    state.selectedPass = 1;
    setMessage(`session ${created.id} created; run pass 1 when ready`);
    await refresh();
  } catch (err) {
    setMessage(err instanceof Error ? err.message : String(err), true);
  }
}

export async function handleRunFirstPass(): Promise<void> {
  if (!state.sessionId) return;
  try {
    setMessage("running pass 1 ...");
    await runPass(state.sessionId, {});
    const snapshot = await pollUntilIdle(state.sessionId);
    state.selectedPass = snapshot.history.length;
    renderSnapshot(snapshot);
    setMessage("pass 1 complete");
  } catch (err) {
    setMessage(err instanceof Error ? err.message : String(err), true);
  }
}

export async function handleRunNextPass(): Promise<void> {
  const snapshot = state.snapshot;
  if (!state.sessionId || !snapshot) return;
  const inputs: string[] = [];
  for (let ell = 0; ell < snapshot.spec.s; ell++) {
    inputs.push(el<HTMLInputElement>(`next-thresholds-${ell}`).value);
  }
  const heuristic = el<HTMLSelectElement>("heuristic").value;
  const composed = composeNextPass(inputs, heuristic, testedKeys(snapshot.history));
  if (!composed.ok) {
    setMessage(composed.error, true);
    return;
  }
  if (composed.duplicates.length > 0) {
    setMessage(
      `already tested (the stored decision will be reused): ${composed.duplicates.join("; ")}`,
    );
  }
  try {
    setMessage(`running pass ${snapshot.history.length + 1} (${heuristic}) ...`);
    await runPass(state.sessionId, composed.body);
    const fresh = await pollUntilIdle(state.sessionId);
    state.selectedPass = fresh.history.length;
    renderSnapshot(fresh);
    setMessage(`pass ${fresh.history.length} complete`);
  } catch (err) {
    setMessage(err instanceof Error ? err.message : String(err), true);
  }
}

/** Build the per-constraint threshold inputs for the next-pass composer. */
export function buildComposerInputs(snapshot: SessionSnapshot): void {
  const holder = el<HTMLElement>("composer-inputs");
  holder.textContent = "";
  for (let ell = 0; ell < snapshot.spec.s; ell++) {
    if (document.getElementById(`next-thresholds-${ell}`)) continue;
    const label = document.createElement("label");
    label.textContent = `constraint ${ell + 1} thresholds `;
    const input = document.createElement("input");
    input.type = "text";
    input.id = `next-thresholds-${ell}`;
    input.placeholder = "0.75, 0.8, 0.85  or  0.75:0.85:0.05";
    label.appendChild(input);
    holder.appendChild(label);
  }
}

export function wire(): void {
  el<HTMLButtonElement>("create").addEventListener("click", () => void handleCreate());
  el<HTMLButtonElement>("run-pass1").addEventListener("click", () => void handleRunFirstPass());
  el<HTMLButtonElement>("run-next").addEventListener("click", () => void handleRunNextPass());
  el<HTMLButtonElement>("refresh").addEventListener("click", () => void refresh());
}

export { matrixCells };

if (typeof document !== "undefined" && document.getElementById("create")) {
  wire();
}
