/** Feasibility-matrix rendering: systems as rows, thresholds as columns
 * grouped by constraint, one tab per completed pass. Every cell comes
 * straight from the server snapshot. */

import type { PassView, SessionSnapshot } from "./types.js";

const DECISION_CLASS: Record<string, string> = {
  feasible: "cell-feasible",
  infeasible: "cell-infeasible",
  pending: "cell-pending",
};

const DECISION_LABEL: Record<string, string> = {
  feasible: "F",
  infeasible: "I",
  pending: "?",
};

export function renderMatrix(container: HTMLElement, pass: PassView): void {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "matrix";

  const constraintRow = document.createElement("tr");
  constraintRow.appendChild(document.createElement("th"));
  pass.thresholds.forEach((row, ell) => {
    if (row.length === 0) return;
    const th = document.createElement("th");
    th.colSpan = row.length;
    th.textContent = `constraint ${ell + 1}`;
    constraintRow.appendChild(th);
  });
  table.appendChild(constraintRow);

  const headerRow = document.createElement("tr");
  const corner = document.createElement("th");
  corner.textContent = "system";
  headerRow.appendChild(corner);
  pass.thresholds.forEach((row) => {
    for (const h of row) {
      const th = document.createElement("th");
      th.textContent = `h=${h}`;
      headerRow.appendChild(th);
    }
  });
  table.appendChild(headerRow);

  pass.decisions.forEach((systemRows, i) => {
    const tr = document.createElement("tr");
    const label = document.createElement("th");
    label.textContent = String(i + 1);
    tr.appendChild(label);
    systemRows.forEach((row, ell) => {
      row.forEach((decision, m) => {
        const td = document.createElement("td");
        td.className = DECISION_CLASS[decision] ?? "cell-unknown";
        td.textContent = DECISION_LABEL[decision] ?? "?";
        td.dataset.system = String(i);
        td.dataset.constraint = String(ell);
        td.dataset.threshold = pass.thresholds[ell][m];
        td.dataset.decision = decision;
        tr.appendChild(td);
      });
    });
    table.appendChild(tr);
  });
  container.appendChild(table);
}

export function renderPassTabs(
  container: HTMLElement,
  snapshot: SessionSnapshot,
  selected: number,
  onSelect: (passIndex: number) => void,
): void {
  container.textContent = "";
  snapshot.history.forEach((pass) => {
    const button = document.createElement("button");
    button.type = "button";
    button.className = pass.pass_index === selected ? "tab tab-active" : "tab";
    button.dataset.pass = String(pass.pass_index);
    const tag = pass.heuristic ? ` (${pass.heuristic})` : "";
    button.textContent = `pass ${pass.pass_index}${tag}`;
    button.addEventListener("click", () => onSelect(pass.pass_index));
    container.appendChild(button);
  });
}

export function renderConstraintMeta(container: HTMLElement, snapshot: SessionSnapshot): void {
  container.textContent = "";
  const list = document.createElement("ul");
  list.className = "constraint-meta";
  for (let ell = 0; ell < snapshot.spec.s; ell++) {
    const item = document.createElement("li");
    item.textContent =
      `constraint ${ell + 1}: theta=${snapshot.spec.theta[ell]}, ` +
      `H=${snapshot.halfwidths[ell]}, beta=${Number(snapshot.budgets[ell]).toPrecision(4)}`;
    list.appendChild(item);
  }
  container.appendChild(list);
}

/** Cells as plain data, for equality checks against a snapshot. */
export function matrixCells(
  container: HTMLElement,
): { system: number; constraint: number; threshold: string; decision: string }[] {
  return Array.from(container.querySelectorAll("td")).map((td) => ({
    system: Number(td.dataset.system),
    constraint: Number(td.dataset.constraint),
    threshold: td.dataset.threshold ?? "",
    decision: td.dataset.decision ?? "",
  }));
}
