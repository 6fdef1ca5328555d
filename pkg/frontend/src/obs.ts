/** Observation counters: per pass and cumulative per system, with totals.
 * Values are echoed from the server snapshot, never recomputed. */

import type { SessionSnapshot } from "./types.js";

export function renderObsDashboard(container: HTMLElement, snapshot: SessionSnapshot): void {
  container.textContent = "";
  const table = document.createElement("table");
  table.className = "obs";

  const header = document.createElement("tr");
  const corner = document.createElement("th");
  corner.textContent = "system";
  header.appendChild(corner);
  for (const pass of snapshot.history) {
    const th = document.createElement("th");
    th.textContent = `pass ${pass.pass_index}`;
    header.appendChild(th);
  }
  const cumulative = document.createElement("th");
  cumulative.textContent = "cumulative";
  header.appendChild(cumulative);
  table.appendChild(header);

  for (let i = 0; i < snapshot.spec.k; i++) {
    const tr = document.createElement("tr");
    const label = document.createElement("th");
    label.textContent = String(i + 1);
    tr.appendChild(label);
    for (const pass of snapshot.history) {
      const td = document.createElement("td");
      td.dataset.pass = String(pass.pass_index);
      td.dataset.system = String(i);
      td.textContent = String(pass.obs_new[i]);
      tr.appendChild(td);
    }
    const total = document.createElement("td");
    total.className = "obs-cumulative";
    total.dataset.system = String(i);
    total.textContent = String(snapshot.obs_cumulative[i]);
    tr.appendChild(total);
    table.appendChild(tr);
  }

  const totals = document.createElement("tr");
  totals.className = "obs-totals";
  const label = document.createElement("th");
  label.textContent = "total";
  totals.appendChild(label);
  for (const pass of snapshot.history) {
    const td = document.createElement("td");
    td.dataset.pass = String(pass.pass_index);
    td.textContent = String(pass.obs_new.reduce((a, b) => a + b, 0));
    totals.appendChild(td);
  }
  const grand = document.createElement("td");
  grand.className = "obs-grand-total";
  grand.textContent = String(snapshot.obs_cumulative.reduce((a, b) => a + b, 0));
  totals.appendChild(grand);
  table.appendChild(totals);

  container.appendChild(table);
}
