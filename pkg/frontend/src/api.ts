/** Thin client for the session service /v1 endpoints. */

import type { CreateSessionBody, PassView, RunPassBody, SessionSnapshot } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

declare global {
  interface Window {
    FEASLAB_API_BASE?: string;
  }
}

export function apiBase(): string {
  const override = typeof window !== "undefined" ? window.FEASLAB_API_BASE : undefined;
  return (override ?? "") + "/v1";
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(apiBase() + path, init);
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body.code ?? "error", body.message ?? "request failed");
  }
  return body as T;
}

export function createSession(body: CreateSessionBody): Promise<{ id: string }> {
  return request("/sessions", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function runPass(id: string, body: RunPassBody): Promise<PassView> {
  return request(`/sessions/${id}/passes`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function getSession(id: string): Promise<SessionSnapshot> {
  return request(`/sessions/${id}`);
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Poll the snapshot until the session leaves running_pass (passes execute
 * synchronously server-side, so this mostly resolves in one read). */
export async function pollUntilIdle(id: string, intervalMs = 500): Promise<SessionSnapshot> {
  for (;;) {
    const snapshot = await getSession(id);
    if (snapshot.status !== "running_pass") return snapshot;
    await sleep(intervalMs);
  }
}
