/** Thin typed client over the session service's JSON API. */

import type {
  BlocksPayload,
  EstimatesPayload,
  ServiceError,
  SessionSummary,
  TestResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly payload: ServiceError,
  ) {
    super(`${payload.error}: ${payload.detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  const body = await resp.json();
  if (!resp.ok) {
    throw new ApiError(resp.status, body as ServiceError);
  }
  return body as T;
}

export class SessionApi {
  constructor(private readonly base: string = "") {}

  listSessions(): Promise<{ sessions: SessionSummary[] }> {
    return request(`${this.base}/sessions`);
  }

  getSession(id: string): Promise<SessionSummary> {
    return request(`${this.base}/sessions/${id}`);
  }

  getGroups(id: string, rho: number): Promise<BlocksPayload> {
    return request(`${this.base}/sessions/${id}/groups?rho=${rho}`);
  }

  getEstimates(id: string): Promise<EstimatesPayload> {
    return request(`${this.base}/sessions/${id}/estimates`);
  }

  testGroup(
    id: string,
    tested: string[],
    opts: { rho: number; tau: number; alpha: number; force?: boolean },
  ): Promise<TestResponse> {
    return request(`${this.base}/sessions/${id}/test`, {
      method: "POST",
      body: JSON.stringify({
        tested,
        rho: opts.rho,
        tau: opts.tau,
        alpha: opts.alpha,
        force: opts.force ?? false,
      }),
    });
  }
}
