/** Thin client for the session service's HTTP endpoints. */

import type {
  RunDetail,
  SessionSnapshot,
  SystemInfo,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

async function errorOf(response: Response): Promise<ApiError> {
  let detail = `${response.status} ${response.statusText}`;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") {
      detail = body.detail;
    }
  } catch {
    // Non-JSON error body; keep the status line.
  }
  return new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.base}${path}`, init);
    if (!response.ok) {
      throw await errorOf(response);
    }
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.json<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  listSystems(): Promise<SystemInfo[]> {
    return this.json<SystemInfo[]>("/api/systems");
  }

  createSession(systemTag: string): Promise<SessionSnapshot> {
    return this.post<SessionSnapshot>("/api/sessions", { system_tag: systemTag });
  }

  getSession(sessionId: string): Promise<SessionSnapshot> {
    return this.json<SessionSnapshot>(`/api/sessions/${sessionId}`);
  }

  ask(sessionId: string, question: string): Promise<SessionSnapshot> {
    return this.post<SessionSnapshot>(`/api/sessions/${sessionId}/ask`, {
      question,
    });
  }

  edit(
    sessionId: string,
    sourceId: string,
    newText: string,
  ): Promise<SessionSnapshot> {
    return this.post<SessionSnapshot>(`/api/sessions/${sessionId}/edit`, {
      source_id: sourceId,
      new_text: newText,
    });
  }

  reset(sessionId: string, sourceId: string): Promise<SessionSnapshot> {
    return this.post<SessionSnapshot>(`/api/sessions/${sessionId}/reset`, {
      source_id: sourceId,
    });
  }

  /** Start mining; the caller consumes the SSE body of the response. */
  async generate(
    sessionId: string,
    options: { oracleName?: string; safetyEnabled?: boolean } = {},
  ): Promise<Response> {
    const response = await this.fetchFn(
      `${this.base}/api/sessions/${sessionId}/generate`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          oracle_name: options.oracleName ?? null,
          safety_enabled: options.safetyEnabled ?? null,
        }),
      },
    );
    if (!response.ok) {
      throw await errorOf(response);
    }
    return response;
  }

  runDetail(sessionId: string): Promise<RunDetail> {
    return this.json<RunDetail>(`/api/sessions/${sessionId}/run`);
  }
}
