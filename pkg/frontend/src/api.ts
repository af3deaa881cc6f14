/**
 * Client for the verification service HTTP API.
 *
 * Endpoints: POST /users/{id}/enroll {session, svc}; POST /users/{id}/verify
 * {svc}; GET /users/{id}; DELETE /users/{id}; GET /health. Service errors
 * carry a machine-readable code ({error, detail}) which is surfaced as
 * ApiError.code so flows can react (for example to NotTrained).
 */

export interface SessionCounts {
  have: number;
  quota: number;
}

export interface UserStatus {
  user_id: string;
  state: "collecting" | "trained";
  counts: { session1: SessionCounts; session2: SessionCounts };
  trained: boolean;
  model?: {
    dim: number;
    n_states: number;
    n_mixtures: number;
    iterations: number;
  };
}

export interface EnrollResponse {
  state: "collecting" | "trained";
  counts: { session1: SessionCounts; session2: SessionCounts };
}

export interface VerifyResult {
  score: number;
  threshold: number;
  decision: "accept" | "reject";
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    detail: string,
    public readonly status: number,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.base + path, init);
    } catch (err) {
      throw new ApiError("NetworkError", String(err), 0);
    }
    if (response.status === 204) {
      return undefined as T;
    }
    const text = await response.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = null;
    }
    if (!response.ok) {
      const record = (body ?? {}) as { error?: string; detail?: unknown };
      const code = record.error ?? `Http${response.status}`;
      const detail =
        typeof record.detail === "string" ? record.detail : text || response.statusText;
      throw new ApiError(code, detail, response.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  health(): Promise<{ status: string; default_threshold: number }> {
    return this.request("/health");
  }

  status(userId: string): Promise<UserStatus> {
    return this.request(`/users/${encodeURIComponent(userId)}`);
  }

  enroll(userId: string, session: 1 | 2, svc: string): Promise<EnrollResponse> {
    return this.post(`/users/${encodeURIComponent(userId)}/enroll`, { session, svc });
  }

  verify(userId: string, svc: string): Promise<VerifyResult> {
    return this.post(`/users/${encodeURIComponent(userId)}/verify`, { svc });
  }

  reset(userId: string): Promise<void> {
    return this.request(`/users/${encodeURIComponent(userId)}`, { method: "DELETE" });
  }
}
