/** Typed API client. All calls are read-only against the gateway. */

import type {
  CompleteRequest,
  CompleteResponse,
  GridRequest,
  GridResponse,
  HealthResponse,
  RetrieveRequest,
  RetrieveResponse,
  SchemeResponse,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit | undefined = body === undefined
      ? undefined
      : {
          method: "POST",
          headers: { "Content-Type": "application/json" },
          body: JSON.stringify(body),
        };
    const resp = await this.fetchFn(this.baseUrl + path, init);
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status} for ${path}`;
      try {
        const payload = (await resp.json()) as { code?: string; message?: string };
        code = payload.code ?? code;
        message = payload.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("/api/health");
  }

  scheme(): Promise<SchemeResponse> {
    return this.request<SchemeResponse>("/api/scheme");
  }

  complete(req: CompleteRequest): Promise<CompleteResponse> {
    return this.request<CompleteResponse>("/api/complete", req);
  }

  retrieve(req: RetrieveRequest): Promise<RetrieveResponse> {
    return this.request<RetrieveResponse>("/api/retrieve", req);
  }

  evalGrid(req: GridRequest): Promise<GridResponse> {
    return this.request<GridResponse>("/api/eval/grid", req);
  }
}
