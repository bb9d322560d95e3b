/** Thin typed client for the service; every method is one endpoint. */

import type {
  ConfigPatch,
  HealthInfo,
  ResultPayload,
  ResultsEnvelope,
  SessionInfo,
  TableInfo,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** Non-2xx response, normalized from the server's error detail. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  /** Step number for no_valid_chart failures, else undefined. */
  readonly step?: number;

  constructor(status: number, code: string, message: string, step?: number) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
    this.step = step;
  }
}

interface ErrorDetail {
  error?: string;
  message?: string;
  step?: number;
}

async function errorFromResponse(response: Response): Promise<ApiError> {
  let detail: unknown;
  try {
    detail = (await response.json()).detail;
  } catch {
    detail = undefined;
  }
  if (typeof detail === "string") {
    return new ApiError(response.status, "error", detail);
  }
  if (detail && typeof detail === "object" && !Array.isArray(detail)) {
    const d = detail as ErrorDetail;
    return new ApiError(
      response.status,
      d.error ?? "error",
      d.message ?? d.error ?? `HTTP ${response.status}`,
      typeof d.step === "number" ? d.step : undefined,
    );
  }
  // Pydantic validation lists and empty bodies land here.
  return new ApiError(response.status, "error", `HTTP ${response.status}`);
}

export class ApiClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl: string, fetchImpl?: FetchLike) {
    this.base = baseUrl.replace(/\/+$/, "");
    // Bind so a bare window.fetch keeps its receiver.
    this.fetchImpl = fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body instanceof FormData) {
      init.body = body;
    } else if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { "content-type": "application/json" };
    }
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthInfo> {
    return this.request("GET", "/api/health");
  }

  uploadTable(file: Blob, filename: string): Promise<TableInfo> {
    const form = new FormData();
    form.append("file", file, filename);
    return this.request("POST", "/api/tables", form);
  }

  createSession(tableId: string): Promise<SessionInfo> {
    return this.request("POST", "/api/sessions", { table_id: tableId });
  }

  generate(
    sessionId: string,
    utterance: string,
    k?: number,
  ): Promise<ResultsEnvelope> {
    const body: Record<string, unknown> = { utterance };
    if (k !== undefined) body.k = k;
    return this.request("POST", `/api/sessions/${sessionId}/generate`, body);
  }

  regenerate(
    sessionId: string,
    resultRank: number,
    fromStep: number,
    answers: Record<string, string>,
  ): Promise<ResultsEnvelope> {
    return this.request("POST", `/api/sessions/${sessionId}/regenerate`, {
      result_rank: resultRank,
      from_step: fromStep,
      answers,
    });
  }

  patchResult(
    sessionId: string,
    rank: number,
    patch: ConfigPatch,
  ): Promise<ResultPayload> {
    return this.request(
      "PATCH",
      `/api/sessions/${sessionId}/results/${rank}`,
      patch,
    );
  }
}
