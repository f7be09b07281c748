/** Thin typed client for the advisory HTTP service. */

import {
  AdviceResponse,
  ApiErrorBody,
  CycleOut,
  ErrorDetail,
  PatientDetail,
  PatientOut,
  VisitBody,
} from "./model.js";

export type FetchLike = (
  url: string,
  init: {
    method: string;
    headers: Record<string, string>;
    body?: string;
  },
) => Promise<{ status: number; ok: boolean; text(): Promise<string> }>;

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;
  readonly details: ErrorDetail[];

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiError";
    this.status = status;
    this.code = body.code;
    this.details = body.details ?? [];
  }
}

export interface ApiClientOptions {
  baseUrl: string;
  token?: string;
  fetchImpl?: FetchLike;
}

export class ApiClient {
  private readonly baseUrl: string;
  private readonly token: string | undefined;
  private readonly fetchImpl: FetchLike;

  constructor(options: ApiClientOptions) {
    this.baseUrl = options.baseUrl.replace(/\/+$/, "");
    this.token = options.token;
    this.fetchImpl = options.fetchImpl ?? (fetch as unknown as FetchLike);
  }

  async health(): Promise<{ status: string }> {
    return this.request("GET", "/health");
  }

  async getConfig(): Promise<{ config: unknown; config_hash: string }> {
    return this.request("GET", "/config");
  }

  async createPatient(profile: {
    patient_id: string;
    age_years: number;
    medication_contraindicated?: boolean;
  }): Promise<PatientOut> {
    return this.request("POST", "/patients", undefined, profile);
  }

  async getPatient(patientId: string): Promise<PatientDetail> {
    return this.request("GET", `/patients/${encodeURIComponent(patientId)}`);
  }

  async getCycle(patientId: string, cycleNumber: number): Promise<CycleOut> {
    const path = `/patients/${encodeURIComponent(patientId)}/cycles/${cycleNumber}`;
    return this.request("GET", path);
  }

  async advise(
    patientId: string,
    cycleNumber: number,
    visit: VisitBody,
    dryRun = false,
  ): Promise<AdviceResponse> {
    const path = `/patients/${encodeURIComponent(patientId)}/cycles/${cycleNumber}/advice`;
    const query = dryRun ? { dry_run: "true" } : undefined;
    return this.request("POST", path, query, visit);
  }

  private async request<T>(
    method: string,
    path: string,
    query?: Record<string, string>,
    body?: unknown,
  ): Promise<T> {
    let url = this.baseUrl + path;
    if (query !== undefined) {
      url += "?" + new URLSearchParams(query).toString();
    }
    const headers: Record<string, string> = { accept: "application/json" };
    if (this.token !== undefined) {
      headers["authorization"] = `Bearer ${this.token}`;
    }
    let payload: string | undefined;
    if (body !== undefined) {
      headers["content-type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await this.fetchImpl(url, { method, headers, body: payload });
    const text = await response.text();
    if (!response.ok) {
      throw new ApiError(response.status, parseErrorBody(text));
    }
    return JSON.parse(text) as T;
  }
}

function parseErrorBody(text: string): ApiErrorBody {
  try {
    const parsed = JSON.parse(text) as Partial<ApiErrorBody>;
    if (typeof parsed.code === "string" && typeof parsed.message === "string") {
      return { code: parsed.code, message: parsed.message, details: parsed.details ?? [] };
    }
  } catch {
    // fall through to the generic shape
  }
  return { code: "unknown_error", message: text || "request failed", details: [] };
}
