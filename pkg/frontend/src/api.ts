/**
 * Typed REST client for the studio service.
 *
 * Endpoints: POST /sessions, POST /sessions/{id}/feedback, GET /sessions/{id},
 * GET /sessions/{id}/export, GET /healthz. Generation failures come back as
 * 409 with the same body shape and a null model; the client resolves those so
 * the view can render the failure banner instead of treating them as faults.
 */

export interface DiagnosticInfo {
  code: string;
  severity: string;
  message: string;
  path: string;
}

export interface IterationInfo {
  attempt: number;
  script: string;
  diagnostics: DiagnosticInfo[];
  wall_time: number;
}

export interface GraphNode {
  id: string;
  kind: string;
  label: string;
}

export interface GraphEdge {
  source: string;
  target: string;
}

export interface GraphView {
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface ModelPayload {
  tree: unknown;
  graph: GraphView;
}

// body of POST /sessions and POST /sessions/{id}/feedback (200 or 409)
export interface MutationResponse {
  session_id: string;
  status: string;
  version: number;
  iterations: number;
  auto_fixed?: boolean;
  diagnostics: DiagnosticInfo[];
  model: ModelPayload | null;
}

export interface VersionInfo {
  version: number;
  created: string;
  status: string;
  iterations: number;
  auto_fixed: boolean;
  timeline: IterationInfo[];
  script: string | null;
  model: ModelPayload | null;
}

// body of GET /sessions/{id}
export interface SessionView {
  session_id: string;
  status: string;
  created: string;
  updated: string;
  provider: { vendor: string; model_name: string; api_key_env: string };
  current_version: number;
  versions: VersionInfo[];
}

export interface ExportDocument {
  filename: string;
  mediaType: string;
  bytes: Uint8Array;
}

export interface ProviderSelection {
  provider: string;
  modelName: string;
  apiKeyEnv?: string;
  apiKey?: string;
}

export const EXPORT_FORMATS = ["bpmn", "pnml", "dot", "script"] as const;
export type ExportFormat = (typeof EXPORT_FORMATS)[number];

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

function detailOf(body: unknown, fallback: string): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    return JSON.stringify(detail);
  }
  return fallback;
}

function parseFilename(disposition: string | null, fallback: string): string {
  const match = disposition?.match(/filename="([^"]+)"/);
  return match ? match[1] : fallback;
}

export class StudioClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async requestJson(url: string, init: RequestInit): Promise<unknown> {
    const response = await this.fetchImpl(this.baseUrl + url, init);
    const body = await response.json().catch(() => null);
    // 409 carries a structured failure body the UI renders directly
    if (!response.ok && !(response.status === 409 && body && "session_id" in (body as object))) {
      throw new ApiError(response.status, detailOf(body, response.statusText));
    }
    return body;
  }

  private headers(apiKey?: string): Record<string, string> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (apiKey) headers["X-Api-Key"] = apiKey;
    return headers;
  }

  async createSession(
    description: string,
    selection: ProviderSelection,
  ): Promise<MutationResponse> {
    const body = {
      description,
      provider: selection.provider,
      model_name: selection.modelName,
      api_key_env: selection.apiKeyEnv || null,
    };
    return (await this.requestJson("/sessions", {
      method: "POST",
      headers: this.headers(selection.apiKey),
      body: JSON.stringify(body),
    })) as MutationResponse;
  }

  async sendFeedback(
    sessionId: string,
    text: string,
    apiKey?: string,
  ): Promise<MutationResponse> {
    return (await this.requestJson(`/sessions/${encodeURIComponent(sessionId)}/feedback`, {
      method: "POST",
      headers: this.headers(apiKey),
      body: JSON.stringify({ text }),
    })) as MutationResponse;
  }

  async getSession(sessionId: string): Promise<SessionView> {
    return (await this.requestJson(`/sessions/${encodeURIComponent(sessionId)}`, {
      method: "GET",
    })) as SessionView;
  }

  async health(): Promise<{ status: string; sessions: number }> {
    return (await this.requestJson("/healthz", { method: "GET" })) as {
      status: string;
      sessions: number;
    };
  }

  exportUrl(sessionId: string, format: ExportFormat, version?: number): string {
    const query = new URLSearchParams({ format });
    if (version !== undefined) query.set("version", String(version));
    return `${this.baseUrl}/sessions/${encodeURIComponent(sessionId)}/export?${query}`;
  }

  async exportDocument(
    sessionId: string,
    format: ExportFormat,
    version?: number,
  ): Promise<ExportDocument> {
    const response = await this.fetchImpl(this.exportUrl(sessionId, format, version), {
      method: "GET",
    });
    if (!response.ok) {
      const body = await response.json().catch(() => null);
      throw new ApiError(response.status, detailOf(body, response.statusText));
    }
    const bytes = new Uint8Array(await response.arrayBuffer());
    return {
      filename: parseFilename(
        response.headers.get("content-disposition"),
        `model.${format}`,
      ),
      mediaType: response.headers.get("content-type") ?? "application/octet-stream",
      bytes,
    };
  }
}
