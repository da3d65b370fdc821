import {
  ApiErrorBody,
  Health,
  Report,
  SCHEMA_VERSION,
  SessionDetail,
  SessionState,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

async function parseJson(response: Response): Promise<unknown> {
  try {
    return await response.json();
  } catch {
    throw new ApiError("internal", `bad response (${response.status})`, response.status);
  }
}

export class VirtdocApi {
  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError("unreachable", `service unreachable: ${String(err)}`, 0);
    }
    const payload = await parseJson(response);
    if (!response.ok) {
      const error = payload as ApiErrorBody;
      throw new ApiError(error.code ?? "internal", error.message ?? "request failed", response.status);
    }
    const versioned = payload as { schema_version?: number };
    if (versioned.schema_version !== undefined && versioned.schema_version !== SCHEMA_VERSION) {
      throw new ApiError(
        "internal",
        `schema_version mismatch: kiosk speaks ${SCHEMA_VERSION}, service sent ${versioned.schema_version}`,
        response.status,
      );
    }
    return payload as T;
  }

  createSession(): Promise<SessionState> {
    return this.request("POST", "/api/sessions");
  }

  sendUtterance(sessionId: string, utterance: string): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/input`, { utterance });
  }

  sendFrame(sessionId: string, frame: string): Promise<SessionState> {
    return this.request("POST", `/api/sessions/${sessionId}/input`, { frame });
  }

  getSession(sessionId: string): Promise<SessionDetail> {
    return this.request("GET", `/api/sessions/${sessionId}`);
  }

  getReport(sessionId: string): Promise<Report> {
    return this.request("GET", `/api/sessions/${sessionId}/report`);
  }

  health(): Promise<Health> {
    return this.request("GET", "/api/health");
  }
}
