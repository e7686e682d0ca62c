// Thin client over the review-service API. Every mutation the UI performs
// goes through here, and request bodies are built with explicit key order so
// the wire shape is stable byte for byte.

import type {
  ApiErrorBody,
  AuditEntry,
  CaseDoc,
  Decision,
  EditOp,
  GraphDoc,
  ReviewTask,
  Session,
  ViolationsResponse,
} from './types.js';

export class ApiError extends Error {
  status: number;
  errorCode: string;
  details: Record<string, unknown>;

  constructor(status: number, body: ApiErrorBody | null, fallback: string) {
    super(body?.message ?? fallback);
    this.status = status;
    this.errorCode = body?.error_code ?? 'unknown';
    this.details = body?.details ?? {};
  }
}

export function claimBody(reviewerId: string): string {
  return JSON.stringify({ reviewer_id: reviewerId });
}

export function decisionBody(
  reviewerId: string,
  decision: Decision,
  note?: string,
  editLog?: EditOp[],
): string {
  const body: Record<string, unknown> = { reviewer_id: reviewerId, decision };
  if (note) body.note = note;
  if (editLog && editLog.length) body.edit_log = editLog;
  return JSON.stringify(body);
}

export class ReviewApi {
  constructor(
    private readonly session: Session,
    private readonly baseUrl = '/api/v1',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private headers(json = false): Record<string, string> {
    const out: Record<string, string> = { Authorization: `Bearer ${this.session.token}` };
    if (json) out['Content-Type'] = 'application/json';
    return out;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      ...init,
      headers: { ...this.headers(Boolean(init?.body)), ...(init?.headers ?? {}) },
    });
    if (!response.ok) {
      let body: ApiErrorBody | null = null;
      try {
        body = (await response.json()) as ApiErrorBody;
      } catch {
        body = null;
      }
      throw new ApiError(response.status, body, `HTTP ${response.status} on ${path}`);
    }
    return (await response.json()) as T;
  }

  async listTasks(stage?: string, status?: string): Promise<ReviewTask[]> {
    const params = new URLSearchParams();
    if (stage) params.set('stage', stage);
    if (status) params.set('status', status);
    const query = params.toString();
    const body = await this.request<{ tasks: ReviewTask[] }>(
      `/tasks${query ? `?${query}` : ''}`,
    );
    return body.tasks;
  }

  async claimTask(taskId: string): Promise<ReviewTask> {
    const body = await this.request<{ task: ReviewTask }>(`/tasks/${taskId}/claim`, {
      method: 'POST',
      body: claimBody(this.session.reviewerId),
    });
    return body.task;
  }

  async submitDecision(
    taskId: string,
    decision: Decision,
    note?: string,
    editLog?: EditOp[],
  ): Promise<ReviewTask> {
    const body = await this.request<{ task: ReviewTask }>(`/tasks/${taskId}/decision`, {
      method: 'POST',
      body: decisionBody(this.session.reviewerId, decision, note, editLog),
    });
    return body.task;
  }

  async getCase(caseId: string): Promise<CaseDoc> {
    const body = await this.request<{ case: CaseDoc }>(`/cases/${caseId}`);
    return body.case;
  }

  async getGraph(graphId: string): Promise<GraphDoc> {
    const body = await this.request<{ graph: GraphDoc }>(`/graphs/${graphId}`);
    return body.graph;
  }

  async getViolations(graphId: string): Promise<ViolationsResponse> {
    return this.request<ViolationsResponse>(`/graphs/${graphId}/violations`);
  }

  /** Violations for the graph with an edit preview applied (nothing stored). */
  async previewViolations(graphId: string, editLog: EditOp[]): Promise<ViolationsResponse> {
    return this.request<ViolationsResponse>(`/graphs/${graphId}/violations`, {
      method: 'POST',
      body: JSON.stringify({ edit_log: editLog }),
    });
  }

  async getAudit(graphId: string): Promise<AuditEntry[]> {
    const body = await this.request<{ trail: AuditEntry[] }>(`/graphs/${graphId}/audit`);
    return body.trail;
  }

  async getFinalized(): Promise<string[]> {
    const body = await this.request<{ graph_ids: string[] }>(`/finalized`);
    return body.graph_ids;
  }

  /** Raw asset bytes as an object URL (img src cannot carry the bearer token). */
  async assetObjectUrl(caseId: string, digest: string): Promise<string | null> {
    const response = await this.fetchFn(
      `${this.baseUrl}/cases/${caseId}/assets/${digest}`,
      { headers: this.headers() },
    );
    if (!response.ok) return null;
    const blob = await response.blob();
    return URL.createObjectURL(blob);
  }
}
