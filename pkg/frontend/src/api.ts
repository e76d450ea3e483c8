// Client for the service's /v1 endpoints. The UI talks to the service
// through this module only.

import type { ApiErrorBody, RecordSummary, RecordView, TaskKind } from './types';

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly code: string,
        message: string,
        public readonly explanation?: string,
    ) {
        super(message);
    }

    /** Guardrail rejections and other 4xx are final; 5xx/network are worth retrying. */
    get retryable(): boolean {
        return this.status >= 500 || this.status === 0;
    }
}

type FetchLike = typeof fetch;

export class ApiClient {
    private readonly base: string;
    private readonly fetchFn: FetchLike;

    constructor(baseUrl: string = '', fetchFn?: FetchLike) {
        this.base = baseUrl.replace(/\/$/, '');
        this.fetchFn = fetchFn ?? ((...args) => fetch(...args));
    }

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        let response: Response;
        try {
            response = await this.fetchFn(`${this.base}${path}`, init);
        } catch (error) {
            throw new ApiError(0, 'network_error', `could not reach the service: ${String(error)}`);
        }
        const text = await response.text();
        let body: unknown = null;
        try {
            body = text ? JSON.parse(text) : null;
        } catch {
            body = null;
        }
        if (!response.ok) {
            const err = (body ?? {}) as Partial<ApiErrorBody>;
            throw new ApiError(
                response.status,
                err.code ?? 'unknown_error',
                err.message ?? `request failed with status ${response.status}`,
                err.explanation,
            );
        }
        return body as T;
    }

    private generate(task: TaskKind, source: { text?: string; file_id?: string }, interest: string): Promise<RecordView> {
        return this.request<RecordView>(`/v1/assignments:${task}`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ ...source, interest }),
        });
    }

    personalize(source: { text?: string; file_id?: string }, interest: string): Promise<RecordView> {
        return this.generate('personalize', source, interest);
    }

    simplify(source: { text?: string; file_id?: string }, interest: string): Promise<RecordView> {
        return this.generate('simplify', source, interest);
    }

    async uploadFile(data: Blob | ArrayBuffer, contentType: 'application/pdf' | 'text/plain'): Promise<string> {
        const result = await this.request<{ file_id: string }>('/v1/files', {
            method: 'POST',
            headers: { 'Content-Type': contentType },
            body: data as BodyInit,
        });
        return result.file_id;
    }

    getAssignment(requestId: string): Promise<RecordView> {
        return this.request<RecordView>(`/v1/assignments/${encodeURIComponent(requestId)}`);
    }

    async listAssignments(limit = 20, task?: TaskKind): Promise<RecordSummary[]> {
        const params = new URLSearchParams({ limit: String(limit) });
        if (task) params.set('task', task);
        const body = await this.request<{ records: RecordSummary[] }>(`/v1/assignments?${params}`);
        return body.records;
    }

    health(): Promise<{ status: string; providers: unknown[] }> {
        return this.request('/v1/health');
    }
}
