// Shared types mirroring the service's JSON shapes.

export type TaskKind = 'personalize' | 'simplify';

export interface GeneratedAssignment {
    assignment_title: string;
    assignment_content: string;
}

export interface LengthReport {
    original_words: number;
    generated_words: number;
    ratio: number | null;
    within_bound: boolean;
}

export interface RecordView {
    request_id: string;
    task: TaskKind;
    interest: string;
    original_content: string;
    result: GeneratedAssignment;
    model_name: string;
    prompt_tokens: number;
    completion_tokens: number;
    response_time_ms: number;
    provider_id: string;
    created_at: string;
    length_report: LengthReport;
}

export interface RecordSummary {
    request_id: string;
    task: TaskKind;
    interest: string;
    assignment_title: string;
    model_name: string;
    provider_id: string;
    created_at: string;
}

export interface ApiErrorBody {
    code: string;
    message: string;
    explanation?: string;
    attempts?: number;
}

export type WizardStep =
    | 'source_entry'
    | 'interest_entry'
    | 'task_choice'
    | 'in_flight'
    | 'result'
    | 'rejected';
