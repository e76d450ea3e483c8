// Wizard flow: paste or upload an assignment, enter an interest, pick a
// task, read the result. One in-flight generation at most; a guardrail
// rejection surfaces the server's explanation verbatim and sends the user
// back to the interest step to revise.

import { ApiClient, ApiError } from './api';
import type { RecordSummary, RecordView, TaskKind, WizardStep } from './types';

export interface WizardBanner {
    kind: 'rejection' | 'retryable';
    code: string;
    message: string;
    explanation: string;
}

export interface WizardState {
    step: WizardStep;
    sourceText: string;
    fileId: string | null;
    fileName: string | null;
    interest: string;
    task: TaskKind;
    banner: WizardBanner | null;
    record: RecordView | null;
    history: RecordSummary[];
}

type Listener = (state: WizardState) => void;

export class WizardController {
    private state: WizardState = initialState();
    private listeners: Listener[] = [];

    constructor(private readonly api: ApiClient) {}

    getState(): WizardState {
        return this.state;
    }

    subscribe(listener: Listener): () => void {
        this.listeners.push(listener);
        return () => {
            this.listeners = this.listeners.filter((l) => l !== listener);
        };
    }

    private update(patch: Partial<WizardState>): void {
        this.state = { ...this.state, ...patch };
        for (const listener of this.listeners) listener(this.state);
    }

    // -- drafts and navigation ------------------------------------------------

    setSourceText(text: string): void {
        this.update({ sourceText: text, fileId: null, fileName: null });
    }

    async attachFile(data: Blob | ArrayBuffer, name: string, contentType: 'application/pdf' | 'text/plain'): Promise<void> {
        const fileId = await this.api.uploadFile(data, contentType);
        this.update({ fileId, fileName: name, sourceText: '' });
    }

    setInterest(interest: string): void {
        this.update({ interest });
    }

    toInterestEntry(): void {
        if (this.state.step === 'in_flight') return;
        if (!this.hasSource()) return;
        this.update({ step: 'interest_entry', banner: null });
    }

    toTaskChoice(): void {
        if (this.state.step === 'in_flight') return;
        if (!this.hasSource() || !this.state.interest.trim()) return;
        this.update({ step: 'task_choice', banner: null });
    }

    backToSource(): void {
        if (this.state.step === 'in_flight') return;
        this.update({ step: 'source_entry', banner: null });
    }

    reviseInterest(): void {
        if (this.state.step === 'in_flight') return;
        this.update({ step: 'interest_entry' });
    }

    startOver(): void {
        if (this.state.step === 'in_flight') return;
        this.update({ ...initialState(), history: this.state.history });
    }

    hasSource(): boolean {
        return Boolean(this.state.sourceText.trim() || this.state.fileId);
    }

    // -- submission -------------------------------------------------------------

    async submit(task: TaskKind): Promise<void> {
        if (this.state.step === 'in_flight') return; // no resubmission while pending
        if (!this.hasSource() || !this.state.interest.trim()) return;
        this.update({ step: 'in_flight', task, banner: null });
        const source = this.state.fileId ? { file_id: this.state.fileId } : { text: this.state.sourceText };
        try {
            const record =
                task === 'personalize'
                    ? await this.api.personalize(source, this.state.interest)
                    : await this.api.simplify(source, this.state.interest);
            this.update({ step: 'result', record, banner: null });
        } catch (error) {
            if (error instanceof ApiError && !error.retryable) {
                // guardrail (or other client-side) rejection: explanation shown verbatim
                this.update({
                    step: 'rejected',
                    banner: {
                        kind: 'rejection',
                        code: error.code,
                        message: error.message,
                        explanation: error.explanation ?? error.message,
                    },
                });
            } else {
                const apiError = error instanceof ApiError
                    ? error
                    : new ApiError(0, 'network_error', String(error));
                this.update({
                    step: 'task_choice',
                    banner: {
                        kind: 'retryable',
                        code: apiError.code,
                        message: apiError.message,
                        explanation: apiError.explanation ?? '',
                    },
                });
            }
        }
    }

    /** From the result view: run the other task over the same source. */
    async resubmitAs(task: TaskKind): Promise<void> {
        if (this.state.step !== 'result') return;
        await this.submit(task);
    }

    // -- history ------------------------------------------------------------------

    async loadHistory(limit = 20): Promise<void> {
        const history = await this.api.listAssignments(limit);
        this.update({ history });
    }

    async reopen(requestId: string): Promise<void> {
        if (this.state.step === 'in_flight') return;
        const record = await this.api.getAssignment(requestId);
        this.update({
            step: 'result',
            record,
            banner: null,
            sourceText: record.original_content,
            fileId: null,
            fileName: null,
            interest: record.interest,
            task: record.task,
        });
    }
}

function initialState(): WizardState {
    return {
        step: 'source_entry',
        sourceText: '',
        fileId: null,
        fileName: null,
        interest: '',
        task: 'personalize',
        banner: null,
        record: null,
        history: [],
    };
}
