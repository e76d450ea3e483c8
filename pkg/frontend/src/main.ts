// DOM wiring for the assignment wizard. All service access goes through
// ApiClient; the base URL can be set at serve time via window.API_BASE_URL
// or a ?api= query parameter.

import { ApiClient } from './api';
import { escapeHtml, renderMarkdown } from './markdown';
import { WizardController, WizardState } from './wizard';

declare global {
    interface Window {
        API_BASE_URL?: string;
    }
}

function apiBase(): string {
    const fromQuery = new URLSearchParams(window.location.search).get('api');
    return fromQuery ?? window.API_BASE_URL ?? '';
}

const api = new ApiClient(apiBase());
const wizard = new WizardController(api);

const app = document.getElementById('app');
if (!app) throw new Error('missing #app mount point');

let showRaw = false;

function stepIndicator(state: WizardState): string {
    const steps: Array<[string, string]> = [
        ['source_entry', '1. Assignment'],
        ['interest_entry', '2. Interest'],
        ['task_choice', '3. Generate'],
    ];
    return `<ol class="steps">${steps
        .map(([id, label]) => `<li class="${state.step === id ? 'active' : ''}">${label}</li>`)
        .join('')}</ol>`;
}

function bannerHtml(state: WizardState): string {
    if (!state.banner) return '';
    if (state.banner.kind === 'retryable') {
        return `<div class="banner banner-error">
            <strong>Temporary problem (${escapeHtml(state.banner.code)}).</strong>
            <span>${escapeHtml(state.banner.message)}</span>
            <button data-action="retry">Try again</button>
        </div>`;
    }
    return '';
}

function historyHtml(state: WizardState): string {
    if (!state.history.length) {
        return '<p class="muted">No generated assignments yet.</p>';
    }
    return `<ul class="history">${state.history
        .map(
            (row) => `<li>
                <button data-action="reopen" data-id="${escapeHtml(row.request_id)}">
                    <span class="history-title">${escapeHtml(row.assignment_title)}</span>
                    <span class="history-meta">${escapeHtml(row.task)} · ${escapeHtml(row.interest)} · ${escapeHtml(row.created_at)}</span>
                </button>
            </li>`,
        )
        .join('')}</ul>`;
}

function viewHtml(state: WizardState): string {
    switch (state.step) {
        case 'source_entry':
            return `${stepIndicator(state)}
                <h2>Paste the assignment</h2>
                <textarea id="source" rows="12" placeholder="Paste the general assignment text here...">${escapeHtml(state.sourceText)}</textarea>
                <p class="muted">or upload a file (PDF or plain text):
                    <input type="file" id="file" accept=".pdf,.txt,.md,text/plain,application/pdf">
                    ${state.fileName ? `<span class="file-chip">${escapeHtml(state.fileName)}</span>` : ''}
                </p>
                <div class="actions"><button data-action="to-interest" class="primary">Next</button></div>`;
        case 'interest_entry':
            return `${stepIndicator(state)}
                <h2>What is the student interested in?</h2>
                <input id="interest" type="text" maxlength="200" placeholder="e.g. astronomy, basketball, writing poems"
                       value="${escapeHtml(state.interest)}">
                <div class="actions">
                    <button data-action="back-source">Back</button>
                    <button data-action="to-task" class="primary">Next</button>
                </div>`;
        case 'task_choice':
            return `${stepIndicator(state)}
                ${bannerHtml(state)}
                <h2>Choose what to generate</h2>
                <p class="muted">Interest: <strong>${escapeHtml(state.interest)}</strong></p>
                <div class="actions">
                    <button data-action="back-interest">Back</button>
                    <button data-action="personalize" class="primary">Personalize</button>
                    <button data-action="simplify" class="primary">Simplify</button>
                </div>`;
        case 'in_flight':
            return `<div class="spinner"></div>
                <p class="muted center">Generating the ${escapeHtml(state.task)}d assignment... this can take up to a minute.</p>`;
        case 'rejected':
            return `<h2>Request rejected</h2>
                <div class="banner banner-reject">
                    <strong>The ${state.banner?.code === 'invalid_assignment' ? 'assignment' : 'interest'} was not accepted:</strong>
                    <blockquote class="explanation">${escapeHtml(state.banner?.explanation ?? '')}</blockquote>
                </div>
                <div class="actions">
                    <button data-action="revise" class="primary">Revise the interest</button>
                    <button data-action="start-over">Start over</button>
                </div>`;
        case 'result': {
            const record = state.record;
            if (!record) return '<p>Nothing to show.</p>';
            const body = showRaw
                ? `<pre class="raw">${escapeHtml(record.result.assignment_content)}</pre>`
                : `<article class="rendered">${renderMarkdown(record.result.assignment_content)}</article>`;
            const other = record.task === 'personalize' ? 'simplify' : 'personalize';
            return `<h2 class="result-title">${escapeHtml(record.result.assignment_title)}</h2>
                <p class="muted">${escapeHtml(record.task)} · interest “${escapeHtml(record.interest)}” ·
                   ${escapeHtml(record.model_name)} via ${escapeHtml(record.provider_id)} ·
                   ${record.response_time_ms} ms</p>
                ${body}
                <div class="actions">
                    <label class="toggle"><input type="checkbox" id="raw-toggle" ${showRaw ? 'checked' : ''}> view raw source</label>
                    <button data-action="resubmit-${other}">${other === 'simplify' ? 'Simplify' : 'Personalize'} the same assignment</button>
                    <button data-action="start-over">Start over</button>
                </div>`;
        }
    }
}

function render(state: WizardState): void {
    app!.innerHTML = `
        <main class="card">${viewHtml(state)}</main>
        <aside class="card side">
            <h3>History</h3>
            ${historyHtml(state)}
        </aside>`;
    bind(state);
}

function bind(state: WizardState): void {
    const source = document.getElementById('source') as HTMLTextAreaElement | null;
    source?.addEventListener('change', () => wizard.setSourceText(source.value));
    const file = document.getElementById('file') as HTMLInputElement | null;
    file?.addEventListener('change', async () => {
        const chosen = file.files?.[0];
        if (!chosen) return;
        const type = chosen.type === 'application/pdf' ? 'application/pdf' : 'text/plain';
        await wizard.attachFile(chosen, chosen.name, type);
    });
    const interest = document.getElementById('interest') as HTMLInputElement | null;
    interest?.addEventListener('change', () => wizard.setInterest(interest.value));
    const rawToggle = document.getElementById('raw-toggle') as HTMLInputElement | null;
    rawToggle?.addEventListener('change', () => {
        showRaw = rawToggle.checked;
        render(wizard.getState());
    });
    app!.querySelectorAll<HTMLButtonElement>('button[data-action]').forEach((button) => {
        button.addEventListener('click', () => handleAction(button.dataset.action!, button));
    });
    void state;
}

function syncDrafts(): void {
    const source = document.getElementById('source') as HTMLTextAreaElement | null;
    if (source) wizard.setSourceText(source.value);
    const interest = document.getElementById('interest') as HTMLInputElement | null;
    if (interest) wizard.setInterest(interest.value);
}

async function handleAction(action: string, button: HTMLButtonElement): Promise<void> {
    syncDrafts();
    switch (action) {
        case 'to-interest':
            wizard.toInterestEntry();
            break;
        case 'back-source':
            wizard.backToSource();
            break;
        case 'to-task':
            wizard.toTaskChoice();
            break;
        case 'back-interest':
            wizard.reviseInterest();
            break;
        case 'personalize':
        case 'retry':
            showRaw = false;
            await wizard.submit('personalize');
            await wizard.loadHistory();
            break;
        case 'simplify':
            showRaw = false;
            await wizard.submit('simplify');
            await wizard.loadHistory();
            break;
        case 'resubmit-personalize':
            showRaw = false;
            await wizard.resubmitAs('personalize');
            await wizard.loadHistory();
            break;
        case 'resubmit-simplify':
            showRaw = false;
            await wizard.resubmitAs('simplify');
            await wizard.loadHistory();
            break;
        case 'revise':
            wizard.reviseInterest();
            break;
        case 'start-over':
            showRaw = false;
            wizard.startOver();
            break;
        case 'reopen':
            await wizard.reopen(button.dataset.id!);
            break;
    }
}

wizard.subscribe(render);
render(wizard.getState());
void wizard.loadHistory().catch(() => undefined);
