/**
 * Pure view functions: state in, HTML string out. Keeping these free of DOM
 * access makes the rendering contract directly testable.
 */

import { Message, Reference, SessionView } from './api.js';
import { escapeHtml, renderMarkdown } from './markdown.js';

/** The sixteen known issue labels; anything else never becomes a chip. */
export const ISSUE_LABELS: ReadonlySet<string> = new Set([
  'High Metadata Load',
  'Misaligned Read Requests',
  'Misaligned Write Requests',
  'Random Access Patterns on Read',
  'Random Access Patterns on Write',
  'Shared File Access',
  'Small Read I/O Requests',
  'Small Write I/O Requests',
  'Repetitive Data Access on Read',
  'Server Load Imbalance',
  'Rank Load Imbalance',
  'Multi-Process Without MPI',
  'No Collective I/O on Read',
  'No Collective I/O on Write',
  'Low-Level Library on Read',
  'Low-Level Library on Write',
]);

export function renderTagChips(tags: string[]): string {
  const chips = tags
    .filter((tag) => ISSUE_LABELS.has(tag))
    .map((tag) => `<span class="chip">${escapeHtml(tag)}</span>`);
  return chips.length ? `<div class="chips">${chips.join('')}</div>` : '';
}

export function renderReferences(references: Reference[]): string {
  if (!references.length) {
    return '<p class="muted">No references retained.</p>';
  }
  const items = references
    .map(
      (ref) => `
  <details class="reference" data-key="${escapeHtml(ref.key)}">
    <summary>${escapeHtml(ref.citation)} <span class="muted">[${escapeHtml(ref.key)}]</span></summary>
    <blockquote>${escapeHtml(ref.text)}</blockquote>
  </details>`,
    )
    .join('\n');
  return `<div class="references">${items}</div>`;
}

export function renderDiagnosis(session: SessionView): string {
  return `
<section class="diagnosis">
  <h2>Diagnosis</h2>
  ${renderTagChips(session.issue_tags)}
  <div class="diagnosis-body">${renderMarkdown(session.diagnosis)}</div>
  <h3>References (${session.references.length})</h3>
  ${renderReferences(session.references)}
</section>`;
}

export function renderMessage(message: Message): string {
  const who = message.role === 'assistant' ? 'assistant' : 'user';
  return `<div class="message ${who}"><div class="bubble">${renderMarkdown(message.text)}</div></div>`;
}

export function renderHistory(messages: Message[]): string {
  return messages.map(renderMessage).join('\n');
}

export function renderError(message: string, line?: number | null): string {
  const detail = line != null ? ` (line ${line})` : '';
  return `<div class="banner error">${escapeHtml(message)}${escapeHtml(detail)}
  <button class="retry" type="button">Retry</button></div>`;
}

export function renderSpinner(label: string): string {
  return `<div class="spinner" role="status">${escapeHtml(label)}</div>`;
}
