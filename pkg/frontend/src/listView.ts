// Per-component list views. Procedural entries expand into their ordered
// steps verbatim; vault rows surface only non-secret fields (the API already
// redacts high-sensitivity values, this layer never renders secret_value).

import { escapeHtml } from './chatView.js';
import type { ComponentName, MemoryListResponse } from './types.js';

export function emptyState(component: ComponentName): string {
  return `<div class="empty-state">no ${escapeHtml(component)} memories yet</div>`;
}

function renderProcedural(entry: Record<string, unknown>): string {
  const description = escapeHtml(String(entry.description ?? ''));
  const steps = Array.isArray(entry.steps) ? (entry.steps as unknown[]) : [];
  const items = steps.map((s) => `<li class="step">${escapeHtml(String(s))}</li>`).join('');
  return (
    `<details class="list-row" data-id="${escapeHtml(String(entry.id ?? ''))}">` +
    `<summary>${description} <span class="step-count">${steps.length} steps</span></summary>` +
    `<ol class="steps">${items}</ol></details>`
  );
}

function renderGeneric(entry: Record<string, unknown>): string {
  const label =
    entry.summary ?? entry.name ?? entry.title ?? entry.label ?? entry.entry_type ?? '';
  const detail = entry.details ?? entry.content ?? entry.value ?? entry.source ?? '';
  return (
    `<div class="list-row" data-id="${escapeHtml(String(entry.id ?? ''))}">` +
    `<span class="row-label">${escapeHtml(String(label))}</span>` +
    `<span class="row-detail">${escapeHtml(String(detail))}</span></div>`
  );
}

const SAFE_VAULT_FIELDS = ['id', 'entry_type', 'source', 'sensitivity'] as const;

function renderVault(entry: Record<string, unknown>): string {
  const cells = SAFE_VAULT_FIELDS.map(
    (f) => `<span class="vault-${f}">${escapeHtml(String(entry[f] ?? ''))}</span>`,
  ).join('');
  return `<div class="list-row vault-row">${cells}</div>`;
}

export function renderMemoryList(doc: MemoryListResponse): string {
  if (doc.entries.length === 0) {
    return emptyState(doc.component);
  }
  const rows = doc.entries.map((entry) => {
    if (doc.component === 'procedural') return renderProcedural(entry);
    if (doc.component === 'vault') return renderVault(entry);
    return renderGeneric(entry);
  });
  return `<div class="memory-list" data-component="${doc.component}">${rows.join('')}</div>`;
}
