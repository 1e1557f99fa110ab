// Chat transcript rendering: message bubbles plus expandable source chips
// linking each reply to the memory entries it came from.

import type { ChatResponse, Source } from './types.js';

export interface TranscriptMessage {
  role: 'user' | 'assistant' | 'error';
  text: string;
  sources: Source[];
}

export function escapeHtml(raw: string): string {
  return raw
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;')
    .replace(/'/g, '&#39;');
}

export function renderSourceChips(sources: Source[]): string {
  if (sources.length === 0) {
    return '';
  }
  const chips = sources
    .map(
      (s) =>
        `<a class="chip chip-${escapeHtml(s.component)}" ` +
        `href="/memory/${escapeHtml(s.component)}/${escapeHtml(s.entry_id)}" ` +
        `title="${escapeHtml(s.entry_id)}">${escapeHtml(s.component)}</a>`,
    )
    .join('');
  return `<div class="chips">${chips}</div>`;
}

export function renderMessage(message: TranscriptMessage): string {
  const body = `<div class="bubble-text">${escapeHtml(message.text)}</div>`;
  return `<div class="bubble bubble-${message.role}">${body}${renderSourceChips(
    message.sources,
  )}</div>`;
}

export function renderTranscript(messages: TranscriptMessage[]): string {
  return messages.map(renderMessage).join('\n');
}

export function assistantMessage(reply: ChatResponse): TranscriptMessage {
  return { role: 'assistant', text: reply.message, sources: reply.sources };
}

export function userMessage(text: string): TranscriptMessage {
  return { role: 'user', text, sources: [] };
}

export function errorBanner(detail: string): string {
  return `<div class="banner banner-error">service unreachable: ${escapeHtml(detail)}</div>`;
}
