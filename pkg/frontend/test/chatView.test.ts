import { describe, expect, it } from 'vitest';

import {
  assistantMessage,
  errorBanner,
  escapeHtml,
  renderMessage,
  renderSourceChips,
  renderTranscript,
  userMessage,
} from '../src/chatView.js';
import type { ChatResponse } from '../src/types.js';

// fixture mirroring a real /chat response
const YACCARINO_REPLY: ChatResponse = {
  message: 'Linda Yaccarino is the CEO of Twitter.',
  sources: [{ component: 'semantic', entry_id: 'abc123' }],
};

describe('chat view', () => {
  it('renders reply text with a source chip linking to the entry', () => {
    const html = renderMessage(assistantMessage(YACCARINO_REPLY));
    expect(html).toContain('Linda Yaccarino is the CEO of Twitter.');
    expect(html).toContain('class="chip chip-semantic"');
    expect(html).toContain('href="/memory/semantic/abc123"');
  });

  it('renders no chips for a reply with zero sources', () => {
    const html = renderMessage(assistantMessage({ message: 'nothing stored', sources: [] }));
    expect(html).not.toContain('class="chips"');
    expect(html).not.toContain('chip-');
  });

  it('golden transcript snapshot is stable for fixture responses', () => {
    const html = renderTranscript([
      userMessage('Who is the CEO of Twitter?'),
      assistantMessage(YACCARINO_REPLY),
    ]);
    expect(html).toBe(
      '<div class="bubble bubble-user"><div class="bubble-text">Who is the CEO of Twitter?</div></div>\n' +
        '<div class="bubble bubble-assistant"><div class="bubble-text">Linda Yaccarino is the CEO of Twitter.</div>' +
        '<div class="chips"><a class="chip chip-semantic" href="/memory/semantic/abc123" title="abc123">semantic</a></div></div>',
    );
  });

  it('escapes markup in replies and sources', () => {
    const nasty = assistantMessage({
      message: '<script>alert(1)</script>',
      sources: [{ component: 'semantic', entry_id: '"><img>' }],
    });
    const html = renderMessage(nasty);
    expect(html).not.toContain('<script>');
    expect(html).toContain('&lt;script&gt;');
    expect(html).not.toContain('"><img>');
  });

  it('service-down banner is rendered separately so input is preserved', () => {
    const banner = errorBanner('HTTP 502');
    expect(banner).toContain('service unreachable');
    expect(banner).toContain('HTTP 502');
  });

  it('escapeHtml covers the usual suspects', () => {
    expect(escapeHtml(`& < > " '`)).toBe('&amp; &lt; &gt; &quot; &#39;');
  });

  it('multiple sources render one chip each', () => {
    const html = renderSourceChips([
      { component: 'semantic', entry_id: 'a' },
      { component: 'episodic', entry_id: 'b' },
      { component: 'vault', entry_id: 'c' },
    ]);
    expect(html.match(/class="chip /g)?.length).toBe(3);
    expect(html).toContain('chip-vault');
  });
});
