import { describe, expect, it } from 'vitest';

import {
  applyFeedError,
  applyFrameResponse,
  initialMonitorState,
  renderMonitor,
  toggleMonitor,
} from '../src/monitor.js';
import type { FrameResponse } from '../src/types.js';

function frameResp(partial: Partial<FrameResponse>): FrameResponse {
  return {
    kept: true,
    pending: 0,
    kept_total: 0,
    skipped_total: 0,
    batch_id: null,
    ...partial,
  };
}

describe('monitor panel', () => {
  it('20 unique frames reach 20/20, show the batch event, then reset', () => {
    let state = toggleMonitor(initialMonitorState(20), true);
    for (let i = 1; i < 20; i++) {
      state = applyFrameResponse(state, frameResp({ pending: i, kept_total: i }));
      expect(renderMonitor(state)).toContain(`batch progress ${i}/20`);
    }
    state = applyFrameResponse(
      state,
      frameResp({ pending: 0, kept_total: 20, batch_id: 'batch-001' }),
    );
    const atBatch = renderMonitor(state);
    expect(atBatch).toContain('batch progress 20/20');
    expect(atBatch).toContain('batch sent: batch-001');
    expect(state.batchesSent).toBe(1);
    // the next kept frame starts the new batch from 1/20
    state = applyFrameResponse(state, frameResp({ pending: 1, kept_total: 21 }));
    expect(renderMonitor(state)).toContain('batch progress 1/20');
    expect(renderMonitor(state)).not.toContain('batch sent:');
  });

  it('duplicate frames bump the skipped counter without touching progress', () => {
    let state = toggleMonitor(initialMonitorState(20), true);
    state = applyFrameResponse(state, frameResp({ pending: 3, kept_total: 3 }));
    state = applyFrameResponse(
      state,
      frameResp({ kept: false, pending: 3, kept_total: 3, skipped_total: 1 }),
    );
    expect(state.skipped).toBe(1);
    expect(renderMonitor(state)).toContain('batch progress 3/20');
    expect(renderMonitor(state)).toContain('kept 3');
    expect(renderMonitor(state)).toContain('skipped 1');
  });

  it('toggling off mid-batch retains partial progress', () => {
    let state = toggleMonitor(initialMonitorState(20), true);
    state = applyFrameResponse(state, frameResp({ pending: 7, kept_total: 7 }));
    state = toggleMonitor(state, false);
    const html = renderMonitor(state);
    expect(html).toContain('paused');
    expect(html).toContain('batch progress 7/20');
  });

  it('feed errors surface as a panel banner', () => {
    let state = toggleMonitor(initialMonitorState(20), true);
    state = applyFeedError(state, 'capture permission denied');
    const html = renderMonitor(state);
    expect(html).toContain('banner-error');
    expect(html).toContain('capture permission denied');
  });

  it('golden snapshot: fresh panel', () => {
    expect(renderMonitor(initialMonitorState(20))).toBe(
      '<div class="monitor-panel">' +
        '<div class="monitor-status monitor-off">paused</div>' +
        '<div class="monitor-counts">kept 0 &middot; skipped 0</div>' +
        '<div class="monitor-progress">batch progress 0/20</div>' +
        '</div>',
    );
  });
});
