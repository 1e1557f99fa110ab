// Screenshot-monitor panel state. Pure reducer over /frames responses so the
// panel can be golden-tested; the live feeder loop lives in app.ts.

import { escapeHtml } from './chatView.js';
import type { FrameResponse } from './types.js';

export interface MonitorState {
  on: boolean;
  kept: number;
  skipped: number;
  progress: number; // frames pending toward the next batch
  batchSize: number;
  batchesSent: number;
  lastBatchId: string | null;
  justBatched: boolean; // the most recent frame completed a batch
  error: string | null;
}

export function initialMonitorState(batchSize = 20): MonitorState {
  return {
    on: false,
    kept: 0,
    skipped: 0,
    progress: 0,
    batchSize,
    batchesSent: 0,
    lastBatchId: null,
    justBatched: false,
    error: null,
  };
}

export function toggleMonitor(state: MonitorState, on: boolean): MonitorState {
  // toggling off stops feeding but keeps partial progress
  return { ...state, on, error: null };
}

export function applyFrameResponse(state: MonitorState, resp: FrameResponse): MonitorState {
  const batched = resp.batch_id !== null;
  return {
    ...state,
    kept: resp.kept_total,
    skipped: resp.skipped_total,
    progress: resp.pending,
    batchesSent: state.batchesSent + (batched ? 1 : 0),
    lastBatchId: batched ? resp.batch_id : state.lastBatchId,
    justBatched: batched,
    error: null,
  };
}

export function applyFeedError(state: MonitorState, detail: string): MonitorState {
  return { ...state, error: detail };
}

export function renderMonitor(state: MonitorState): string {
  const status = state.on ? 'monitoring' : 'paused';
  // the frame that completes a batch shows the full bar before the reset
  const displayed = state.justBatched
    ? `${state.batchSize}/${state.batchSize}`
    : `${state.progress}/${state.batchSize}`;
  const parts = [
    `<div class="monitor-status monitor-${state.on ? 'on' : 'off'}">${status}</div>`,
    `<div class="monitor-counts">kept ${state.kept} &middot; skipped ${state.skipped}</div>`,
    `<div class="monitor-progress">batch progress ${escapeHtml(displayed)}</div>`,
  ];
  if (state.justBatched && state.lastBatchId) {
    parts.push(`<div class="monitor-batch">batch sent: ${escapeHtml(state.lastBatchId)}</div>`);
  }
  if (state.error) {
    parts.push(`<div class="banner banner-error">${escapeHtml(state.error)}</div>`);
  }
  return `<div class="monitor-panel">${parts.join('')}</div>`;
}
