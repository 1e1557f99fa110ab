// DOM bootstrap: wires the pure views to the HTTP API and the page. Keep this
// thin; everything testable lives in the sibling modules.

import { fetchMemoryList, fetchStats, fetchTree, postFrame, sendChat } from './api.js';
import {
  TranscriptMessage,
  assistantMessage,
  errorBanner,
  renderTranscript,
  userMessage,
} from './chatView.js';
import { emptyState, renderMemoryList } from './listView.js';
import {
  MonitorState,
  applyFeedError,
  applyFrameResponse,
  initialMonitorState,
  renderMonitor,
  toggleMonitor,
} from './monitor.js';
import { renderTree } from './treeView.js';
import type { ComponentName } from './types.js';

const FEED_INTERVAL_MS = 1500;

const transcript: TranscriptMessage[] = [];
let monitor: MonitorState = initialMonitorState();
let feeder: number | null = null;
const conversationId = `ui-${Date.now().toString(36)}`;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paintChat(banner = ''): void {
  el('chat-log').innerHTML = banner + renderTranscript(transcript);
  el('chat-log').scrollTop = el('chat-log').scrollHeight;
}

async function onSend(): Promise<void> {
  const input = el<HTMLInputElement>('chat-input');
  const text = input.value.trim();
  if (!text) return;
  transcript.push(userMessage(text));
  paintChat();
  try {
    const reply = await sendChat(conversationId, text);
    transcript.push(assistantMessage(reply));
    input.value = ''; // only cleared on success; kept when the service is down
    paintChat();
  } catch (err) {
    paintChat(errorBanner(String(err)));
  }
}

async function refreshMemoryViews(): Promise<void> {
  try {
    const tree = await fetchTree();
    el('tree-panel').innerHTML = renderTree(tree.entries);
  } catch (err) {
    el('tree-panel').innerHTML = errorBanner(String(err));
  }
  const components: ComponentName[] = ['episodic', 'procedural', 'resource', 'vault'];
  for (const component of components) {
    const panel = el(`list-${component}`);
    try {
      const doc = await fetchMemoryList(component);
      panel.innerHTML = doc.entries.length ? renderMemoryList(doc) : emptyState(component);
    } catch (err) {
      panel.innerHTML = errorBanner(String(err));
    }
  }
  try {
    const stats = await fetchStats();
    el('stats-line').textContent =
      `${stats.file_size} bytes on disk - ` +
      Object.entries(stats.counts)
        .map(([c, n]) => `${c}: ${n}`)
        .join(', ');
  } catch {
    el('stats-line').textContent = '';
  }
}

// Simulated capture source: a canvas with a moving gradient, so consecutive
// frames differ and dedup behavior is visible without OS screen access.
let frameCounter = 0;

function simulatedFrame(): string {
  const canvas = document.createElement('canvas');
  canvas.width = 96;
  canvas.height = 96;
  const ctx = canvas.getContext('2d')!;
  // every third tick repeats the previous pattern to exercise the skip path
  const tick = frameCounter % 3 === 2 ? frameCounter - 1 : frameCounter;
  frameCounter += 1;
  const gradient = ctx.createLinearGradient(0, 0, 96, 96);
  gradient.addColorStop(0, `hsl(${(tick * 37) % 360}, 80%, 50%)`);
  gradient.addColorStop(1, `hsl(${(tick * 91) % 360}, 60%, 40%)`);
  ctx.fillStyle = gradient;
  ctx.fillRect(0, 0, 96, 96);
  ctx.fillStyle = '#fff';
  ctx.fillText(String(tick), 8, 48);
  return canvas.toDataURL('image/png').split(',')[1];
}

function paintMonitor(): void {
  el('monitor-panel-host').innerHTML = renderMonitor(monitor);
}

async function feedOnce(): Promise<void> {
  try {
    const resp = await postFrame(simulatedFrame(), `simulated frame ${frameCounter}`);
    monitor = applyFrameResponse(monitor, resp);
  } catch (err) {
    monitor = applyFeedError(monitor, String(err));
  }
  paintMonitor();
}

function onToggleMonitor(): void {
  const next = !monitor.on;
  monitor = toggleMonitor(monitor, next);
  if (next && feeder === null) {
    feeder = window.setInterval(feedOnce, FEED_INTERVAL_MS);
  } else if (!next && feeder !== null) {
    window.clearInterval(feeder);
    feeder = null;
  }
  paintMonitor();
}

export function boot(): void {
  el('chat-send').addEventListener('click', () => void onSend());
  el<HTMLInputElement>('chat-input').addEventListener('keydown', (event) => {
    if ((event as KeyboardEvent).key === 'Enter') void onSend();
  });
  el('monitor-toggle').addEventListener('click', onToggleMonitor);
  el('refresh-memory').addEventListener('click', () => void refreshMemoryViews());
  paintChat();
  paintMonitor();
  void refreshMemoryViews();
}

if (typeof document !== 'undefined' && document.getElementById('chat-send')) {
  boot();
}
