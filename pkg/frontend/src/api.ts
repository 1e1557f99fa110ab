import type {
  ChatResponse,
  ComponentName,
  FrameResponse,
  MemoryListResponse,
  StatsResponse,
  TreeResponse,
} from './types.js';

const BASE = '';

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(BASE + path, {
    headers: { 'Content-Type': 'application/json' },
    ...init,
  });
  if (!resp.ok) {
    throw new Error(`${path} failed: HTTP ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export function sendChat(conversationId: string, message: string): Promise<ChatResponse> {
  return request<ChatResponse>('/chat', {
    method: 'POST',
    body: JSON.stringify({ conversation_id: conversationId, message }),
  });
}

export function fetchTree(): Promise<TreeResponse> {
  return request<TreeResponse>('/memory/tree');
}

export function fetchMemoryList(
  component: ComponentName,
  limit = 50,
): Promise<MemoryListResponse> {
  return request<MemoryListResponse>(`/memory/${component}?limit=${limit}`);
}

export function fetchStats(): Promise<StatsResponse> {
  return request<StatsResponse>('/stats');
}

export function postFrame(imageB64: string, text: string): Promise<FrameResponse> {
  return request<FrameResponse>('/frames', {
    method: 'POST',
    body: JSON.stringify({ image_b64: imageB64, text }),
  });
}
