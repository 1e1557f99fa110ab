// Shapes of the HTTP API responses this client consumes. All view state
// derives from these documents; the client never holds memory content of
// its own.

export type ComponentName =
  | 'core'
  | 'episodic'
  | 'semantic'
  | 'procedural'
  | 'resource'
  | 'vault';

export interface Source {
  component: ComponentName;
  entry_id: string;
}

export interface ChatResponse {
  message: string;
  sources: Source[];
}

export interface TreeEntry {
  id: string;
  name: string;
  summary: string;
}

export interface TreeNode {
  name: string;
  entries: TreeEntry[];
  children: TreeNode[];
}

export interface TreeResponse {
  entries: { id: string; segments: string[]; summary: string }[];
  tree: TreeNode;
}

export interface MemoryListResponse {
  component: ComponentName;
  count: number;
  entries: Record<string, unknown>[];
}

export interface FrameResponse {
  kept: boolean;
  pending: number;
  kept_total: number;
  skipped_total: number;
  batch_id: string | null;
}

export interface StatsResponse {
  file_size: number;
  counts: Record<ComponentName, number>;
  index_sizes: Record<string, number>;
}
