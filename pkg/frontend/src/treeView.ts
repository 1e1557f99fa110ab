// Semantic-memory tree: layout computed client-side from the flat projection
// ('/'-delimited category paths), rendered as nested collapsible sections.

import { escapeHtml } from './chatView.js';
import type { TreeEntry, TreeNode, TreeResponse } from './types.js';

interface MutableNode {
  name: string;
  entries: TreeEntry[];
  children: Map<string, MutableNode>;
}

export function buildTree(flat: TreeResponse['entries']): TreeNode {
  const root: MutableNode = { name: '', entries: [], children: new Map() };
  for (const row of flat) {
    const segments = row.segments.length > 0 ? row.segments : ['(unnamed)'];
    let node = root;
    for (const segment of segments.slice(0, -1)) {
      let child = node.children.get(segment);
      if (!child) {
        child = { name: segment, entries: [], children: new Map() };
        node.children.set(segment, child);
      }
      node = child;
    }
    node.entries.push({
      id: row.id,
      name: segments[segments.length - 1],
      summary: row.summary,
    });
  }
  const freeze = (node: MutableNode): TreeNode => ({
    name: node.name,
    entries: [...node.entries].sort((a, b) => a.name.localeCompare(b.name)),
    children: [...node.children.entries()]
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([, child]) => freeze(child)),
  });
  return freeze(root);
}

function renderEntry(entry: TreeEntry): string {
  return (
    `<li class="tree-leaf" data-id="${escapeHtml(entry.id)}">` +
    `<span class="leaf-name">${escapeHtml(entry.name)}</span>` +
    `<span class="leaf-summary">${escapeHtml(entry.summary)}</span></li>`
  );
}

export function renderTreeNode(node: TreeNode): string {
  const leaves = node.entries.map(renderEntry).join('');
  const branches = node.children.map(renderTreeNode).join('');
  if (node.name === '') {
    return `<ul class="tree-root">${leaves}${branches}</ul>`;
  }
  return (
    `<details class="tree-branch" open><summary>${escapeHtml(node.name)}</summary>` +
    `<ul>${leaves}${branches}</ul></details>`
  );
}

export function renderTree(flat: TreeResponse['entries']): string {
  if (flat.length === 0) {
    return '<div class="empty-state">no semantic memories yet</div>';
  }
  return renderTreeNode(buildTree(flat));
}
