import { describe, expect, it } from 'vitest';

import { buildTree, renderTree } from '../src/treeView.js';
import type { TreeResponse } from '../src/types.js';

// fixture mirroring /memory/tree's flat projection
const FLAT: TreeResponse['entries'] = [
  { id: 'e1', segments: ['Favorites', 'Sports'], summary: 'loves tennis' },
  { id: 'e2', segments: ['Favorites', 'Pets'], summary: 'has a corgi named Biscuit' },
  { id: 'e3', segments: ['Work'], summary: 'ships compilers' },
];

describe('semantic tree view', () => {
  it('builds Favorites with two children from the flat projection', () => {
    const tree = buildTree(FLAT);
    const favorites = tree.children.find((c) => c.name === 'Favorites');
    expect(favorites).toBeDefined();
    expect(favorites!.entries.map((e) => e.name).sort()).toEqual(['Pets', 'Sports']);
    expect(tree.entries.map((e) => e.name)).toEqual(['Work']);
  });

  it('renders a collapsible branch per category', () => {
    const html = renderTree(FLAT);
    expect(html).toContain('<summary>Favorites</summary>');
    expect(html).toContain('Sports');
    expect(html).toContain('Pets');
    expect(html).toContain('has a corgi named Biscuit');
    expect(html).toContain('<details class="tree-branch"');
  });

  it('is deterministic: same fixture, identical markup', () => {
    expect(renderTree(FLAT)).toBe(renderTree([...FLAT]));
  });

  it('renders an empty state for an empty store', () => {
    expect(renderTree([])).toContain('no semantic memories yet');
  });

  it('handles deep paths and unnamed entries', () => {
    const deep: TreeResponse['entries'] = [
      { id: 'd1', segments: ['A', 'B', 'C'], summary: 'nested leaf' },
      { id: 'd2', segments: [], summary: 'nameless' },
    ];
    const tree = buildTree(deep);
    const a = tree.children.find((c) => c.name === 'A')!;
    const b = a.children.find((c) => c.name === 'B')!;
    expect(b.entries[0].name).toBe('C');
    expect(tree.entries[0].name).toBe('(unnamed)');
  });

  it('escapes markup in names and summaries', () => {
    const html = renderTree([
      { id: 'x', segments: ['<b>Cat</b>'], summary: '<img onerror=1>' },
    ]);
    expect(html).not.toContain('<b>Cat</b>');
    expect(html).not.toContain('<img');
  });
});
