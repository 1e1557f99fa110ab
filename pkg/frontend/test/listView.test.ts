import { describe, expect, it } from 'vitest';

import { emptyState, renderMemoryList } from '../src/listView.js';
import type { MemoryListResponse } from '../src/types.js';

const PROCEDURAL_FIXTURE: MemoryListResponse = {
  component: 'procedural',
  count: 1,
  entries: [
    {
      component: 'procedural',
      id: 'p1',
      entry_type: 'workflow',
      description: 'file a travel reimbursement',
      steps: [
        'open the expenses portal',
        'create a new claim',
        'attach receipts',
        'pick the cost center',
        'submit for approval',
      ],
    },
  ],
};

describe('memory list views', () => {
  it('procedural entry expands into its five steps verbatim and in order', () => {
    const html = renderMemoryList(PROCEDURAL_FIXTURE);
    expect(html).toContain('file a travel reimbursement');
    expect(html).toContain('5 steps');
    const steps = PROCEDURAL_FIXTURE.entries[0].steps as string[];
    let last = -1;
    for (const step of steps) {
      const at = html.indexOf(`<li class="step">${step}</li>`);
      expect(at).toBeGreaterThan(last);
      last = at;
    }
  });

  it('empty component renders an empty-state placeholder', () => {
    expect(emptyState('resource')).toContain('no resource memories yet');
    const html = renderMemoryList({ component: 'episodic', count: 0, entries: [] });
    expect(html).toContain('no episodic memories yet');
  });

  it('vault rows never render the secret_value field', () => {
    const sentinel = 'Sentinel-DOM-55555';
    const html = renderMemoryList({
      component: 'vault',
      count: 1,
      entries: [
        {
          component: 'vault',
          id: 'v1',
          entry_type: 'credential',
          source: 'bank',
          sensitivity: 'high',
          secret_value: sentinel, // even if the API ever leaked it, the DOM must not
        },
      ],
    });
    expect(html).not.toContain(sentinel);
    expect(html).toContain('credential');
    expect(html).toContain('bank');
  });

  it('generic rows show a label and detail', () => {
    const html = renderMemoryList({
      component: 'episodic',
      count: 1,
      entries: [
        { id: 'e1', summary: 'met Ana for coffee', details: 'at the corner cafe' },
      ],
    });
    expect(html).toContain('met Ana for coffee');
    expect(html).toContain('at the corner cafe');
  });
});
