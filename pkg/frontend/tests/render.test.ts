import { describe, expect, it } from 'vitest';

import type { ReviewItem } from '../src/api.js';
import { escapeHtml, renderApp, renderItemPanel, renderQueue } from '../src/render.js';
import { applyQueuePage, initialState } from '../src/state.js';

function item(overrides: Partial<ReviewItem> = {}): ReviewItem {
  return {
    word: 'zorp',
    rank: 1,
    weight: 3.25,
    support: 12,
    status: 'pending',
    mapped_keyword: null,
    contexts: [
      { sentence_id: 's000001', tokens: ['pure', 'zorp', 'for', 'sale', '.'], highlight: 1 },
    ],
    bigrams: ['pure zorp'],
    distribution: {
      word: 'zorp',
      counts: { heroin: 9, marijuana: 3 },
      probabilities: { heroin: 0.75, marijuana: 0.25 },
      n_total: 20,
      n_kept: 12,
      flag: null,
    },
    ...overrides,
  };
}

function stateWith(items: ReviewItem[], selected = 0) {
  const state = applyQueuePage(initialState(), {
    run_id: 'r1',
    page: 1,
    page_size: 20,
    total: items.length,
    items,
  });
  return { ...state, selected: items.length ? selected : -1 };
}

function mount(html: string): HTMLElement {
  const root = document.createElement('div');
  root.innerHTML = html;
  return root;
}

describe('queue rendering', () => {
  it('renders one row per item with rank and weight', () => {
    const items = Array.from({ length: 20 }, (_, i) => item({ word: `w${i}`, rank: i + 1 }));
    const root = mount(renderQueue(stateWith(items)));
    const rows = root.querySelectorAll('[data-testid="queue-row"]');
    expect(rows.length).toBe(20);
    expect(rows[0].querySelector('.rank')?.textContent).toBe('1');
    expect(rows[0].querySelector('.weight')?.textContent).toBe('3.2500');
  });

  it('shows the mapped keyword badge on confirmed items', () => {
    const confirmed = item({ status: 'confirmed', mapped_keyword: 'heroin' });
    const root = mount(renderQueue(stateWith([confirmed])));
    const badge = root.querySelector('[data-testid="mapped-badge"]');
    expect(badge?.textContent).toContain('heroin');
  });

  it('shows an empty-state prompt for an empty run', () => {
    const root = mount(renderQueue(stateWith([])));
    expect(root.querySelector('[data-testid="empty-queue"]')).toBeTruthy();
  });
});

describe('item panel rendering', () => {
  it('highlights the candidate token inside each context', () => {
    const root = mount(renderItemPanel(stateWith([item()])));
    const highlight = root.querySelector('[data-testid="highlight"]');
    expect(highlight?.textContent).toBe('zorp');
  });

  it('distribution bars visually sum to 100%', () => {
    const root = mount(renderItemPanel(stateWith([item()])));
    const values = [...root.querySelectorAll('.bar-value')].map((el) =>
      parseInt(el.textContent ?? '0', 10),
    );
    expect(values.reduce((a, b) => a + b, 0)).toBe(100);
    const widths = [...root.querySelectorAll('.bar-fill')].map((el) =>
      parseInt((el as HTMLElement).style.width, 10),
    );
    expect(widths.reduce((a, b) => a + b, 0)).toBe(100);
  });

  it('flags candidates whose contexts were all rejected', () => {
    const coverOnly = item({
      distribution: {
        word: 'zorp',
        counts: {},
        probabilities: {},
        n_total: 8,
        n_kept: 0,
        flag: 'non-euphemistic usage only',
      },
    });
    const root = mount(renderItemPanel(stateWith([coverOnly])));
    expect(root.querySelector('[data-testid="cover-only"]')?.textContent).toContain(
      'non-euphemistic usage only',
    );
  });

  it('enables verdict controls only for reviewable items', () => {
    const pending = mount(renderItemPanel(stateWith([item()])));
    expect(pending.querySelector<HTMLButtonElement>('#confirm-btn')?.disabled).toBe(false);

    const rejected = mount(renderItemPanel(stateWith([item({ status: 'rejected' })])));
    expect(rejected.querySelector<HTMLButtonElement>('#confirm-btn')?.disabled).toBe(true);
    expect(rejected.querySelector<HTMLInputElement>('#map-input')?.disabled).toBe(true);
  });

  it('prompts when nothing is selected', () => {
    const root = mount(renderItemPanel(stateWith([])));
    expect(root.querySelector('[data-testid="no-selection"]')).toBeTruthy();
  });
});

describe('app shell', () => {
  it('renders a banner when one is set', () => {
    const state = { ...stateWith([item()]), banner: 'service unreachable (boom)' };
    const root = mount(renderApp(state));
    expect(root.querySelector('[data-testid="banner"]')?.textContent).toContain(
      'service unreachable',
    );
  });

  it('escapes markup in user-visible values', () => {
    expect(escapeHtml('<script>alert(1)</script>')).not.toContain('<script>');
    const nasty = item({ word: '<img src=x>' });
    const root = mount(renderQueue(stateWith([nasty])));
    expect(root.querySelector('img')).toBeNull();
  });
});
