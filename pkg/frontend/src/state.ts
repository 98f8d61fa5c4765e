// Console state and the pure derivations the views are built from.
// Everything here derives from service responses plus unsent drafts, so a
// refresh reconstructs identical state.

import type { QueuePage, ReviewItem, RunSummary } from './api.js';

export type RerunView =
  | { phase: 'idle' }
  | { phase: 'promoting' }
  | { phase: 'polling'; newRunId: string }
  | { phase: 'failed'; message: string };

export type ConsoleState = {
  runs: RunSummary[];
  runId: string | null;
  page: number;
  pageSize: number;
  total: number;
  items: ReviewItem[];
  selected: number; // index into items, -1 when empty
  draftKeyword: string;
  banner: string | null;
  rerun: RerunView;
};

export function initialState(): ConsoleState {
  return {
    runs: [],
    runId: null,
    page: 1,
    pageSize: 20,
    total: 0,
    items: [],
    selected: -1,
    draftKeyword: '',
    banner: null,
    rerun: { phase: 'idle' },
  };
}

export function applyQueuePage(state: ConsoleState, page: QueuePage): ConsoleState {
  const selected = page.items.length ? Math.min(Math.max(state.selected, 0), page.items.length - 1) : -1;
  return {
    ...state,
    runId: page.run_id,
    page: page.page,
    pageSize: page.page_size,
    total: page.total,
    items: page.items,
    selected,
    banner: null,
  };
}

export function replaceItem(state: ConsoleState, item: ReviewItem): ConsoleState {
  const items = state.items.map((existing) => (existing.word === item.word ? item : existing));
  return { ...state, items };
}

export function selectedItem(state: ConsoleState): ReviewItem | null {
  return state.selected >= 0 ? (state.items[state.selected] ?? null) : null;
}

export function nextPendingIndex(items: ReviewItem[], from: number): number {
  for (let offset = 1; offset <= items.length; offset++) {
    const i = (from + offset) % items.length;
    if (items[i].status === 'pending' || items[i].status === 'unsure') return i;
  }
  return from;
}

export function verdictAllowed(item: ReviewItem): boolean {
  return item.status === 'pending' || item.status === 'unsure';
}

export function confirmedUnpromoted(items: ReviewItem[]): string[] {
  return items.filter((i) => i.status === 'confirmed' && i.mapped_keyword).map((i) => i.word);
}

// Candidate keyword options for the mapping control come from the
// identification distribution (its classes are exactly the run's keywords).
export function keywordOptions(item: ReviewItem | null): string[] {
  if (!item?.distribution) return [];
  return Object.keys(item.distribution.probabilities).sort();
}

export type Bar = { label: string; probability: number; percent: number };

// Whole-number percentages that sum to exactly 100 (largest remainder), so
// the rendered bars always visually account for the full distribution.
export function distributionBars(probabilities: Record<string, number>): Bar[] {
  const entries = Object.entries(probabilities)
    .filter(([, p]) => p > 0)
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]));
  if (!entries.length) return [];
  const raw = entries.map(([, p]) => p * 100);
  const floors = raw.map(Math.floor);
  let remainder = 100 - floors.reduce((a, b) => a + b, 0);
  const order = raw
    .map((value, i) => ({ i, frac: value - floors[i] }))
    .sort((a, b) => b.frac - a.frac || a.i - b.i);
  const percents = [...floors];
  for (const { i } of order) {
    if (remainder <= 0) break;
    percents[i] += 1;
    remainder -= 1;
  }
  return entries.map(([label, probability], i) => ({
    label,
    probability,
    percent: percents[i],
  }));
}
