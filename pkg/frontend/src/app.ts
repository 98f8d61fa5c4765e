// Controller: wires the API client, state, and rendered DOM together.

import { ApiError, ReviewClient, Verdict } from './api.js';
import { renderApp } from './render.js';
import {
  ConsoleState,
  applyQueuePage,
  initialState,
  nextPendingIndex,
  replaceItem,
  selectedItem,
  verdictAllowed,
} from './state.js';

const POLL_INTERVAL_MS = 500;

export class Console {
  state: ConsoleState = initialState();

  constructor(
    private root: HTMLElement,
    private client: ReviewClient,
    private pollInterval = POLL_INTERVAL_MS,
  ) {}

  async init(): Promise<void> {
    this.bindKeys();
    try {
      const { runs } = await this.client.listRuns();
      this.state = { ...this.state, runs };
      const first = runs[0]?.run_id ?? null;
      if (first) {
        await this.loadQueue(first, 1);
        return;
      }
    } catch (err) {
      this.state = { ...this.state, banner: describe(err) };
    }
    this.render();
  }

  async loadQueue(runId: string, page: number): Promise<void> {
    try {
      const queue = await this.client.listCandidates(runId, page, this.state.pageSize);
      this.state = applyQueuePage(this.state, queue);
      if (this.state.selected < 0 && queue.items.length) {
        this.state = { ...this.state, selected: 0 };
      }
    } catch (err) {
      this.state = { ...this.state, banner: describe(err) };
    }
    this.render();
  }

  async refresh(): Promise<void> {
    if (this.state.runId) await this.loadQueue(this.state.runId, this.state.page);
  }

  select(index: number): void {
    if (index < 0 || index >= this.state.items.length) return;
    this.state = { ...this.state, selected: index, draftKeyword: '' };
    this.render();
  }

  move(delta: number): void {
    if (!this.state.items.length) return;
    const next = Math.min(
      Math.max(this.state.selected + delta, 0),
      this.state.items.length - 1,
    );
    this.select(next);
  }

  async submitAndAdvance(verdict: Verdict): Promise<void> {
    const item = selectedItem(this.state);
    if (!item || !this.state.runId || !verdictAllowed(item)) return;
    const mapped = this.state.draftKeyword.trim() || undefined;
    try {
      const updated = await this.client.submitVerdict(this.state.runId, item.word, verdict, mapped);
      this.state = replaceItem(this.state, updated);
      this.state = {
        ...this.state,
        banner: null,
        draftKeyword: '',
        selected: nextPendingIndex(this.state.items, this.state.selected),
      };
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // someone changed this item server-side: refetch and let the
        // moderator retry against current state
        this.state = { ...this.state, banner: `item changed on server: ${err.detail}; refreshed, please retry` };
        await this.refresh();
        return;
      }
      this.state = { ...this.state, banner: describe(err) };
    }
    this.render();
  }

  async promoteAndRerun(): Promise<void> {
    if (!this.state.runId) return;
    const sourceRun = this.state.runId;
    this.state = { ...this.state, rerun: { phase: 'promoting' }, banner: null };
    this.render();
    try {
      await this.client.promote(sourceRun);
      const { new_run_id } = await this.client.rerun(sourceRun);
      this.state = { ...this.state, rerun: { phase: 'polling', newRunId: new_run_id } };
      this.render();
      await this.pollRerun(sourceRun, new_run_id);
    } catch (err) {
      this.state = { ...this.state, rerun: { phase: 'failed', message: describe(err) } };
      this.render();
    }
  }

  private async pollRerun(sourceRun: string, newRunId: string): Promise<void> {
    for (;;) {
      const status = await this.client.status(sourceRun);
      if (status.rerun && status.rerun.status === 'failed') {
        this.state = {
          ...this.state,
          rerun: { phase: 'failed', message: status.rerun.error ?? 'rerun failed' },
        };
        this.render();
        return;
      }
      if (status.rerun && status.rerun.status === 'complete') break;
      await sleep(this.pollInterval);
    }
    const { runs } = await this.client.listRuns();
    this.state = { ...this.state, runs, rerun: { phase: 'idle' }, selected: 0 };
    await this.loadQueue(newRunId, 1);
  }

  render(): void {
    this.root.innerHTML = renderApp(this.state);
    this.bindDom();
  }

  private bindDom(): void {
    this.root.querySelectorAll<HTMLTableRowElement>('tr[data-index]').forEach((row) => {
      row.addEventListener('click', () => this.select(Number(row.dataset.index)));
    });
    const picker = this.root.querySelector<HTMLSelectElement>('#run-picker');
    picker?.addEventListener('change', () => void this.loadQueue(picker.value, 1));
    this.root
      .querySelector('#prev-page')
      ?.addEventListener('click', () => void this.loadQueue(this.state.runId!, this.state.page - 1));
    this.root
      .querySelector('#next-page')
      ?.addEventListener('click', () => void this.loadQueue(this.state.runId!, this.state.page + 1));
    this.root
      .querySelector('#confirm-btn')
      ?.addEventListener('click', () => void this.submitAndAdvance('confirmed'));
    this.root
      .querySelector('#reject-btn')
      ?.addEventListener('click', () => void this.submitAndAdvance('rejected'));
    this.root
      .querySelector('#unsure-btn')
      ?.addEventListener('click', () => void this.submitAndAdvance('unsure'));
    this.root
      .querySelector('#promote-btn')
      ?.addEventListener('click', () => void this.promoteAndRerun());
    this.root.querySelector('#refresh-btn')?.addEventListener('click', () => void this.refresh());
    const mapInput = this.root.querySelector<HTMLInputElement>('#map-input');
    mapInput?.addEventListener('input', () => {
      // track the draft without re-rendering so typing keeps focus
      this.state = { ...this.state, draftKeyword: mapInput.value };
    });
  }

  private bindKeys(): void {
    this.root.ownerDocument.addEventListener('keydown', (event) => {
      const target = event.target as HTMLElement | null;
      if (target?.tagName === 'INPUT' || target?.tagName === 'SELECT') {
        if (event.key === 'Escape') (target as HTMLInputElement).blur();
        return;
      }
      switch (event.key) {
        case 'j':
          this.move(1);
          break;
        case 'k':
          this.move(-1);
          break;
        case 'c':
          void this.submitAndAdvance('confirmed');
          break;
        case 'x':
          void this.submitAndAdvance('rejected');
          break;
        case 'u':
          void this.submitAndAdvance('unsure');
          break;
        case 'm': {
          event.preventDefault();
          this.root.querySelector<HTMLInputElement>('#map-input')?.focus();
          break;
        }
        case 'p':
          void this.promoteAndRerun();
          break;
        case 'r':
          void this.refresh();
          break;
      }
    });
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return err.detail;
  return String(err);
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
