// HTML rendering for the console views. Pure string builders; the
// controller owns event binding.

import type { ReviewItem } from './api.js';
import {
  ConsoleState,
  distributionBars,
  keywordOptions,
  selectedItem,
  verdictAllowed,
} from './state.js';

export function escapeHtml(value: unknown): string {
  return String(value ?? '')
    .replaceAll('&', '&amp;')
    .replaceAll('<', '&lt;')
    .replaceAll('>', '&gt;')
    .replaceAll('"', '&quot;')
    .replaceAll("'", '&#039;');
}

const STATUS_CLASS: Record<string, string> = {
  pending: 'badge-pending',
  confirmed: 'badge-confirmed',
  rejected: 'badge-rejected',
  unsure: 'badge-unsure',
};

export function statusBadge(item: ReviewItem): string {
  const cls = STATUS_CLASS[item.status] ?? 'badge-pending';
  const mapped =
    item.status === 'confirmed' && item.mapped_keyword
      ? ` <span class="badge badge-keyword" data-testid="mapped-badge">&rarr; ${escapeHtml(item.mapped_keyword)}</span>`
      : '';
  return `<span class="badge ${cls}">${escapeHtml(item.status)}</span>${mapped}`;
}

export function renderRunPicker(state: ConsoleState): string {
  if (!state.runs.length) {
    return '<p class="empty" data-testid="no-runs">No runs found. Run a detection first.</p>';
  }
  const options = state.runs
    .map((run) => {
      const selected = run.run_id === state.runId ? ' selected' : '';
      return `<option value="${escapeHtml(run.run_id)}"${selected}>${escapeHtml(run.run_id)}</option>`;
    })
    .join('');
  return `<label>run <select id="run-picker" data-testid="run-picker">${options}</select></label>`;
}

export function renderQueue(state: ConsoleState): string {
  if (!state.items.length) {
    return '<p class="empty" data-testid="empty-queue">No candidates on this page. The queue is empty.</p>';
  }
  const rows = state.items
    .map((item, i) => {
      const cls = i === state.selected ? 'row selected' : 'row';
      return `
        <tr class="${cls}" data-word="${escapeHtml(item.word)}" data-index="${i}" data-testid="queue-row">
          <td class="rank">${item.rank}</td>
          <td class="word">${escapeHtml(item.word)}</td>
          <td class="weight">${item.weight.toFixed(4)}</td>
          <td class="support">${item.support}</td>
          <td class="status">${statusBadge(item)}</td>
        </tr>`;
    })
    .join('');
  const pages = Math.max(1, Math.ceil(state.total / state.pageSize));
  return `
    <table class="queue" data-testid="queue-table">
      <thead><tr><th>rank</th><th>word</th><th>weight</th><th>support</th><th>status</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>
    <div class="pager">
      <button id="prev-page" ${state.page <= 1 ? 'disabled' : ''}>&larr; prev</button>
      <span data-testid="page-label">page ${state.page} / ${pages} (${state.total} candidates)</span>
      <button id="next-page" ${state.page >= pages ? 'disabled' : ''}>next &rarr;</button>
    </div>`;
}

function renderContexts(item: ReviewItem): string {
  if (!item.contexts.length) {
    return '<p class="empty">No informative contexts stored for this candidate.</p>';
  }
  const rows = item.contexts
    .map((ctx) => {
      const words = ctx.tokens
        .map((tok, i) =>
          i === ctx.highlight
            ? `<mark data-testid="highlight">${escapeHtml(tok)}</mark>`
            : escapeHtml(tok),
        )
        .join(' ');
      return `<li class="context">${words}</li>`;
    })
    .join('');
  return `<ol class="contexts" data-testid="contexts">${rows}</ol>`;
}

function renderDistribution(item: ReviewItem): string {
  const dist = item.distribution;
  if (!dist) {
    return '<p class="empty">No identification distribution for this candidate yet.</p>';
  }
  if (dist.n_kept === 0) {
    return `<p class="notice" data-testid="cover-only">${escapeHtml(
      dist.flag ?? 'non-euphemistic usage only',
    )} (${dist.n_total} contexts, 0 kept)</p>`;
  }
  const bars = distributionBars(dist.probabilities)
    .map(
      (bar) => `
      <div class="bar-row" data-testid="bar">
        <span class="bar-label">${escapeHtml(bar.label)}</span>
        <div class="bar-track"><div class="bar-fill" style="width:${bar.percent}%"></div></div>
        <span class="bar-value">${bar.percent}%</span>
      </div>`,
    )
    .join('');
  return `
    <div class="distribution" data-testid="distribution">
      ${bars}
      <p class="fineprint">${dist.n_kept} of ${dist.n_total} contexts kept</p>
    </div>`;
}

export function renderItemPanel(state: ConsoleState): string {
  const item = selectedItem(state);
  if (!item) {
    return '<p class="empty" data-testid="no-selection">Select a candidate to review.</p>';
  }
  const enabled = verdictAllowed(item);
  const options = keywordOptions(item)
    .map((kw) => `<option value="${escapeHtml(kw)}"></option>`)
    .join('');
  const bigrams = item.bigrams.length
    ? `<p class="fineprint">frequent phrases: ${item.bigrams.map(escapeHtml).join(', ')}</p>`
    : '';
  return `
    <h2 data-testid="item-word">#${item.rank} ${escapeHtml(item.word)}</h2>
    <p>${statusBadge(item)} weight ${item.weight.toFixed(4)}, ${item.support} supporting contexts</p>
    ${bigrams}
    <h3>Contexts</h3>
    ${renderContexts(item)}
    <h3>Identification</h3>
    ${renderDistribution(item)}
    <h3>Verdict</h3>
    <div class="verdict-controls">
      <input id="map-input" data-testid="map-input" list="keyword-options"
             placeholder="map to keyword (m)" value="${escapeHtml(state.draftKeyword)}"
             ${enabled ? '' : 'disabled'} />
      <datalist id="keyword-options">${options}</datalist>
      <button id="confirm-btn" data-testid="confirm-btn" ${enabled ? '' : 'disabled'}>confirm (c)</button>
      <button id="reject-btn" data-testid="reject-btn" ${enabled ? '' : 'disabled'}>reject (x)</button>
      <button id="unsure-btn" data-testid="unsure-btn" ${enabled ? '' : 'disabled'}>unsure (u)</button>
    </div>`;
}

export function renderToolbar(state: ConsoleState): string {
  const rerun = state.rerun;
  let progress = '';
  if (rerun.phase === 'promoting') {
    progress = '<span class="progress" data-testid="rerun-progress">promoting&hellip;</span>';
  } else if (rerun.phase === 'polling') {
    progress = `<span class="progress" data-testid="rerun-progress">re-detecting as ${escapeHtml(
      rerun.newRunId,
    )}&hellip;</span>`;
  } else if (rerun.phase === 'failed') {
    progress = `<span class="error" data-testid="rerun-progress">${escapeHtml(rerun.message)}</span>`;
  }
  return `
    ${renderRunPicker(state)}
    <button id="promote-btn" data-testid="promote-btn">promote confirmed + rerun (p)</button>
    <button id="refresh-btn" data-testid="refresh-btn">refresh (r)</button>
    ${progress}`;
}

export function renderApp(state: ConsoleState): string {
  const banner = state.banner
    ? `<div class="banner" data-testid="banner">${escapeHtml(state.banner)}</div>`
    : '';
  return `
    <header>
      <h1>euphemism review</h1>
      <div class="toolbar">${renderToolbar(state)}</div>
    </header>
    ${banner}
    <main>
      <section class="queue-pane">${renderQueue(state)}</section>
      <section class="item-pane">${renderItemPanel(state)}</section>
    </main>
    <footer class="fineprint">
      keys: j/k move &middot; c confirm &middot; x reject &middot; u unsure &middot; m map &middot; p promote+rerun &middot; r refresh
    </footer>`;
}
