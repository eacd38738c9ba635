/** Browser wiring: filters, trend chart, review queue, retrain button.
 * All logic lives in the tested modules; this file only touches the DOM. */

import { ApiClient, ApiError } from './api.js';
import { runRetrain } from './retrain.js';
import { ReviewQueue, SaveConflict } from './review.js';
import {
  DashboardState,
  initialState,
  toggleTopic,
  withGranularity,
  withReviewMode,
  withTopics,
} from './state.js';
import { loadTrendView, renderTrendSvg } from './trends.js';
import type { LabelMap } from './types.js';

const api = new ApiClient('/api/v1');
let state: DashboardState = initialState();
let queue: ReviewQueue | null = null;
let currentForm: LabelMap = {};
let currentTweetId: string | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function banner(message: string, tone: 'info' | 'error', retry?: () => void): void {
  const box = el<HTMLDivElement>('banner');
  box.className = `banner ${tone}`;
  box.textContent = message;
  if (retry) {
    const button = document.createElement('button');
    button.textContent = 'Retry';
    button.onclick = retry;
    box.appendChild(button);
  }
  box.hidden = false;
}

function clearBanner(): void {
  el<HTMLDivElement>('banner').hidden = true;
}

async function refreshTrends(): Promise<void> {
  const view = await loadTrendView(api, state);
  const chart = el<HTMLDivElement>('chart');
  const meta = el<HTMLDivElement>('chart-meta');
  if (view.kind === 'error') {
    banner(`Could not load trends: ${view.message}`, 'error', () => void refreshTrends());
    return; // the previous chart stays visible, never a blank panel
  }
  clearBanner();
  if (view.kind === 'empty') {
    chart.innerHTML = '<p class="empty">No data in range</p>';
    meta.textContent = view.modelVersion ? `model ${view.modelVersion}` : 'no model yet';
    return;
  }
  if (view.kind === 'ready') {
    chart.innerHTML = renderTrendSvg(view.series);
    meta.textContent = view.modelVersion ? `model ${view.modelVersion}` : '';
  }
}

function renderTopicFilters(): void {
  const box = el<HTMLDivElement>('topics');
  box.innerHTML = '';
  for (const topic of state.availableTopics) {
    const label = document.createElement('label');
    const input = document.createElement('input');
    input.type = 'checkbox';
    input.checked = state.selectedTopics.includes(topic);
    input.onchange = () => {
      state = toggleTopic(state, topic);
      void refreshTrends();
    };
    label.append(input, ` ${topic}`);
    box.appendChild(label);
  }
}

async function refreshQueue(): Promise<void> {
  if (!queue) return;
  const view = await queue.next(state);
  const panel = el<HTMLDivElement>('queue');
  const retrain = el<HTMLButtonElement>('retrain');
  panel.innerHTML = '';
  if (view.kind === 'error') {
    banner(`Review queue unavailable: ${view.message}`, 'error', () => void refreshQueue());
    return;
  }
  if (view.kind === 'done') {
    panel.innerHTML = '<p class="empty">All caught up</p>';
    retrain.disabled = false;
    currentTweetId = null;
    return;
  }
  retrain.disabled = false;
  currentTweetId = view.tweet.id;
  currentForm = { ...view.form };
  const text = document.createElement('p');
  text.lang = 'ne';
  text.textContent = view.tweet.text;
  panel.appendChild(text);
  const info = document.createElement('p');
  info.className = 'meta';
  info.textContent = `${view.tweet.created_at} · ${view.remaining} in queue · ${view.tweet.rater_id ?? ''}`;
  panel.appendChild(info);
  for (const topic of state.availableTopics) {
    const label = document.createElement('label');
    const input = document.createElement('input');
    input.type = 'checkbox';
    input.checked = currentForm[topic] ?? false;
    input.onchange = () => {
      currentForm[topic] = input.checked;
    };
    label.append(input, ` ${topic}`);
    panel.appendChild(label);
  }
  const save = document.createElement('button');
  save.textContent = state.reviewMode === 'proofread' ? 'Mark proofread' : 'Save labels';
  save.onclick = () => void saveCurrent();
  panel.appendChild(save);
}

async function saveCurrent(): Promise<void> {
  if (!queue || !currentTweetId) return;
  try {
    await queue.save(state, currentTweetId, currentForm);
    clearBanner();
    await refreshQueue();
  } catch (err) {
    if (err instanceof SaveConflict) {
      banner(err.message, 'error', () => void refreshQueue());
    } else if (err instanceof ApiError && err.status === 401) {
      banner('Admin token rejected; re-enter it.', 'error');
    } else {
      banner(`Save failed: ${err instanceof Error ? err.message : err}`, 'error');
    }
  }
}

async function onRetrain(): Promise<void> {
  const button = el<HTMLButtonElement>('retrain');
  button.disabled = true;
  button.title = '';
  const outcome = await runRetrain(api, {
    onUpdate: (job) => banner(`Retrain ${job.job_id}: ${job.state}`, 'info'),
  });
  if (outcome.kind === 'already_active') {
    button.title = `job ${outcome.jobId ?? ''} is already running`;
    banner('A retrain job is already active.', 'error');
    return; // stays disabled until the queue refreshes
  }
  button.disabled = false;
  if (outcome.kind === 'failed') {
    banner(`Retrain failed: ${outcome.error}`, 'error');
    return;
  }
  const wf1 = outcome.metrics?.averaged.weighted_f1;
  banner(
    `Retrain succeeded: model ${outcome.version}` +
      (wf1 !== undefined ? ` · weighted F1 ${wf1}` : ''),
    'info',
  );
  state = { ...state, modelVersion: outcome.version };
  await Promise.all([refreshTrends(), refreshQueue()]);
}

async function boot(): Promise<void> {
  const token = window.prompt('Admin token (kept in memory only):') ?? '';
  if (token) api.setAdminToken(token);
  try {
    const model = await api.getModel();
    state = withTopics({ ...state, modelVersion: model.version }, model.topics);
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      banner('No model deployed yet; trends appear after the first retrain.', 'info');
      state = withTopics(state, []);
    } else {
      banner(`Backend unreachable: ${err instanceof Error ? err.message : err}`, 'error',
             () => void boot());
      return;
    }
  }
  queue = new ReviewQueue(api, state.availableTopics);
  renderTopicFilters();
  el<HTMLSelectElement>('granularity').onchange = (ev) => {
    state = withGranularity(state, (ev.target as HTMLSelectElement).value as 'day' | 'week');
    void refreshTrends();
  };
  el<HTMLSelectElement>('review-mode').onchange = (ev) => {
    state = withReviewMode(state, (ev.target as HTMLSelectElement).value as 'validate' | 'proofread');
    void refreshQueue();
  };
  el<HTMLButtonElement>('retrain').onclick = () => void onRetrain();
  await Promise.all([refreshTrends(), refreshQueue()]);
}

if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', () => void boot());
}
