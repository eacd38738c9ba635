/** Trend view: one series per selected topic, bucket values shown exactly as
 * the API returned them. No smoothing, no rescaling of values, no client-side
 * aggregation; the only arithmetic here maps counts to pixel coordinates. */

import type { ApiClient } from './api.js';
import type { DashboardState } from './state.js';
import type { TrendBucket } from './types.js';

export interface TrendPoint {
  windowStart: string;
  count: number;
}

export interface TrendSeries {
  topic: string;
  points: TrendPoint[];
}

export type TrendView =
  | { kind: 'loading' }
  | { kind: 'empty'; modelVersion: string | null }
  | { kind: 'ready'; series: TrendSeries[]; modelVersion: string | null }
  | { kind: 'error'; message: string };

/** Group buckets into per-topic series, preserving API order and values. */
export function buildTrendSeries(buckets: TrendBucket[], selectedTopics: string[]): TrendSeries[] {
  const byTopic = new Map<string, TrendPoint[]>();
  for (const topic of selectedTopics) byTopic.set(topic, []);
  for (const bucket of buckets) {
    const points = byTopic.get(bucket.topic);
    if (points) points.push({ windowStart: bucket.window_start, count: bucket.count });
  }
  return selectedTopics.map((topic) => ({ topic, points: byTopic.get(topic) ?? [] }));
}

export async function loadTrendView(api: ApiClient, state: DashboardState): Promise<TrendView> {
  try {
    const resp = await api.getTrends({
      granularity: state.granularity,
      from: state.dateFrom ?? undefined,
      to: state.dateTo ?? undefined,
    });
    if (resp.buckets.length === 0) {
      return { kind: 'empty', modelVersion: resp.model_version };
    }
    return {
      kind: 'ready',
      series: buildTrendSeries(resp.buckets, state.selectedTopics),
      modelVersion: resp.model_version,
    };
  } catch (err) {
    return { kind: 'error', message: err instanceof Error ? err.message : String(err) };
  }
}

const PALETTE = ['#4363d8', '#e6194b', '#3cb44b', '#f58231',
                 '#911eb4', '#46f0f0', '#808000', '#9a6324'];

/** Render series as an inline SVG line chart. Count labels embed the raw
 * values; coordinates are presentation only. */
export function renderTrendSvg(series: TrendSeries[], width = 720, height = 240): string {
  const windows = [...new Set(series.flatMap((s) => s.points.map((p) => p.windowStart)))].sort();
  const maxCount = Math.max(1, ...series.flatMap((s) => s.points.map((p) => p.count)));
  const pad = 28;
  const xOf = (w: string) =>
    pad + (windows.length < 2 ? 0 : (windows.indexOf(w) * (width - 2 * pad)) / (windows.length - 1));
  const yOf = (count: number) => height - pad - (count * (height - 2 * pad)) / maxCount;

  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" role="img">`,
    `<line x1="${pad}" y1="${height - pad}" x2="${width - pad}" y2="${height - pad}" stroke="#999"/>`,
  ];
  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const coords = s.points.map((p) => `${xOf(p.windowStart).toFixed(1)},${yOf(p.count).toFixed(1)}`);
    if (coords.length > 1) {
      parts.push(`<polyline fill="none" stroke="${color}" stroke-width="2" points="${coords.join(' ')}"/>`);
    }
    for (const p of s.points) {
      parts.push(
        `<circle cx="${xOf(p.windowStart).toFixed(1)}" cy="${yOf(p.count).toFixed(1)}" r="3" fill="${color}">`
        + `<title>${s.topic} ${p.windowStart}: ${p.count}</title></circle>`,
      );
    }
  });
  parts.push('</svg>');
  return parts.join('');
}
