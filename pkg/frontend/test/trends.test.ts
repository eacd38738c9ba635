import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { initialState, withTopics } from '../src/state.js';
import { buildTrendSeries, loadTrendView, renderTrendSvg } from '../src/trends.js';
import { TOPICS, TREND_BUCKETS } from './fixtures.js';
import { StubBackend } from './stub.js';

function makeState() {
  return withTopics(initialState(), TOPICS);
}

describe('trend pass-through fidelity', () => {
  it('series values are exactly the fixture bucket values (fixture diff)', () => {
    const series = buildTrendSeries(TREND_BUCKETS, ['Vaccination', 'Lockdown']);
    const flattened = series.flatMap((s) =>
      s.points.map((p) => ({ window_start: p.windowStart, topic: s.topic, count: p.count })),
    );
    const expected = [...TREND_BUCKETS].sort((a, b) =>
      a.topic === b.topic ? 0 : a.topic === 'Vaccination' ? -1 : 1,
    ).map(({ granularity, ...rest }) => rest);
    // byte-level diff of the numbers the UI will show vs the recorded fixture
    expect(JSON.stringify(flattened)).toBe(JSON.stringify(expected));
  });

  it('a selected topic with no buckets yields an empty series, not zeros', () => {
    const series = buildTrendSeries(TREND_BUCKETS, ['Humor']);
    expect(series).toEqual([{ topic: 'Humor', points: [] }]);
  });

  it('loadTrendView returns the API buckets untouched', async () => {
    const stub = new StubBackend();
    stub.trendBuckets = TREND_BUCKETS;
    const api = new ApiClient('/api/v1', stub.fetch);
    const view = await loadTrendView(api, makeState());
    expect(view.kind).toBe('ready');
    if (view.kind !== 'ready') return;
    expect(view.modelVersion).toBe('v1');
    const vacc = view.series.find((s) => s.topic === 'Vaccination');
    expect(vacc?.points.map((p) => p.count)).toEqual([3, 17, 9, 0]);
  });

  it('empty bucket list becomes the no-data state', async () => {
    const stub = new StubBackend();
    const api = new ApiClient('/api/v1', stub.fetch);
    const view = await loadTrendView(api, makeState());
    expect(view).toEqual({ kind: 'empty', modelVersion: 'v1' });
  });

  it('API failure yields an error view (banner material), never a blank chart', async () => {
    const stub = new StubBackend();
    stub.failTrends = true;
    const api = new ApiClient('/api/v1', stub.fetch);
    const view = await loadTrendView(api, makeState());
    expect(view.kind).toBe('error');
    if (view.kind === 'error') expect(view.message).toMatch(/500/);
  });

  it('SVG labels embed the raw counts, untransformed', () => {
    const series = buildTrendSeries(TREND_BUCKETS, ['Vaccination', 'Lockdown']);
    const svg = renderTrendSvg(series);
    for (const bucket of TREND_BUCKETS) {
      expect(svg).toContain(`${bucket.topic} ${bucket.window_start}: ${bucket.count}</title>`);
    }
  });

  it('query carries the state range and granularity verbatim', async () => {
    const stub = new StubBackend();
    stub.trendBuckets = TREND_BUCKETS;
    const api = new ApiClient('/api/v1', stub.fetch);
    const state = {
      ...makeState(),
      granularity: 'day' as const,
      dateFrom: '2021-09-01T00:00:00+00:00',
      dateTo: '2021-09-30T00:00:00+00:00',
    };
    await loadTrendView(api, state);
    expect(stub.calls[0]).toContain('granularity=day');
    expect(stub.calls[0]).toContain('from=2021-09-01');
    expect(stub.calls[0]).toContain('to=2021-09-30');
  });
});
