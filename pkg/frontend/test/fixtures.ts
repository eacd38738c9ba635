/** Recorded API fixtures: shapes captured from the backend's /api/v1. */

import type { TrendBucket, TweetItem } from '../src/types.js';

export const TOPICS = [
  'COVID Stats',
  'Vaccination',
  'COVID Politics',
  'Humor',
  'Lockdown',
  'Civic Views',
  'Life During Pandemic',
  'Waves and Variants',
];

export function labelMap(...positive: string[]): Record<string, boolean> {
  return Object.fromEntries(TOPICS.map((t) => [t, positive.includes(t)]));
}

/** Two topics over four ISO weeks, exactly as the trends endpoint returns
 * them (zero-filled, window-major, canonical topic order). */
export const TREND_BUCKETS: TrendBucket[] = [
  { window_start: '2021-09-06T00:00:00+00:00', granularity: 'week', topic: 'Vaccination', count: 3 },
  { window_start: '2021-09-06T00:00:00+00:00', granularity: 'week', topic: 'Lockdown', count: 1 },
  { window_start: '2021-09-13T00:00:00+00:00', granularity: 'week', topic: 'Vaccination', count: 17 },
  { window_start: '2021-09-13T00:00:00+00:00', granularity: 'week', topic: 'Lockdown', count: 0 },
  { window_start: '2021-09-20T00:00:00+00:00', granularity: 'week', topic: 'Vaccination', count: 9 },
  { window_start: '2021-09-20T00:00:00+00:00', granularity: 'week', topic: 'Lockdown', count: 4 },
  { window_start: '2021-09-27T00:00:00+00:00', granularity: 'week', topic: 'Vaccination', count: 0 },
  { window_start: '2021-09-27T00:00:00+00:00', granularity: 'week', topic: 'Lockdown', count: 2 },
];

export function makeTweets(): TweetItem[] {
  return [
    {
      id: 'tw1',
      created_at: '2021-09-15T10:00:00+00:00',
      text: 'कोरोना खोप अभियान सुरु भयो',
      lang: 'ne',
      labels: labelMap('Vaccination'),
      status: 'model_predicted',
      rater_id: 'model:v1',
    },
    {
      id: 'tw2',
      created_at: '2021-09-14T09:00:00+00:00',
      text: 'लकडाउन खुल्यो आज देशभर',
      lang: 'ne',
      labels: labelMap('Lockdown'),
      status: 'model_predicted',
      rater_id: 'model:v1',
    },
    {
      id: 'tw3',
      created_at: '2021-09-13T08:00:00+00:00',
      text: 'सरकारको नयाँ निर्णय आयो है',
      lang: 'ne',
      labels: labelMap('COVID Politics'),
      status: 'human_validated',
      rater_id: 'alice',
    },
  ];
}
