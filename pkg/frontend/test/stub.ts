/** In-memory stand-in for /api/v1, driven through the same FetchLike seam
 * the real client uses. Behavior mirrors the backend contract: admin token
 * on POSTs, human labels shadowing predictions, single-flight retrain. */

import type { FetchLike } from '../src/api.js';
import type {
  LabelMap,
  MetricsReport,
  RetrainJob,
  TrendBucket,
  TweetItem,
} from '../src/types.js';
import { TOPICS } from './fixtures.js';

interface PostedAnnotation {
  tweet_id: string;
  rater_id: string;
  labels: LabelMap;
  status: string;
}

export class StubBackend {
  tweets: TweetItem[] = [];
  trendBuckets: TrendBucket[] = [];
  modelVersion: string | null = 'v1';
  adminToken = 'tok';
  annotationLog: PostedAnnotation[] = [];
  calls: string[] = [];
  /** Scripted job states returned by successive GET /retrain/{id} polls. */
  retrainPollStates: RetrainJob[] = [];
  retrainStart: RetrainJob | { status: 409; job_id: string } | null = null;
  metrics: MetricsReport | null = null;
  failTrends = false;

  private pollCursor = 0;

  readonly fetch: FetchLike = async (url, init) => {
    const u = new URL(url, 'http://stub');
    const method = (init?.method ?? 'GET').toUpperCase();
    this.calls.push(`${method} ${u.pathname}${u.search}`);
    const route = u.pathname.replace(/^\/api\/v1/, '');

    if (method === 'GET' && route === '/trends') {
      if (this.failTrends) return json(500, { detail: 'backend exploded' });
      return json(200, { buckets: this.trendBuckets, model_version: this.modelVersion });
    }
    if (method === 'GET' && route === '/tweets') {
      const status = u.searchParams.get('status');
      const limit = Number(u.searchParams.get('limit') ?? '50');
      const offset = Number(u.searchParams.get('offset') ?? '0');
      const matching = this.tweets.filter((t) => !status || t.status === status);
      return json(200, {
        items: matching.slice(offset, offset + limit),
        total: matching.length,
        limit,
        offset,
        model_version: this.modelVersion,
      });
    }
    if (method === 'GET' && route === '/model') {
      if (!this.modelVersion) return json(404, { detail: 'no model deployed' });
      return json(200, {
        version: this.modelVersion,
        trained_on: 'fixture',
        extractor: { kind: 'hashed_ngrams' },
        topics: TOPICS,
        thresholds: Object.fromEntries(TOPICS.map((t) => [t, 0.5])),
      });
    }
    if (method === 'GET' && route === '/metrics') {
      if (!this.metrics) return json(404, { detail: 'no evaluation report available' });
      return json(200, this.metrics);
    }
    if (method === 'POST' && route === '/annotations') {
      const denied = this.checkToken(init);
      if (denied) return denied;
      const body = JSON.parse(String(init?.body)) as PostedAnnotation;
      this.annotationLog.push(body);
      const tweet = this.tweets.find((t) => t.id === body.tweet_id);
      if (!tweet) return json(404, { detail: `unknown tweet ${body.tweet_id}` });
      tweet.labels = body.labels;
      tweet.status = (body.status ?? 'human_validated') as TweetItem['status'];
      tweet.rater_id = body.rater_id;
      return json(200, {
        tweet_id: body.tweet_id,
        rater_id: body.rater_id,
        labels: body.labels,
        status: tweet.status,
        updated_at: '2021-09-16T00:00:00+00:00',
        model_version: this.modelVersion,
      });
    }
    if (method === 'POST' && route === '/retrain') {
      const denied = this.checkToken(init);
      if (denied) return denied;
      const start = this.retrainStart;
      if (start && 'status' in start) {
        return json(409, { detail: { message: 'a retrain job is already active', job_id: start.job_id } });
      }
      return json(200, start ?? jobState('job-1', 'running'));
    }
    const poll = route.match(/^\/retrain\/(.+)$/);
    if (method === 'GET' && poll) {
      const next = this.retrainPollStates[this.pollCursor];
      if (!next) return json(404, { detail: `unknown job ${poll[1]}` });
      this.pollCursor = Math.min(this.pollCursor + 1, this.retrainPollStates.length - 1);
      return json(200, next);
    }
    return json(404, { detail: `unrouted ${method} ${route}` });
  };

  private checkToken(init?: RequestInit): Response | null {
    const headers = (init?.headers ?? {}) as Record<string, string>;
    if (headers['X-Admin-Token'] !== this.adminToken) {
      return json(401, { detail: 'missing or invalid admin token' });
    }
    return null;
  }
}

export function jobState(
  jobId: string,
  state: RetrainJob['state'],
  extra: Partial<RetrainJob> = {},
): RetrainJob {
  return {
    job_id: jobId,
    state,
    started_at: '2021-09-16T00:00:00+00:00',
    finished_at: null,
    snapshot_version: null,
    error: null,
    ...extra,
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}
