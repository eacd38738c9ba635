/** Typed client for /api/v1. The admin token lives in memory only. */

import type {
  AnnotationRecord,
  AnnotationStatus,
  KappaReport,
  LabelMap,
  MetricsReport,
  ModelInfo,
  RetrainJob,
  TrendsResponse,
  TweetPage,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: unknown,
  ) {
    super(`API error ${status}`);
  }
}

export interface TweetQuery {
  topic?: string;
  status?: AnnotationStatus;
  from?: string;
  to?: string;
  limit?: number;
  offset?: number;
}

export interface TrendQuery {
  granularity: 'day' | 'week';
  topic?: string;
  from?: string;
  to?: string;
}

export class ApiClient {
  private adminToken: string | null = null;

  constructor(
    private baseUrl: string = '/api/v1',
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  setAdminToken(token: string): void {
    this.adminToken = token;
  }

  get hasToken(): boolean {
    return this.adminToken !== null;
  }

  private async request<T>(method: string, path: string, body?: unknown, admin = false): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) headers['Content-Type'] = 'application/json';
    if (admin && this.adminToken) headers['X-Admin-Token'] = this.adminToken;
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => null);
    if (!resp.ok) {
      throw new ApiError(resp.status, payload && (payload as { detail?: unknown }).detail);
    }
    return payload as T;
  }

  private query(params: Record<string, string | number | undefined>): string {
    const parts = Object.entries(params)
      .filter(([, v]) => v !== undefined)
      .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
    return parts.length ? `?${parts.join('&')}` : '';
  }

  getTweets(q: TweetQuery = {}): Promise<TweetPage> {
    return this.request<TweetPage>('GET', `/tweets${this.query({ ...q })}`);
  }

  getTrends(q: TrendQuery): Promise<TrendsResponse> {
    return this.request<TrendsResponse>('GET', `/trends${this.query({ ...q })}`);
  }

  getModel(): Promise<ModelInfo> {
    return this.request<ModelInfo>('GET', '/model');
  }

  getMetrics(): Promise<MetricsReport> {
    return this.request<MetricsReport>('GET', '/metrics');
  }

  getKappa(): Promise<KappaReport> {
    return this.request<KappaReport>('GET', '/kappa');
  }

  postAnnotation(
    tweetId: string,
    raterId: string,
    labels: LabelMap,
    status?: 'human_validated' | 'proofread',
  ): Promise<AnnotationRecord> {
    return this.request<AnnotationRecord>(
      'POST',
      '/annotations',
      { tweet_id: tweetId, rater_id: raterId, labels, ...(status ? { status } : {}) },
      true,
    );
  }

  startRetrain(): Promise<RetrainJob> {
    return this.request<RetrainJob>('POST', '/retrain', {}, true);
  }

  getRetrainJob(jobId: string): Promise<RetrainJob> {
    return this.request<RetrainJob>('GET', `/retrain/${encodeURIComponent(jobId)}`);
  }
}
