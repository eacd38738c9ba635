/** Retrain trigger + 2-second polling until the job reaches a terminal
 * state. A 409 means another job is active: the button stays disabled. */

import { ApiClient, ApiError } from './api.js';
import type { MetricsReport, RetrainJob } from './types.js';

export const POLL_INTERVAL_MS = 2000;

export type RetrainOutcome =
  | { kind: 'succeeded'; version: string; metrics: MetricsReport | null }
  | { kind: 'failed'; error: string }
  | { kind: 'already_active'; jobId: string | null };

export interface RetrainHooks {
  onUpdate?: (job: RetrainJob) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function runRetrain(api: ApiClient, hooks: RetrainHooks = {}): Promise<RetrainOutcome> {
  const sleep = hooks.sleep ?? defaultSleep;
  let job: RetrainJob;
  try {
    job = await api.startRetrain();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      const detail = err.detail as { job_id?: string } | null;
      return { kind: 'already_active', jobId: detail?.job_id ?? null };
    }
    throw err;
  }
  hooks.onUpdate?.(job);
  while (job.state === 'queued' || job.state === 'running') {
    await sleep(POLL_INTERVAL_MS);
    job = await api.getRetrainJob(job.job_id);
    hooks.onUpdate?.(job);
  }
  if (job.state === 'failed') {
    return { kind: 'failed', error: job.error ?? 'retrain failed' };
  }
  // refreshed metrics accompany the success banner; absence is not fatal
  let metrics: MetricsReport | null = null;
  try {
    metrics = await api.getMetrics();
  } catch {
    metrics = null;
  }
  return { kind: 'succeeded', version: job.snapshot_version ?? '?', metrics };
}
