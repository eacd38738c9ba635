/** Payload shapes of the /api/v1 backend. The dashboard never computes
 * label or metric values itself; everything here is displayed as received. */

export type TopicName = string;

export type LabelMap = Record<TopicName, boolean>;

export type AnnotationStatus = 'model_predicted' | 'human_validated' | 'proofread';

export interface TweetItem {
  id: string;
  created_at: string;
  text: string;
  lang: string;
  labels: LabelMap | null;
  status: AnnotationStatus | null;
  rater_id: string | null;
}

export interface TweetPage {
  items: TweetItem[];
  total: number;
  limit: number;
  offset: number;
  model_version: string | null;
}

export interface TrendBucket {
  window_start: string;
  granularity: 'day' | 'week';
  topic: TopicName;
  count: number;
}

export interface TrendsResponse {
  buckets: TrendBucket[];
  model_version: string | null;
}

export interface ModelInfo {
  version: string;
  trained_on: string;
  extractor: Record<string, unknown>;
  topics: TopicName[];
  thresholds: Record<TopicName, number>;
}

export interface AnnotationRecord {
  tweet_id: string;
  rater_id: string;
  labels: LabelMap;
  status: AnnotationStatus;
  updated_at: string;
  model_version: string | null;
}

export interface RetrainJob {
  job_id: string;
  state: 'queued' | 'running' | 'succeeded' | 'failed';
  started_at: string | null;
  finished_at: string | null;
  snapshot_version: string | null;
  error: string | null;
}

export interface MetricsReport {
  per_label: { label: TopicName; f1: number; aupr: number | null; support: number }[];
  averaged: {
    micro_f1: number;
    macro_f1: number;
    weighted_f1: number;
    macro_aupr: number | null;
    weighted_aupr: number | null;
  };
  model_version?: string;
}

export interface KappaReport {
  per_label: Record<TopicName, number | null>;
  mean_kappa: number;
  raters: number;
  items: number;
}
