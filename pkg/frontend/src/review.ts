/** Review queue: validate model predictions or proofread validated records.
 * The form is pre-checked with the record's labels exactly as returned; a
 * save posts the (possibly edited) labels and advances the queue. */

import { ApiClient } from './api.js';
import type { DashboardState } from './state.js';
import type { LabelMap, TweetItem } from './types.js';

export class SaveConflict extends Error {
  constructor(tweetId: string) {
    super(`tweet ${tweetId} was re-annotated elsewhere; refresh the queue`);
  }
}

export type QueueView =
  | { kind: 'item'; tweet: TweetItem; form: LabelMap; remaining: number }
  | { kind: 'done' } // all caught up: retrain button may be enabled
  | { kind: 'error'; message: string };

function queueStatus(state: DashboardState): 'model_predicted' | 'human_validated' {
  return state.reviewMode === 'proofread' ? 'human_validated' : 'model_predicted';
}

export class ReviewQueue {
  constructor(
    private api: ApiClient,
    private topics: string[],
  ) {}

  private emptyForm(): LabelMap {
    return Object.fromEntries(this.topics.map((t) => [t, false]));
  }

  /** Next record in the active mode; model labels arrive pre-checked. */
  async next(state: DashboardState): Promise<QueueView> {
    try {
      const page = await this.api.getTweets({
        status: queueStatus(state),
        limit: 1,
        offset: state.queueOffset,
      });
      const tweet = page.items[0];
      if (!tweet) return { kind: 'done' };
      return {
        kind: 'item',
        tweet,
        form: { ...this.emptyForm(), ...(tweet.labels ?? {}) },
        remaining: page.total,
      };
    } catch (err) {
      return { kind: 'error', message: err instanceof Error ? err.message : String(err) };
    }
  }

  /** Persist the form. Throws SaveConflict when the record left the queue
   * between fetch and save (someone else annotated it). */
  async save(state: DashboardState, tweetId: string, form: LabelMap): Promise<void> {
    const page = await this.api.getTweets({ status: queueStatus(state), limit: 500 });
    if (!page.items.some((item) => item.id === tweetId)) {
      throw new SaveConflict(tweetId);
    }
    await this.api.postAnnotation(
      tweetId,
      state.raterId,
      form,
      state.reviewMode === 'proofread' ? 'proofread' : 'human_validated',
    );
  }
}
