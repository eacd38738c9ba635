/** Dashboard state: topic selection, date range, granularity, review cursor,
 * and the active model version. Topics come from /model, never hardcoded. */

export interface DashboardState {
  availableTopics: string[];
  selectedTopics: string[];
  granularity: 'day' | 'week';
  dateFrom: string | null; // ISO-8601 or null for open-ended
  dateTo: string | null;
  reviewMode: 'validate' | 'proofread';
  queueOffset: number;
  modelVersion: string | null;
  raterId: string;
}

export function initialState(raterId = 'admin'): DashboardState {
  return {
    availableTopics: [],
    selectedTopics: [],
    granularity: 'week',
    dateFrom: null,
    dateTo: null,
    reviewMode: 'validate',
    queueOffset: 0,
    modelVersion: null,
    raterId,
  };
}

export function withTopics(state: DashboardState, available: string[]): DashboardState {
  const selected = state.selectedTopics.filter((t) => available.includes(t));
  return {
    ...state,
    availableTopics: available,
    selectedTopics: selected.length ? selected : [...available],
  };
}

export function toggleTopic(state: DashboardState, topic: string): DashboardState {
  if (!state.availableTopics.includes(topic)) {
    throw new Error(`unknown topic: ${topic}`);
  }
  const on = state.selectedTopics.includes(topic);
  return {
    ...state,
    selectedTopics: on
      ? state.selectedTopics.filter((t) => t !== topic)
      : [...state.selectedTopics, topic],
  };
}

export function withDateRange(
  state: DashboardState,
  from: string | null,
  to: string | null,
): DashboardState {
  if (from && to && from > to) {
    throw new Error('date range start must not be after its end');
  }
  return { ...state, dateFrom: from, dateTo: to };
}

export function withGranularity(state: DashboardState, granularity: 'day' | 'week'): DashboardState {
  return { ...state, granularity };
}

export function withReviewMode(state: DashboardState, mode: 'validate' | 'proofread'): DashboardState {
  return { ...state, reviewMode: mode, queueOffset: 0 };
}
