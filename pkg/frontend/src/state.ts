// Central view state. The ratio is clamped to the five slider positions and
// the open article must come from the current feed.

import type { FeedPayload, MapPayload } from "./api.js";

export type SortOrder = "asc" | "desc";

export interface ViewState {
  topic: string | null;
  ratio: number; // 1..5
  order: SortOrder;
  openArticleId: string | null;
  feed: FeedPayload | null;
  mapSnapshot: MapPayload | null;
  surveyDone: { pre: boolean; post: boolean };
}

export function initialState(): ViewState {
  return {
    topic: null,
    ratio: 3,
    order: "desc",
    openArticleId: null,
    feed: null,
    mapSnapshot: null,
    surveyDone: { pre: false, post: false },
  };
}

export function setRatio(state: ViewState, ratio: number): void {
  if (!Number.isInteger(ratio) || ratio < 1 || ratio > 5) {
    throw new Error(`ratio must be an integer 1..5, got ${ratio}`);
  }
  state.ratio = ratio;
}

export function setOpenArticle(state: ViewState, id: string | null): void {
  if (id !== null) {
    const inFeed = state.feed?.articles.some((a) => a.id === id) ?? false;
    if (!inFeed) throw new Error(`article ${id} is not in the current feed`);
  }
  state.openArticleId = id;
}
