// News viewer: a grid of exactly ten article cards. Badges show the payload
// values verbatim; nothing is recomputed client-side.

import type { ArticleSummary, FeedPayload } from "./api.js";

export interface FeedHandlers {
  onOpenArticle: (id: string) => void;
  onRetry: () => void;
}

function badge(cls: string, text: string): HTMLElement {
  const el = document.createElement("span");
  el.className = `badge ${cls}`;
  el.textContent = text;
  return el;
}

function card(article: ArticleSummary, handlers: FeedHandlers): HTMLElement {
  const el = document.createElement("article");
  el.className = "card";
  el.dataset.articleId = article.id;

  const image = document.createElement("div");
  image.className = "image-slot";
  image.textContent = "\u{1F4F0}"; // deterministic placeholder, corpus has no images

  const title = document.createElement("h3");
  title.className = "card-title";
  title.textContent = article.title;

  const snippet = document.createElement("p");
  snippet.className = "card-snippet";
  snippet.textContent = article.snippet;

  const badges = document.createElement("div");
  badges.className = "card-badges";
  badges.append(
    badge(`stance-${article.stance}`, article.stance),
    badge(`band-${article.band}`, `${article.band} · ${article.extremeness.toFixed(3)}`),
  );

  el.append(image, title, snippet, badges);
  el.addEventListener("click", () => handlers.onOpenArticle(article.id));
  return el;
}

export function renderFeed(
  container: HTMLElement,
  feed: FeedPayload,
  handlers: FeedHandlers,
): void {
  container.replaceChildren();
  const grid = document.createElement("div");
  grid.className = "feed-grid";
  for (const article of feed.articles) {
    grid.append(card(article, handlers));
  }
  container.append(grid);
}

export function renderFeedError(
  container: HTMLElement,
  message: string,
  handlers: FeedHandlers,
): void {
  container.replaceChildren();
  const box = document.createElement("div");
  box.className = "feed-error";
  const text = document.createElement("p");
  text.textContent = `Could not load the feed: ${message}`;
  const retry = document.createElement("button");
  retry.className = "retry-button";
  retry.textContent = "Retry";
  retry.addEventListener("click", () => handlers.onRetry());
  box.append(text, retry);
  container.append(box);
}
