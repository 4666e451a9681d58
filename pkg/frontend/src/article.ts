// Full-article popup shown when a card is clicked.

import type { ArticleBody } from "./api.js";

export function renderArticlePopup(
  container: HTMLElement,
  article: ArticleBody,
  onClose: () => void,
  onScrolledToEnd: () => void,
): void {
  const overlay = document.createElement("div");
  overlay.className = "article-overlay";
  const popup = document.createElement("div");
  popup.className = "article-popup";
  popup.dataset.articleId = article.id;

  const close = document.createElement("button");
  close.className = "popup-close";
  close.textContent = "×";
  close.addEventListener("click", () => {
    overlay.remove();
    onClose();
  });

  const title = document.createElement("h2");
  title.textContent = article.title;
  const meta = document.createElement("p");
  meta.className = "article-meta";
  meta.textContent = `${article.source} · ${article.stance} · ${article.band}`;

  const body = document.createElement("div");
  body.className = "article-body";
  for (const sentence of article.sentences) {
    const p = document.createElement("p");
    p.textContent = sentence;
    body.append(p);
  }
  const end = document.createElement("p");
  end.className = "article-end";
  end.textContent = "— end —";
  body.append(end);
  body.addEventListener("scroll", () => {
    if (body.scrollTop + body.clientHeight >= body.scrollHeight - 4) {
      onScrolledToEnd();
    }
  });

  popup.append(close, title, meta, body);
  overlay.append(popup);
  container.append(overlay);
}
