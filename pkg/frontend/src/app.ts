// Application shell: session bootstrap, topic tabs, ratio slider, order
// toggle, and the three panels (feed, opinion map, surveys).

import { ApiClient } from "./api.js";
import type { MapPayload } from "./api.js";
import { renderArticlePopup } from "./article.js";
import { renderFeed, renderFeedError } from "./feed.js";
import { renderMap } from "./map.js";
import { renderComposer } from "./opinion.js";
import { initialState, setOpenArticle, setRatio } from "./state.js";
import { renderSurvey } from "./survey.js";

export interface App {
  state: ReturnType<typeof initialState>;
  api: ApiClient;
  loadFeed: () => Promise<void>;
  loadMap: () => Promise<void>;
  selectTopic: (topic: string) => Promise<void>;
}

export async function bootApp(root: HTMLElement, base = ""): Promise<App> {
  const api = new ApiClient(base);
  const state = initialState();

  root.replaceChildren();
  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "newsprism";
  const tabs = document.createElement("nav");
  tabs.className = "topic-tabs";
  header.append(title, tabs);

  const controls = document.createElement("div");
  controls.className = "feed-controls";
  const sliderLabel = document.createElement("label");
  sliderLabel.textContent = "conservative ↔ liberal ";
  const slider = document.createElement("input");
  slider.type = "range";
  slider.min = "1";
  slider.max = "5";
  slider.step = "1";
  slider.value = String(state.ratio);
  slider.className = "ratio-slider";
  sliderLabel.append(slider);
  const orderToggle = document.createElement("button");
  orderToggle.className = "order-toggle";
  orderToggle.dataset.order = state.order;
  orderToggle.textContent = `extremeness: ${state.order}`;
  controls.append(sliderLabel, orderToggle);

  const feedPanel = document.createElement("section");
  feedPanel.className = "panel feed-panel";
  const mapPanel = document.createElement("section");
  mapPanel.className = "panel map-panel";
  const mapCanvas = document.createElement("div");
  mapCanvas.className = "map-canvas";
  const composerBox = document.createElement("div");
  composerBox.className = "composer-box";
  mapPanel.append(mapCanvas, composerBox);
  const surveyPanel = document.createElement("section");
  surveyPanel.className = "panel survey-panel";
  const popupLayer = document.createElement("div");
  popupLayer.className = "popup-layer";

  root.append(header, controls, feedPanel, mapPanel, surveyPanel, popupLayer);

  await api.openSession();

  const feedHandlers = {
    onOpenArticle: (id: string) => {
      void openArticle(id);
    },
    onRetry: () => {
      void loadFeed();
    },
  };

  async function openArticle(id: string): Promise<void> {
    const article = await api.article(id); // server records the open
    setOpenArticle(state, id);
    renderArticlePopup(
      popupLayer,
      article,
      () => setOpenArticle(state, null),
      () => void api.readEvent(id, "scroll_complete").catch(() => undefined),
    );
  }

  async function loadFeed(): Promise<void> {
    if (!state.topic) return;
    try {
      state.feed = await api.feed(state.topic, state.ratio, state.order);
      renderFeed(feedPanel, state.feed, feedHandlers);
    } catch (err) {
      renderFeedError(feedPanel, (err as Error).message ?? String(err), feedHandlers);
    }
  }

  async function loadMap(): Promise<void> {
    if (!state.topic) return;
    state.mapSnapshot = await api.map(state.topic);
    renderMap(mapCanvas, state.mapSnapshot);
  }

  async function loadComposer(): Promise<void> {
    if (!state.topic) return;
    const topic = state.topic;
    const examples = await api.examples(topic);
    renderComposer(composerBox, examples, {
      submit: async (opinion) => (await api.submitOpinion(topic, opinion)).map,
      onMap: (map: MapPayload) => {
        state.mapSnapshot = map;
        renderMap(mapCanvas, map);
      },
    });
  }

  async function selectTopic(topic: string): Promise<void> {
    state.topic = topic;
    for (const el of tabs.querySelectorAll("button")) {
      el.classList.toggle("active", el.dataset.topic === topic);
    }
    await Promise.all([loadFeed(), loadMap(), loadComposer()]);
  }

  slider.addEventListener("change", () => {
    setRatio(state, Number(slider.value));
    void loadFeed();
  });
  orderToggle.addEventListener("click", () => {
    state.order = state.order === "desc" ? "asc" : "desc";
    orderToggle.dataset.order = state.order;
    orderToggle.textContent = `extremeness: ${state.order}`;
    void loadFeed();
  });

  const topics = await api.topics();
  for (const topic of topics) {
    const button = document.createElement("button");
    button.dataset.topic = topic.id;
    button.textContent = topic.title;
    button.addEventListener("click", () => void selectTopic(topic.id));
    tabs.append(button);
  }

  const preQuestions = await api.questions("pre");
  renderSurvey(surveyPanel, "pre", preQuestions, {
    submit: (answers, demographics) => api.submitSurvey("pre", answers, demographics),
    onDone: () => {
      state.surveyDone.pre = true;
      void (async () => {
        const postQuestions = await api.questions("post");
        const postBox = document.createElement("div");
        postBox.className = "post-survey-box";
        surveyPanel.append(postBox);
        renderSurvey(postBox, "post", postQuestions, {
          submit: (answers) => api.submitSurvey("post", answers),
          onDone: () => {
            state.surveyDone.post = true;
          },
        });
      })();
    },
  });

  if (topics.length > 0) {
    await selectTopic(topics[0].id);
  }

  return { state, api, loadFeed, loadMap, selectTopic };
}

declare global {
  interface Window {
    newsprismBoot?: Promise<App>;
  }
}

if (typeof document !== "undefined" && document.getElementById("app-root")) {
  window.newsprismBoot = bootApp(document.getElementById("app-root")!);
}
