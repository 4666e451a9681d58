// Typed client for the gateway JSON API. Every server interaction in the UI
// goes through this module; nothing else touches fetch.

export interface TopicInfo {
  id: string;
  title: string;
}

export interface ArticleSummary {
  id: string;
  title: string;
  snippet: string;
  stance: string;
  extremeness: number;
  band: string;
}

export interface FeedPayload {
  topic: string;
  ratio: number;
  order: string;
  articles: ArticleSummary[];
}

export interface ArticleBody extends ArticleSummary {
  topic: string;
  sentences: string[];
  source: string;
}

export interface MapPoint {
  id: string;
  x: number;
  y: number;
  color: "red" | "blue" | "yellow";
  text: string;
}

export interface MapPayload {
  topic: string;
  points: MapPoint[];
}

export interface ExampleComment {
  id: string;
  text: string;
}

export interface SurveyDemographics {
  gender: string;
  age_band: string;
  political_interest: number;
  political_stance: number;
  media_usage: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private session: string | null = null;

  constructor(private base: string = "") {}

  sessionId(): string | null {
    return this.session;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.session) headers["X-Session-Id"] = this.session;
    const resp = await fetch(this.base + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(resp.status, (payload as { error?: string }).error ?? resp.statusText);
    }
    return payload as T;
  }

  async openSession(): Promise<string> {
    const obj = await this.request<{ session: string }>("POST", "/api/session");
    this.session = obj.session;
    return obj.session;
  }

  async topics(): Promise<TopicInfo[]> {
    return (await this.request<{ topics: TopicInfo[] }>("GET", "/api/topics")).topics;
  }

  feed(topic: string, ratio: number, order: "asc" | "desc"): Promise<FeedPayload> {
    const q = `topic=${encodeURIComponent(topic)}&ratio=${ratio}&order=${order}`;
    return this.request<FeedPayload>("GET", `/api/feed?${q}`);
  }

  article(id: string): Promise<ArticleBody> {
    return this.request<ArticleBody>("GET", `/api/article/${encodeURIComponent(id)}`);
  }

  async examples(topic: string): Promise<ExampleComment[]> {
    try {
      const obj = await this.request<{ examples: ExampleComment[] }>(
        "GET",
        `/api/examples?topic=${encodeURIComponent(topic)}`,
      );
      return obj.examples;
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) return [];
      throw err;
    }
  }

  submitOpinion(
    topic: string,
    opinion: { text?: string; exampleId?: string },
  ): Promise<{ comment_id: string; map: MapPayload }> {
    const body: Record<string, unknown> = { topic };
    if (opinion.exampleId) body.example_id = opinion.exampleId;
    else body.text = opinion.text;
    return this.request("POST", "/api/opinion", body);
  }

  map(topic: string): Promise<MapPayload> {
    return this.request<MapPayload>("GET", `/api/map?topic=${encodeURIComponent(topic)}`);
  }

  questions(phase: "pre" | "post"): Promise<string[]> {
    return this.request<{ questions: string[] }>("GET", `/api/questions?phase=${phase}`).then(
      (obj) => obj.questions,
    );
  }

  submitSurvey(
    phase: "pre" | "post",
    answers: number[],
    demographics?: SurveyDemographics,
  ): Promise<{ ok: boolean }> {
    const body: Record<string, unknown> = { answers };
    if (demographics) body.demographics = demographics;
    return this.request("POST", `/api/survey/${phase}`, body);
  }

  readEvent(articleId: string, kind: "thumbnail_view" | "scroll_complete"): Promise<void> {
    return this.request("POST", "/api/read-event", { article: articleId, kind });
  }
}
