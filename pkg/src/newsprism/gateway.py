"""HTTP gateway binding corpus, model, feed, map, and study instruments for the UI.

Plain ThreadingHTTPServer with a JSON API. Every state-mutating endpoint
appends to a JSON-lines log and fsyncs before acknowledging, so killing the
process after any acknowledged request and replaying the data directory
reproduces identical GET responses. Sessions are opaque random tokens in the
X-Session-Id header; no accounts.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .bands import band_of
from .corpus import (
    CANONICAL_TOPICS,
    Comment,
    load_corpus,
    prepare_topic_bundle,
    sample_comment_pipeline,
    tokenize,
    topic_title,
)
from .errors import IntegrityError, NewsprismError
from .feed import ReadEvent, ReadEventLog, apply_ratio, sort_extremeness
from .opinion_map import TsneConfig, build_map
from .stance import (
    TrainConfig,
    comment_confidence,
    load_comment_model,
    train_comment_classifier,
)
from .stats import (
    Demographics,
    SurveyRecord,
    append_survey,
    compose_study_report,
    ec_questions,
    load_surveys,
)


class ApiError(NewsprismError):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status


@dataclass
class ServerConfig:
    corpus_path: str
    data_dir: str
    bind: str = "127.0.0.1"
    port: int = 0
    comment_model_path: str | None = None
    static_dir: str | None = None
    tsne: TsneConfig = field(default_factory=lambda: TsneConfig(iterations=300, seed=0))
    read_kind: str = "article_open"
    map_community_per_stance: int = 20
    max_user_comments_per_topic: int = 500
    alpha: float = 0.05
    seed: int = 0
    comment_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=25, seed=0))
    comment_dim: int = 16

    def __post_init__(self):
        if not Path(self.corpus_path).exists():
            raise FileNotFoundError(f"corpus path {self.corpus_path} does not exist")
        if self.comment_model_path and not Path(self.comment_model_path).exists():
            raise FileNotFoundError(f"comment model {self.comment_model_path} does not exist")
        if self.static_dir and not Path(self.static_dir).exists():
            raise FileNotFoundError(f"static dir {self.static_dir} does not exist")
        Path(self.data_dir).mkdir(parents=True, exist_ok=True)

    @classmethod
    def from_file(cls, path) -> "ServerConfig":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if "tsne" in obj:
            obj["tsne"] = TsneConfig(**obj["tsne"])
        if "comment_train" in obj:
            obj["comment_train"] = TrainConfig(**obj["comment_train"])
        obj["bind"] = os.environ.get("NEWSPRISM_ADDR", obj.get("bind", "127.0.0.1"))
        obj["data_dir"] = os.environ.get("NEWSPRISM_DATA_DIR", obj["data_dir"])
        return cls(**obj)


def _append_jsonl(path: Path, obj: dict) -> None:
    with path.open("a", encoding="utf-8") as fh:
        fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        return []
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(json.loads(line))
    return out


class Gateway:
    """Application state plus a JSON request dispatcher; HTTP is a thin shell."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        self._write_lock = threading.Lock()
        self._map_locks: dict[str, threading.Lock] = {}

        self.articles, community = load_corpus(config.corpus_path)
        self.articles_by_id = {a.id: a for a in self.articles}
        self.community = [c for c in community if c.origin != "user"]

        self.topics = self._topic_catalog()
        self.bundles = {}
        for tid in self.topics:
            try:
                self.bundles[tid] = prepare_topic_bundle(tid, self.articles)
            except IntegrityError:
                continue

        self.comment_model = self._load_or_train_comment_model()
        self.examples = self._prepare_examples()
        self._map_community = self._sample_map_community()

        self.events = ReadEventLog(
            self.data_dir / "events.jsonl", known_articles=set(self.articles_by_id)
        )
        self.sessions: dict[str, dict] = {}
        for obj in _read_jsonl(self.data_dir / "sessions.jsonl"):
            self.sessions[obj["id"]] = {"created": obj["ts"]}
        self.surveys = load_surveys(self.data_dir / "surveys.jsonl")
        self.user_comments: list[Comment] = []
        for obj in _read_jsonl(self.data_dir / "opinions.jsonl"):
            self.user_comments.append(
                Comment(
                    id=obj["id"],
                    topic_id=obj["topic"],
                    tokens=tuple(tokenize(obj["text"])),
                    origin="user",
                    author_session=obj["session"],
                )
            )

    # -- startup helpers ----------------------------------------------------

    def _topic_catalog(self) -> list[str]:
        present = {a.topic_id for a in self.articles} | {c.topic_id for c in self.community}
        canonical = [tid for tid, _ in CANONICAL_TOPICS if tid in present]
        extras = sorted(present - {tid for tid, _ in CANONICAL_TOPICS})
        return canonical + extras

    def _load_or_train_comment_model(self):
        if self.config.comment_model_path:
            return load_comment_model(self.config.comment_model_path)
        model, _ = train_comment_classifier(
            self.community, self.config.comment_train, d=self.config.comment_dim
        )
        return model

    def _prepare_examples(self) -> dict[str, list[dict]]:
        out = {}
        conf = lambda c: comment_confidence(self.comment_model, c)
        by_id = {c.id: c for c in self.community}
        for tid in self.topics:
            try:
                stages = sample_comment_pipeline(self.community, tid, self.config.seed, conf)
            except IntegrityError:
                continue
            ids = [c.id for side in ("conservative", "liberal") for c in stages.selected[side]]
            out[tid] = [{"id": cid, "text": by_id[cid].text} for cid in ids]
        return out

    def _sample_map_community(self) -> dict[str, list[Comment]]:
        import random

        per = self.config.map_community_per_stance
        out: dict[str, list[Comment]] = {}
        for tid in self.topics:
            chosen = []
            for origin in ("conservative_community", "liberal_community"):
                pool = sorted(
                    (c for c in self.community if c.topic_id == tid and c.origin == origin),
                    key=lambda c: c.id,
                )
                if len(pool) > per:
                    pool = random.Random(self.config.seed).sample(pool, per)
                chosen.extend(pool)
            out[tid] = sorted(chosen, key=lambda c: c.id)
        return out

    # -- request dispatch ----------------------------------------------------

    def handle(self, method: str, path: str, query: dict, headers: dict, body: dict | None):
        try:
            return 200, self._route(method, path, query, headers, body)
        except ApiError as exc:
            return exc.status, {"error": str(exc)}
        except NewsprismError as exc:
            return 500, {"error": str(exc)}

    def _route(self, method, path, query, headers, body):
        if method == "POST" and path == "/api/session":
            return self._create_session()
        if method == "GET" and path == "/api/topics":
            return {"topics": [{"id": t, "title": topic_title(t)} for t in self.topics]}
        if method == "GET" and path == "/api/feed":
            return self._feed(query)
        if method == "GET" and path.startswith("/api/article/"):
            return self._article(path.removeprefix("/api/article/"), headers)
        if method == "POST" and path == "/api/read-event":
            return self._read_event(headers, body)
        if method == "GET" and path == "/api/examples":
            return self._examples(query)
        if method == "POST" and path == "/api/opinion":
            return self._opinion(headers, body)
        if method == "GET" and path == "/api/map":
            return self._map(query, headers)
        if method == "POST" and path in ("/api/survey/pre", "/api/survey/post"):
            return self._survey(path.rsplit("/", 1)[1], headers, body)
        if method == "GET" and path == "/api/questions":
            phase = query.get("phase", ["pre"])[0]
            if phase not in ("pre", "post"):
                raise ApiError(400, "phase must be pre or post")
            return {"phase": phase, "questions": list(ec_questions(phase))}
        if method == "GET" and path == "/api/report":
            return self._report()
        raise ApiError(404, f"no route for {method} {path}")

    def _create_session(self):
        sid = secrets.token_urlsafe(16)  # 128 random bits
        ts = int(time.time() * 1000)
        with self._write_lock:
            _append_jsonl(self.data_dir / "sessions.jsonl", {"id": sid, "ts": ts})
            self.sessions[sid] = {"created": ts}
        return {"session": sid}

    def _session_of(self, headers) -> str:
        sid = headers.get("x-session-id")
        if not sid or sid not in self.sessions:
            raise ApiError(401, "missing or unknown session")
        return sid

    def _topic_of(self, query_or_body, key="topic"):
        tid = query_or_body.get(key)
        if isinstance(tid, list):
            tid = tid[0] if tid else None
        if not tid:
            raise ApiError(400, "missing topic")
        if tid not in self.topics:
            raise ApiError(404, f"unknown topic {tid!r}")
        return tid

    def _article_summary(self, art):
        dist = art.prediction
        polarity, _ = dist.binary()
        ext = dist.extremeness
        snippet = " ".join(art.sentences[0][:24])
        return {
            "id": art.id,
            "title": " ".join(art.title),
            "snippet": snippet,
            "stance": polarity,
            "extremeness": ext,
            "band": band_of(ext),
        }

    def _feed(self, query):
        tid = self._topic_of(query)
        try:
            ratio = int(query.get("ratio", ["0"])[0])
        except ValueError:
            raise ApiError(400, "ratio must be an integer 1..5") from None
        order = query.get("order", ["desc"])[0]
        if ratio not in (1, 2, 3, 4, 5):
            raise ApiError(400, "ratio must be an integer 1..5")
        if order not in ("asc", "desc"):
            raise ApiError(400, "order must be 'asc' or 'desc'")
        bundle = self.bundles.get(tid)
        if bundle is None:
            raise ApiError(409, f"topic {tid!r} has no prepared article bundle")
        ids = apply_ratio(bundle, ratio)
        arts = sort_extremeness([self.articles_by_id[i] for i in ids], order)
        return {
            "topic": tid,
            "ratio": ratio,
            "order": order,
            "articles": [self._article_summary(a) for a in arts],
        }

    def _article(self, article_id, headers):
        sid = self._session_of(headers)
        art = self.articles_by_id.get(article_id)
        if art is None:
            raise ApiError(404, f"unknown article {article_id!r}")
        self._log_event(sid, art, "article_open")
        payload = {
            "id": art.id,
            "topic": art.topic_id,
            "title": " ".join(art.title),
            "sentences": [" ".join(s) for s in art.sentences],
            "source": art.source,
        }
        if art.prediction is not None:
            payload.update(self._article_summary(art))
            payload["sentences"] = [" ".join(s) for s in art.sentences]
        return payload

    def _log_event(self, sid, art, kind):
        with self._write_lock:
            now = int(time.time() * 1000)
            last = self.events._last_ts.get(sid)
            if last is not None and now < last:
                now = last
            self.events.append(
                ReadEvent(
                    session_id=sid,
                    article_id=art.id,
                    topic_id=art.topic_id,
                    timestamp_ms=now,
                    kind=kind,
                )
            )

    def _read_event(self, headers, body):
        sid = self._session_of(headers)
        body = body or {}
        art = self.articles_by_id.get(body.get("article", ""))
        if art is None:
            raise ApiError(404, "unknown article")
        kind = body.get("kind", "")
        if kind not in ("thumbnail_view", "scroll_complete"):
            raise ApiError(400, "kind must be thumbnail_view or scroll_complete")
        self._log_event(sid, art, kind)
        return {"ok": True}

    def _examples(self, query):
        tid = self._topic_of(query)
        if tid not in self.examples:
            raise ApiError(404, f"no example comments prepared for topic {tid!r}")
        return {"topic": tid, "examples": self.examples[tid]}

    def _opinion(self, headers, body):
        sid = self._session_of(headers)
        body = body or {}
        tid = self._topic_of(body)
        example_id = body.get("example_id")
        if example_id:
            pool = {e["id"]: e["text"] for e in self.examples.get(tid, [])}
            if example_id not in pool:
                raise ApiError(404, f"unknown example {example_id!r}")
            text = pool[example_id]
        else:
            text = (body.get("text") or "").strip()
        tokens = tokenize(text)
        if not tokens:
            raise ApiError(400, "opinion text is empty")
        existing = [c for c in self.user_comments if c.topic_id == tid]
        if len(existing) >= self.config.max_user_comments_per_topic:
            raise ApiError(409, f"topic {tid!r} reached the opinion cap")
        with self._write_lock:
            cid = f"op-{len(self.user_comments):06d}"
            _append_jsonl(
                self.data_dir / "opinions.jsonl",
                {"id": cid, "topic": tid, "text": text, "session": sid,
                 "ts": int(time.time() * 1000)},
            )
            comment = Comment(
                id=cid, topic_id=tid, tokens=tuple(tokens), origin="user", author_session=sid
            )
            self.user_comments.append(comment)
        return {"comment_id": cid, "map": self._build_topic_map(tid, sid)}

    def _map(self, query, headers):
        sid = self._session_of(headers)
        tid = self._topic_of(query)
        return self._build_topic_map(tid, sid)

    def _build_topic_map(self, tid, sid):
        lock = self._map_locks.setdefault(tid, threading.Lock())
        with lock:
            own = [c for c in self.user_comments if c.topic_id == tid and c.author_session == sid]
            m = build_map(
                tid, self._map_community.get(tid, []), own, self.comment_model, self.config.tsne
            )
            return m.to_json()

    def _survey(self, phase, headers, body):
        sid = self._session_of(headers)
        body = body or {}
        answers = body.get("answers")
        if not isinstance(answers, list) or len(answers) != 5 or not all(
            isinstance(a, int) and 1 <= a <= 5 for a in answers
        ):
            raise ApiError(422, "answers must be 5 Likert integers in 1..5")
        demographics = None
        if phase == "pre":
            demo = body.get("demographics")
            if not isinstance(demo, dict):
                raise ApiError(422, "pre-survey requires demographics")
            try:
                demographics = Demographics(
                    gender=str(demo.get("gender", "")),
                    age_band=demo.get("age_band", ""),
                    political_interest=demo.get("political_interest"),
                    political_stance=demo.get("political_stance"),
                    media_usage=demo.get("media_usage"),
                )
            except IntegrityError as exc:
                raise ApiError(422, f"invalid demographics: {exc}") from exc
        if any(r.participant_id == sid and r.phase == phase for r in self.surveys):
            raise ApiError(409, f"{phase}-survey already submitted for this session")
        record = SurveyRecord(
            participant_id=sid, phase=phase, answers=tuple(answers), demographics=demographics
        )
        with self._write_lock:
            append_survey(record, self.data_dir / "surveys.jsonl")
            self.surveys.append(record)
        return {"ok": True, "phase": phase}

    def _article_stances(self):
        return {
            a.id: a.prediction.binary()[0]
            for a in self.articles
            if a.prediction is not None
        }

    def _report(self):
        try:
            return compose_study_report(
                self.surveys,
                events=self.events.read_all(),
                article_stances=self._article_stances(),
                alpha=self.config.alpha,
                count_kind=self.config.read_kind,
            )
        except IntegrityError as exc:
            raise ApiError(409, str(exc)) from exc


# ---------------------------------------------------------------------------
# HTTP shell


class _Handler(BaseHTTPRequestHandler):
    gateway: Gateway = None  # set by serve()
    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):
        pass

    def _dispatch(self, method):
        parsed = urlparse(self.path)
        if method == "GET" and self.gateway.config.static_dir and not parsed.path.startswith("/api/"):
            return self._static(parsed.path)
        body = None
        length = int(self.headers.get("Content-Length") or 0)
        if length:
            raw = self.rfile.read(length)
            try:
                body = json.loads(raw)
            except json.JSONDecodeError:
                self._send(400, {"error": "request body is not valid JSON"})
                return
        headers = {k.lower(): v for k, v in self.headers.items()}
        status, payload = self.gateway.handle(
            method, parsed.path, parse_qs(parsed.query), headers, body
        )
        self._send(status, payload)

    def _static(self, path):
        root = Path(self.gateway.config.static_dir).resolve()
        rel = path.lstrip("/") or "index.html"
        target = (root / rel).resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            target = root / "index.html"
            if not target.is_file():
                self._send(404, {"error": "not found"})
                return
        data = target.read_bytes()
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".json": "application/json",
            ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send(self, status, payload):
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        self._dispatch("GET")

    def do_POST(self):
        self._dispatch("POST")


class GatewayServer:
    """Owns the HTTP listener for a Gateway; start() prints the readiness line."""

    def __init__(self, gateway: Gateway):
        self.gateway = gateway
        handler = type("BoundHandler", (_Handler,), {"gateway": gateway})
        self.httpd = ThreadingHTTPServer((gateway.config.bind, gateway.config.port), handler)
        self.thread: threading.Thread | None = None

    @property
    def address(self):
        return self.httpd.server_address

    def start(self, announce: bool = True):
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()
        if announce:
            host, port = self.address
            print(json.dumps({"ready": True, "addr": host, "port": port}), flush=True)
        return self.address

    def stop(self):
        self.httpd.shutdown()
        self.httpd.server_close()
        if self.thread:
            self.thread.join(timeout=5)


def serve(config: ServerConfig, announce: bool = True) -> GatewayServer:
    server = GatewayServer(Gateway(config))
    server.start(announce=announce)
    return server
