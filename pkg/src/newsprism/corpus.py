"""Data model, corpus I/O, vocabulary, splitting, topic bundles, and the synthetic generator.

Corpus files are UTF-8 JSON-lines with one object per line. Article objects
carry {id, topic, title, sentences[], source, stance?, prediction?}; comment
objects carry {id, topic, text, origin, session?}. Articles and comments may
be mixed in one file; the object keys disambiguate.
"""

from __future__ import annotations

import json
import math
import random
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bands import FIVE_CLASSES, MODERATE_REFERENCE, binary_polarity, extremeness_value
from .errors import IntegrityError, ParseError

COMMENT_ORIGINS = ("conservative_community", "liberal_community", "user")

# the six canonical themes; extra topic ids are allowed alongside these
CANONICAL_TOPICS = (
    ("union-strike", "Illegal strike of confederation of unions"),
    ("minimum-wage", "Minimum wage increase"),
    ("justice-minister-impeachment", "Impeachment of the Minister of Justice"),
    ("first-lady-plagiarism", "Thesis plagiarism of the first lady"),
    ("disabled-rights", "Right of the disabled"),
    ("us-military-alliance", "U.S. military alliance"),
)

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase and split on whitespace/punctuation boundaries. No stemming."""
    return _TOKEN_RE.findall(text.lower())


def topic_title(topic_id: str) -> str:
    for tid, title in CANONICAL_TOPICS:
        if tid == topic_id:
            return title
    return topic_id.replace("-", " ").capitalize()


@dataclass(frozen=True)
class StanceDistribution:
    """Probabilities over (left, lean_left, center, lean_right, right)."""

    p: tuple[float, float, float, float, float]

    def __post_init__(self):
        if len(self.p) != 5:
            raise IntegrityError(f"stance distribution needs 5 probabilities, got {len(self.p)}")
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if any(x < -1e-9 or x > 1 + 1e-9 for x in self.p):
            raise IntegrityError("stance probabilities must lie in [0, 1]")
        if abs(sum(self.p) - 1.0) > 1e-6:
            raise IntegrityError(f"stance probabilities sum to {sum(self.p)}, not 1")

    @property
    def extremeness(self) -> float:
        return extremeness_value(self.p)

    def binary(self):
        return binary_polarity(self.p)

    def argmax(self) -> int:
        return max(range(5), key=lambda i: (self.p[i], -i))


@dataclass(frozen=True)
class Article:
    id: str
    topic_id: str
    title: tuple[str, ...]
    sentences: tuple[tuple[str, ...], ...]
    source: str
    gold_stance: str | None = None
    prediction: StanceDistribution | None = None

    def __post_init__(self):
        if not self.title:
            raise IntegrityError(f"article {self.id}: empty title")
        if not self.sentences or any(not s for s in self.sentences):
            raise IntegrityError(f"article {self.id}: needs at least one non-empty sentence")
        object.__setattr__(self, "title", tuple(self.title))
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))
        if self.gold_stance is not None and self.gold_stance not in FIVE_CLASSES:
            raise IntegrityError(f"article {self.id}: unknown stance label {self.gold_stance!r}")

    def all_tokens(self):
        yield from self.title
        for s in self.sentences:
            yield from s

    def with_prediction(self, dist: StanceDistribution) -> "Article":
        return replace(self, prediction=dist)


@dataclass(frozen=True)
class Comment:
    id: str
    topic_id: str
    tokens: tuple[str, ...]
    origin: str
    author_session: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise IntegrityError(f"comment {self.id}: empty text")
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if self.origin not in COMMENT_ORIGINS:
            raise IntegrityError(f"comment {self.id}: unknown origin {self.origin!r}")
        if (self.origin == "user") != (self.author_session is not None):
            raise IntegrityError(f"comment {self.id}: author_session present iff origin is user")

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


PAD_ID = 0
UNK_ID = 1


@dataclass
class Vocab:
    """Token ids with pad=0 and unk=1 reserved; remaining ids are dense."""

    token_to_id: dict[str, int]
    id_to_token: list[str]
    min_freq: int

    def __len__(self):
        return len(self.id_to_token)

    def __contains__(self, token):
        return token in self.token_to_id

    def encode(self, tokens) -> list[int]:
        get = self.token_to_id.get
        return [get(t, UNK_ID) for t in tokens]

    def content_hash(self) -> str:
        import hashlib

        payload = json.dumps(self.id_to_token, ensure_ascii=False).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()

    def to_json(self) -> dict:
        return {"min_freq": self.min_freq, "tokens": self.id_to_token}

    @classmethod
    def from_json(cls, obj) -> "Vocab":
        tokens = list(obj["tokens"])
        if tokens[:2] != ["<pad>", "<unk>"]:
            raise ParseError("vocab dump must start with <pad>, <unk>")
        return cls({t: i for i, t in enumerate(tokens)}, tokens, int(obj["min_freq"]))


def build_vocab(articles, comments, min_freq: int = 1) -> Vocab:
    """Assign ids to every token seen at least min_freq times.

    Ids are deterministic: frequency descending, ties lexicographic, starting
    after the reserved pad/unk slots.
    """
    if min_freq < 1:
        raise ValueError(f"min_freq must be >= 1, got {min_freq}")
    freq: dict[str, int] = {}
    for art in articles:
        for tok in art.all_tokens():
            freq[tok] = freq.get(tok, 0) + 1
    for com in comments:
        for tok in com.tokens:
            freq[tok] = freq.get(tok, 0) + 1
    if not freq:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (tok for tok, n in freq.items() if n >= min_freq),
        key=lambda t: (-freq[t], t),
    )
    id_to_token = ["<pad>", "<unk>"] + kept
    return Vocab({t: i for i, t in enumerate(id_to_token)}, id_to_token, min_freq)


def split_dataset(items, train_frac: float, seed: int):
    """Seeded shuffle split; |train| = round(train_frac * n), round half up."""
    if not (0.0 < train_frac < 1.0):
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    items = list(items)
    if len(items) < 2:
        raise ValueError("need at least 2 items to split")
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    n_train = int(math.floor(train_frac * len(items) + 0.5))
    train = [items[i] for i in order[:n_train]]
    test = [items[i] for i in order[n_train:]]
    return train, test


# ---------------------------------------------------------------------------
# persistence


def _article_to_obj(a: Article) -> dict:
    obj = {
        "id": a.id,
        "topic": a.topic_id,
        "title": " ".join(a.title),
        "sentences": [" ".join(s) for s in a.sentences],
        "source": a.source,
    }
    if a.gold_stance is not None:
        obj["stance"] = a.gold_stance
    if a.prediction is not None:
        obj["prediction"] = list(a.prediction.p)
    return obj


def _comment_to_obj(c: Comment) -> dict:
    obj = {"id": c.id, "topic": c.topic_id, "text": c.text, "origin": c.origin}
    if c.author_session is not None:
        obj["session"] = c.author_session
    return obj


def _article_from_obj(obj, line_no) -> Article:
    try:
        pred = obj.get("prediction")
        return Article(
            id=str(obj["id"]),
            topic_id=str(obj["topic"]),
            title=tuple(tokenize(obj["title"])),
            sentences=tuple(tuple(tokenize(s)) for s in obj["sentences"]),
            source=str(obj.get("source", "")),
            gold_stance=obj.get("stance"),
            prediction=StanceDistribution(tuple(pred)) if pred is not None else None,
        )
    except (KeyError, TypeError, IntegrityError) as exc:
        raise ParseError(f"bad article record: {exc}", line_no) from exc


def _comment_from_obj(obj, line_no) -> Comment:
    try:
        return Comment(
            id=str(obj["id"]),
            topic_id=str(obj["topic"]),
            tokens=tuple(tokenize(obj["text"])),
            origin=str(obj["origin"]),
            author_session=obj.get("session"),
        )
    except (KeyError, TypeError, IntegrityError) as exc:
        raise ParseError(f"bad comment record: {exc}", line_no) from exc


def save_corpus(articles, comments, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for a in articles:
            fh.write(json.dumps(_article_to_obj(a), ensure_ascii=False) + "\n")
        for c in comments:
            fh.write(json.dumps(_comment_to_obj(c), ensure_ascii=False) + "\n")


def load_corpus(path):
    """Parse a JSON-lines corpus file into (articles, comments), file order preserved."""
    path = Path(path)
    articles: list[Article] = []
    comments: list[Comment] = []
    seen_a: set[str] = set()
    seen_c: set[str] = set()
    with path.open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", line_no) from exc
            if not isinstance(obj, dict):
                raise ParseError("record is not an object", line_no)
            if "sentences" in obj or "title" in obj:
                art = _article_from_obj(obj, line_no)
                if art.id in seen_a:
                    raise IntegrityError(f"duplicate article id {art.id!r} (line {line_no})")
                seen_a.add(art.id)
                articles.append(art)
            elif "text" in obj:
                com = _comment_from_obj(obj, line_no)
                if com.id in seen_c:
                    raise IntegrityError(f"duplicate comment id {com.id!r} (line {line_no})")
                seen_c.add(com.id)
                comments.append(com)
            else:
                raise ParseError("record is neither an article nor a comment", line_no)
    return articles, comments


# ---------------------------------------------------------------------------
# topic bundles

BUNDLE_PER_SIDE = 10
BUNDLE_PER_BAND = 5
SIDES = ("conservative", "liberal")


@dataclass(frozen=True)
class TopicBundle:
    """Exactly 20 article ids for a topic: 10 per side, each side 5 high + 5 moderate."""

    topic_id: str
    high: dict[str, tuple[str, ...]]
    moderate: dict[str, tuple[str, ...]]
    extremeness: dict[str, float]

    def __post_init__(self):
        for side in SIDES:
            if len(self.high.get(side, ())) != BUNDLE_PER_BAND:
                raise IntegrityError(f"bundle {self.topic_id}: {side} high band needs 5 articles")
            if len(self.moderate.get(side, ())) != BUNDLE_PER_BAND:
                raise IntegrityError(f"bundle {self.topic_id}: {side} moderate band needs 5 articles")
        ids = list(self.article_ids())
        if len(set(ids)) != 20:
            raise IntegrityError(f"bundle {self.topic_id}: article ids must be 20 distinct ids")
        missing = [i for i in ids if i not in self.extremeness]
        if missing:
            raise IntegrityError(f"bundle {self.topic_id}: missing extremeness for {missing}")

    def article_ids(self):
        for side in SIDES:
            yield from self.high[side]
            yield from self.moderate[side]

    def side_ids(self, side: str):
        return tuple(self.high[side]) + tuple(self.moderate[side])


def prepare_topic_bundle(topic_id: str, articles) -> TopicBundle:
    """Select 20 articles for a topic from predicted articles.

    Per binary side: the 5 largest extremeness values form the high band, and
    of the remainder the 5 closest to the moderate reference (0.80) form the
    moderate band. Ties break by article id.
    """
    by_side: dict[str, list[Article]] = {s: [] for s in SIDES}
    for art in articles:
        if art.topic_id != topic_id or art.prediction is None:
            continue
        side, _ = art.prediction.binary()
        by_side[side].append(art)

    shortfalls = [
        f"{side}, need {BUNDLE_PER_SIDE - len(arts)} more"
        for side, arts in by_side.items()
        if len(arts) < BUNDLE_PER_SIDE
    ]
    if shortfalls:
        raise IntegrityError(f"bundle {topic_id}: insufficient articles: " + "; ".join(shortfalls))

    high: dict[str, tuple[str, ...]] = {}
    moderate: dict[str, tuple[str, ...]] = {}
    ext: dict[str, float] = {}
    for side, arts in by_side.items():
        ranked = sorted(arts, key=lambda a: (-a.prediction.extremeness, a.id))
        top = ranked[:BUNDLE_PER_BAND]
        rest = ranked[BUNDLE_PER_BAND:]
        near_ref = sorted(
            rest, key=lambda a: (abs(a.prediction.extremeness - MODERATE_REFERENCE), a.id)
        )[:BUNDLE_PER_BAND]
        high[side] = tuple(a.id for a in top)
        moderate[side] = tuple(a.id for a in near_ref)
        for a in top + near_ref:
            ext[a.id] = a.prediction.extremeness
    return TopicBundle(topic_id=topic_id, high=high, moderate=moderate, extremeness=ext)


# ---------------------------------------------------------------------------
# example-comment sampling (pool -> 50/side -> 10/side)

POOL_MIN_PER_SIDE = 500
SAMPLE_PER_SIDE = 50
SELECT_PER_SIDE = 10

_ORIGIN_SIDE = {"conservative_community": "conservative", "liberal_community": "liberal"}


@dataclass
class CommentSampleStages:
    pool: dict[str, list[Comment]]
    sampled: dict[str, list[Comment]]
    selected: dict[str, list[Comment]]


def sample_comment_pipeline(comments, topic_id, seed, confidence=None) -> CommentSampleStages:
    """Pool community comments, sample 50 per side, keep the 10 most confident.

    `confidence` maps a Comment to a classifier confidence; absent, ranking
    falls back to comment id so the result stays deterministic.
    """
    pool: dict[str, list[Comment]] = {s: [] for s in SIDES}
    for c in comments:
        if c.topic_id != topic_id:
            continue
        side = _ORIGIN_SIDE.get(c.origin)
        if side is not None:
            pool[side].append(c)
    for side in SIDES:
        if len(pool[side]) < POOL_MIN_PER_SIDE:
            raise IntegrityError(
                f"topic {topic_id}: {side} comment pool too small "
                f"({len(pool[side])} < {POOL_MIN_PER_SIDE})"
            )
    rng = random.Random(seed)
    sampled = {side: rng.sample(pool[side], SAMPLE_PER_SIDE) for side in SIDES}
    score = confidence if confidence is not None else (lambda c: 0.0)
    selected = {
        side: sorted(sampled[side], key=lambda c: (-score(c), c.id))[:SELECT_PER_SIDE]
        for side in SIDES
    }
    return CommentSampleStages(pool=pool, sampled=sampled, selected=selected)


def sample_example_comments(comments, topic_id, seed, confidence=None) -> list[str]:
    """The 20 example-comment ids for a topic, 10 per side."""
    stages = sample_comment_pipeline(comments, topic_id, seed, confidence)
    return [c.id for side in SIDES for c in stages.selected[side]]


# ---------------------------------------------------------------------------
# synthetic corpus generator

_SIDE_CLASSES = {"liberal": ("left", "lean_left"), "conservative": ("lean_right", "right")}
_CLASS_STEMS = dict(zip(FIVE_CLASSES, ("equity", "reform", "median", "heritage", "liberty")))
_SOURCES = (
    "daily-ledger",
    "morning-wire",
    "capital-times",
    "plainsview-post",
    "metro-journal",
    "evening-standard",
)


def default_lexicons(tokens_per_class: int = 24) -> dict[str, tuple[str, ...]]:
    return {
        label: tuple(f"{stem}{i:02d}" for i in range(tokens_per_class))
        for label, stem in _CLASS_STEMS.items()
    }


@dataclass
class CorpusSpec:
    """Configuration of the deterministic synthetic corpus generator.

    `articles_per_topic_per_stance` counts articles per topic for each of the
    five stance labels; `comments_per_topic_per_stance` counts community
    comments per topic for each binary side.
    """

    n_topics: int = 6
    articles_per_topic_per_stance: int = 4
    comments_per_topic_per_stance: int = 40
    lexicons: dict[str, tuple[str, ...]] = field(default_factory=default_lexicons)
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_topics < 1:
            raise ValueError("n_topics must be positive")
        if not (0.0 <= self.noise < 0.5):
            raise ValueError(f"noise must lie in [0, 0.5), got {self.noise}")
        if set(self.lexicons) != set(FIVE_CLASSES):
            raise ValueError("lexicons must cover exactly the five stance labels")
        seen: set[str] = set()
        for label in FIVE_CLASSES:
            toks = set(self.lexicons[label])
            if toks & seen:
                raise ValueError(f"lexicons are not pairwise disjoint at {label}")
            seen |= toks

    def to_json(self) -> dict:
        return {
            "n_topics": self.n_topics,
            "articles_per_topic_per_stance": self.articles_per_topic_per_stance,
            "comments_per_topic_per_stance": self.comments_per_topic_per_stance,
            "lexicons": {k: list(v) for k, v in self.lexicons.items()},
            "noise": self.noise,
            "seed": self.seed,
        }

    @classmethod
    def from_json(cls, obj) -> "CorpusSpec":
        kwargs = dict(obj)
        if "lexicons" in kwargs:
            kwargs["lexicons"] = {k: tuple(v) for k, v in kwargs["lexicons"].items()}
        return cls(**kwargs)


def _topic_ids(n: int) -> list[str]:
    ids = [tid for tid, _ in CANONICAL_TOPICS[:n]]
    ids += [f"extra-topic-{i}" for i in range(len(ids) + 1, n + 1)]
    return ids


def _topic_tokens(topic_id: str) -> list[str]:
    stem = topic_id.replace("-", "")
    return [f"{stem}{i}" for i in range(6)]


def _indicative(rng, spec, label):
    if spec.noise > 0.0 and rng.random() < spec.noise:
        other = rng.choice([c for c in FIVE_CLASSES if c != label])
        return rng.choice(spec.lexicons[other])
    return rng.choice(spec.lexicons[label])


def _side_indicative(rng, spec, side):
    own = _SIDE_CLASSES[side]
    if spec.noise > 0.0 and rng.random() < spec.noise:
        other_side = "conservative" if side == "liberal" else "liberal"
        label = rng.choice(_SIDE_CLASSES[other_side])
    else:
        label = rng.choice(own)
    return rng.choice(spec.lexicons[label])


_FILLERS = tuple(f"filler{i:02d}" for i in range(40))


def synth_corpus(spec: CorpusSpec):
    """Generate (articles, comments) with gold labels, deterministic per seed.

    At noise=0 every stance-indicative token comes from the article's own
    class lexicon, so a unigram count classifier separates the corpus
    perfectly.
    """
    rng = random.Random(spec.seed)
    articles: list[Article] = []
    comments: list[Comment] = []
    for t_idx, topic_id in enumerate(_topic_ids(spec.n_topics)):
        t_toks = _topic_tokens(topic_id)
        for label in FIVE_CLASSES:
            for j in range(spec.articles_per_topic_per_stance):
                title = [
                    rng.choice(t_toks),
                    _indicative(rng, spec, label),
                    rng.choice(_FILLERS),
                    _indicative(rng, spec, label),
                ]
                sentences = []
                for _ in range(rng.randint(2, 4)):
                    sent = []
                    for _ in range(rng.randint(6, 10)):
                        r = rng.random()
                        if r < 0.45:
                            sent.append(_indicative(rng, spec, label))
                        elif r < 0.70:
                            sent.append(rng.choice(t_toks))
                        else:
                            sent.append(rng.choice(_FILLERS))
                    sentences.append(tuple(sent))
                articles.append(
                    Article(
                        id=f"a-{t_idx}-{label}-{j}",
                        topic_id=topic_id,
                        title=tuple(title),
                        sentences=tuple(sentences),
                        source=rng.choice(_SOURCES),
                        gold_stance=label,
                    )
                )
        for side in SIDES:
            origin = f"{side}_community"
            for j in range(spec.comments_per_topic_per_stance):
                # lead with one indicative token so every comment carries signal
                toks = [_side_indicative(rng, spec, side)]
                for _ in range(rng.randint(4, 11)):
                    r = rng.random()
                    if r < 0.55:
                        toks.append(_side_indicative(rng, spec, side))
                    elif r < 0.75:
                        toks.append(rng.choice(t_toks))
                    else:
                        toks.append(rng.choice(_FILLERS))
                comments.append(
                    Comment(
                        id=f"c-{t_idx}-{side}-{j}",
                        topic_id=topic_id,
                        tokens=tuple(toks),
                        origin=origin,
                    )
                )
    return articles, comments
