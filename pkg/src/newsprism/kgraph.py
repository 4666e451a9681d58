"""Dual political knowledge graphs and trainable triple-scoring embeddings.

Two graphs (one per camp) are built from post-like token sequences by
lexicon matching plus relation rules. Triples are scored by RotatE, ModE, or
HAKE under a self-adversarial negative-sampling loss; the adversarial
weights are treated as constants by the gradients, and all gradients are
hand-derived and checked against finite differences.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import IntegrityError, ParseError, TrainingDiverged

CAMPS = ("lib", "con")
METHODS = ("rotate", "mode", "hake")

RELATED_TO = "related_to"

DEFAULT_WINDOW = 12

# default taxonomy: 18 political entity types, shipped as configuration
ENTITY_TYPES = (
    "politician",
    "party",
    "institution",
    "policy",
    "law",
    "country",
    "state",
    "city",
    "organization",
    "media",
    "movement",
    "ideology",
    "event",
    "election",
    "committee",
    "court",
    "agency",
    "public_figure",
)

DEFAULT_RELATION_RULES = (
    ("supports", frozenset({"supports", "backs", "endorses", "defends"})),
    ("opposes", frozenset({"opposes", "slams", "rejects", "condemns"})),
    ("proposes", frozenset({"proposes", "introduces", "drafts"})),
    ("criticizes", frozenset({"criticizes", "blames", "accuses"})),
)


class Triple(NamedTuple):
    head: int
    relation: int
    tail: int


@dataclass
class KnowledgeGraph:
    """Entity/relation lexicons plus a deduplicated triple set for one camp."""

    camp: str
    surfaces: dict[str, int]
    entity_types: dict[int, str]
    relations: dict[str, int]
    triples: set[Triple] = field(default_factory=set)

    def __post_init__(self):
        if self.camp not in CAMPS:
            raise IntegrityError(f"camp must be one of {CAMPS}, got {self.camp!r}")

    @classmethod
    def build(cls, camp, entities, relation_names=None) -> "KnowledgeGraph":
        """`entities` is an iterable of (surface, type); ids follow input order."""
        surfaces: dict[str, int] = {}
        entity_types: dict[int, str] = {}
        for surface, etype in entities:
            if etype not in ENTITY_TYPES:
                raise IntegrityError(f"unknown entity type {etype!r}")
            if surface in surfaces:
                raise IntegrityError(f"duplicate surface {surface!r}")
            eid = len(set(surfaces.values()))
            surfaces[surface] = eid
            entity_types[eid] = etype
        names = list(relation_names) if relation_names else []
        if RELATED_TO not in names:
            names.append(RELATED_TO)
        relations = {name: i for i, name in enumerate(names)}
        return cls(camp=camp, surfaces=surfaces, entity_types=entity_types, relations=relations)

    @property
    def n_entities(self) -> int:
        return len(self.entity_types)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def relation_name(self, rid: int) -> str:
        for name, i in self.relations.items():
            if i == rid:
                return name
        raise KeyError(rid)

    def ensure_relation(self, name: str) -> int:
        if name not in self.relations:
            self.relations[name] = len(self.relations)
        return self.relations[name]

    def add_triple(self, triple: Triple) -> None:
        if triple.head == triple.tail:
            raise IntegrityError(f"degenerate triple {triple}")
        for eid in (triple.head, triple.tail):
            if eid not in self.entity_types:
                raise IntegrityError(f"triple references unknown entity {eid}")
        if triple.relation not in self.relations.values():
            raise IntegrityError(f"triple references unknown relation {triple.relation}")
        self.triples.add(triple)

    def entity_surfaces(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for surface, eid in self.surfaces.items():
            out.setdefault(eid, set()).add(surface)
        return out


def shared_surface_filter(graph: KnowledgeGraph):
    """Default cleansing predicate: drop triples whose endpoints share a surface form."""
    by_entity = graph.entity_surfaces()

    def keep(triple: Triple) -> bool:
        return not (by_entity.get(triple.head, set()) & by_entity.get(triple.tail, set()))

    return keep


def extract_triples(
    posts,
    graph: KnowledgeGraph,
    rules=DEFAULT_RELATION_RULES,
    window: int = DEFAULT_WINDOW,
    cleanse=None,
) -> set[Triple]:
    """Scan posts for entity co-occurrences within `window` tokens.

    For mention positions i < j with distinct entities, the relation is the
    first rule whose keyword occurs strictly between them, falling back to
    'related_to'. Output is deduplicated; the cleansing predicate (default:
    shared-surface filter) prunes suspect triples.
    """
    if not graph.surfaces:
        raise IntegrityError("entity lexicon is empty")
    keep = cleanse if cleanse is not None else shared_surface_filter(graph)
    for name, _ in rules:
        graph.ensure_relation(name)
    fallback = graph.ensure_relation(RELATED_TO)

    found: set[Triple] = set()
    for post in posts:
        mentions = [(pos, graph.surfaces[tok]) for pos, tok in enumerate(post) if tok in graph.surfaces]
        for a in range(len(mentions)):
            for b in range(a + 1, len(mentions)):
                i, head = mentions[a]
                j, tail = mentions[b]
                if head == tail or j - i > window:
                    continue
                between = set(post[i + 1 : j])
                rel = fallback
                for name, keywords in rules:
                    if between & keywords:
                        rel = graph.relations[name]
                        break
                t = Triple(head, rel, tail)
                if keep(t):
                    found.add(t)
    return found


# ---------------------------------------------------------------------------
# embeddings


@dataclass
class KGTrainConfig:
    d: int = 16
    epochs: int = 100
    lr: float = 0.05
    gamma: float = 6.0
    negatives: int = 4
    alpha: float = 1.0
    batch_size: int = 16
    seed: int = 0
    lam: float = 0.5  # HAKE phase mixing weight

    def __post_init__(self):
        if min(self.d, self.epochs, self.negatives, self.batch_size) < 1:
            raise ValueError("d, epochs, negatives, and batch_size must be positive")
        if self.lr <= 0 or self.gamma <= 0:
            raise ValueError("lr and gamma must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


@dataclass
class KGEmbedding:
    """Learned entity/relation tensors for one scoring method.

    Parameter layout per method:
      rotate: ent_re (n,d), ent_im (n,d), rel_phase (m,d) - phases stored
              directly, so every relation has unit modulus by construction.
      mode:   ent (n,d), rel (m,d)
      hake:   ent_mod (n,d), ent_phase (n,d), rel_mod (m,d), rel_phase (m,d)
    """

    method: str
    d: int
    n_entities: int
    n_relations: int
    params: dict[str, np.ndarray]
    lam: float = 0.5
    seed: int = 0
    trained: bool = False
    epoch: int = 0

    def check_ids(self, t: Triple) -> None:
        if not (0 <= t.head < self.n_entities and 0 <= t.tail < self.n_entities):
            raise IntegrityError(f"entity id out of range in {t}")
        if not (0 <= t.relation < self.n_relations):
            raise IntegrityError(f"relation id out of range in {t}")

    def entity_param_names(self):
        return [k for k in self.params if k.startswith("ent")]

    def relation_param_names(self):
        return [k for k in self.params if k.startswith("rel")]


def init_embedding(method, n_entities, n_relations, d, seed=0, lam=0.5) -> KGEmbedding:
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    rng = np.random.default_rng(seed)
    scale = 0.5 / math.sqrt(d)
    if method == "rotate":
        params = {
            "ent_re": rng.normal(0.0, scale, (n_entities, d)),
            "ent_im": rng.normal(0.0, scale, (n_entities, d)),
            "rel_phase": rng.uniform(-math.pi, math.pi, (n_relations, d)),
        }
    elif method == "mode":
        params = {
            "ent": rng.uniform(0.25, 1.0, (n_entities, d)),  # positive-modulus init
            "rel": rng.normal(0.0, scale, (n_relations, d)) + 1.0,
        }
    else:
        params = {
            "ent_mod": rng.uniform(0.25, 1.0, (n_entities, d)),
            "ent_phase": rng.uniform(-math.pi, math.pi, (n_entities, d)),
            "rel_mod": rng.normal(0.0, scale, (n_relations, d)) + 1.0,
            "rel_phase": rng.uniform(-math.pi, math.pi, (n_relations, d)),
        }
    return KGEmbedding(
        method=method,
        d=d,
        n_entities=n_entities,
        n_relations=n_relations,
        params=params,
        lam=lam,
        seed=seed,
    )


_NORM_EPS = 1e-12


def score_triple(emb: KGEmbedding, t: Triple) -> float:
    """Plausibility score; higher is more plausible, 0 is the maximum for rotate/mode."""
    s, _ = _score_and_grads(emb, t, want_grads=False)
    return s


def _score_and_grads(emb: KGEmbedding, t: Triple, want_grads=True):
    emb.check_ids(t)
    p = emb.params
    h, r, tl = t.head, t.relation, t.tail
    grads: dict[tuple[str, int], np.ndarray] = {}

    if emb.method == "rotate":
        re_h, im_h = p["ent_re"][h], p["ent_im"][h]
        theta = p["rel_phase"][r]
        cos_t, sin_t = np.cos(theta), np.sin(theta)
        a = re_h * cos_t - im_h * sin_t
        b = re_h * sin_t + im_h * cos_t
        u = a - p["ent_re"][tl]
        v = b - p["ent_im"][tl]
        dist = math.sqrt(float(u @ u + v @ v))
        score = -dist
        if want_grads:
            if dist > _NORM_EPS:
                du, dv = -u / dist, -v / dist
                _acc(grads, ("ent_re", h), du * cos_t + dv * sin_t)
                _acc(grads, ("ent_im", h), -du * sin_t + dv * cos_t)
                _acc(grads, ("rel_phase", r), -du * b + dv * a)
                _acc(grads, ("ent_re", tl), -du)
                _acc(grads, ("ent_im", tl), -dv)
        return score, grads

    if emb.method == "mode":
        eh, rel, et = p["ent"][h], p["rel"][r], p["ent"][tl]
        u = eh * rel - et
        dist = math.sqrt(float(u @ u))
        score = -dist
        if want_grads and dist > _NORM_EPS:
            du = -u / dist
            _acc(grads, ("ent", h), du * rel)
            _acc(grads, ("rel", r), du * eh)
            _acc(grads, ("ent", tl), -du)
        return score, grads

    # hake
    mh, mt = p["ent_mod"][h], p["ent_mod"][tl]
    rm = p["rel_mod"][r]
    u = mh * rm - mt
    dist = math.sqrt(float(u @ u))
    phi = (p["ent_phase"][h] + p["rel_phase"][r] - p["ent_phase"][tl]) / 2.0
    sin_phi = np.sin(phi)
    score = -dist - emb.lam * float(np.abs(sin_phi).sum())
    if want_grads:
        if dist > _NORM_EPS:
            du = -u / dist
            _acc(grads, ("ent_mod", h), du * rm)
            _acc(grads, ("rel_mod", r), du * mh)
            _acc(grads, ("ent_mod", tl), -du)
        dphi = -emb.lam * np.sign(sin_phi) * np.cos(phi) * 0.5
        _acc(grads, ("ent_phase", h), dphi)
        _acc(grads, ("rel_phase", r), dphi)
        _acc(grads, ("ent_phase", tl), -dphi)
    return score, grads


def _acc(grads, key, vec):
    if key in grads:
        grads[key] = grads[key] + vec
    else:
        grads[key] = np.array(vec, dtype=np.float64)


def negative_sample(t: Triple, n_entities: int, k: int, seed: int) -> list[Triple]:
    """k corruptions of one triple: fair-coin slot choice, uniform other entity."""
    if n_entities < 2:
        raise ValueError("need at least 2 entities to corrupt a triple")
    rng = random.Random(seed)
    out = []
    for _ in range(k):
        corrupt_head = rng.random() < 0.5
        original = t.head if corrupt_head else t.tail
        repl = rng.randrange(n_entities - 1)
        if repl >= original:
            repl += 1
        out.append(Triple(repl, t.relation, t.tail) if corrupt_head else Triple(t.head, t.relation, repl))
    return out


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _log_sigmoid(x: float) -> float:
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def _adversarial_weights(neg_scores, alpha: float) -> np.ndarray:
    z = alpha * np.asarray(neg_scores, dtype=np.float64)
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def kg_loss(emb: KGEmbedding, positive: Triple, negatives, gamma=6.0, alpha=1.0) -> float:
    """Self-adversarial negative-sampling loss; non-negative and finite."""
    loss, _ = kg_loss_and_grads(emb, positive, negatives, gamma, alpha, want_grads=False)
    return loss


def kg_loss_and_grads(emb, positive, negatives, gamma=6.0, alpha=1.0, want_grads=True):
    negatives = list(negatives)
    if not negatives:
        raise ValueError("need at least one negative")
    s_pos, g_pos = _score_and_grads(emb, positive, want_grads)
    neg_results = [_score_and_grads(emb, n, want_grads) for n in negatives]
    neg_scores = [s for s, _ in neg_results]
    w = _adversarial_weights(neg_scores, alpha)
    log_sig = [_log_sigmoid(-s - gamma) for s in neg_scores]

    loss = -_log_sigmoid(gamma + s_pos)
    for wi, ls in zip(w, log_sig):
        loss += -wi * ls

    grads: dict[tuple[str, int], np.ndarray] = {}
    if want_grads:
        coef_pos = _sigmoid(gamma + s_pos) - 1.0
        for key, vec in g_pos.items():
            _acc(grads, key, coef_pos * vec)
        # the adversarial weights depend on the scores, so the gradient
        # carries the softmax term: dL/ds_j = w_j(1-sigma(y_j)) - alpha*w_j*(g_j - sum_i w_i g_i)
        mean_ls = float(np.dot(w, log_sig))
        for wi, ls, (si, gi) in zip(w, log_sig, neg_results):
            coef = wi * (1.0 - _sigmoid(-si - gamma)) - alpha * wi * (ls - mean_ls)
            for key, vec in gi.items():
                _acc(grads, key, coef * vec)
    return loss, grads


def _wrap_phases(emb: KGEmbedding) -> None:
    for name in ("rel_phase", "ent_phase"):
        if name in emb.params and emb.method == "hake":
            p = emb.params[name]
            emb.params[name] = np.mod(p + math.pi, 2.0 * math.pi) - math.pi


def train_kg_embedding(graph: KnowledgeGraph, config: KGTrainConfig, method="rotate"):
    """SGD on the negative-sampling loss; returns (embedding, per-epoch loss history)."""
    triples = sorted(graph.triples)
    if not triples:
        raise IntegrityError("graph has no triples to train on")
    emb = init_embedding(
        method, graph.n_entities, graph.n_relations, config.d, config.seed, config.lam
    )
    rng = np.random.default_rng(config.seed + 1)
    known = set(graph.triples)  # training negatives never collide with known triples
    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(triples))
        epoch_loss = 0.0
        for b_start in range(0, len(triples), config.batch_size):
            batch = [triples[i] for i in order[b_start : b_start + config.batch_size]]
            acc: dict[tuple[str, int], np.ndarray] = {}
            batch_loss = 0.0
            for pos in batch:
                negs = _draw_negatives(pos, graph.n_entities, config.negatives, rng, known)
                loss, grads = kg_loss_and_grads(emb, pos, negs, config.gamma, config.alpha)
                batch_loss += loss
                for key, vec in grads.items():
                    _acc(acc, key, vec)
            if not math.isfinite(batch_loss):
                raise TrainingDiverged(
                    f"non-finite loss at epoch {epoch}, batch {b_start // config.batch_size}",
                    epoch=epoch,
                    batch=b_start // config.batch_size,
                )
            scale = config.lr / len(batch)
            for (name, row), vec in acc.items():
                emb.params[name][row] -= scale * vec
            epoch_loss += batch_loss
        history.append(epoch_loss / len(triples))
    _wrap_phases(emb)
    emb.trained = True
    emb.epoch = config.epochs
    return emb, history


def _draw_negatives(t: Triple, n_entities: int, k: int, rng, known=frozenset()) -> list[Triple]:
    out = []
    for _ in range(k):
        cand = t
        for _attempt in range(30):
            corrupt_head = rng.random() < 0.5
            original = t.head if corrupt_head else t.tail
            repl = int(rng.integers(n_entities - 1))
            if repl >= original:
                repl += 1
            cand = (
                Triple(repl, t.relation, t.tail)
                if corrupt_head
                else Triple(t.head, t.relation, repl)
            )
            if cand not in known:
                break
        out.append(cand)
    return out


def kg_grad_check(emb, triple, negatives, h=1e-5, gamma=6.0, alpha=1.0):
    """Max relative error of analytic vs central-difference gradients.

    Covers every parameter row touched by the positive or its negatives.
    Returns (max_rel_err, worst_parameter_name).
    """
    if h <= 0:
        raise ValueError("step must be positive")
    _, grads = kg_loss_and_grads(emb, triple, negatives, gamma, alpha)
    worst, worst_name = 0.0, ""
    for (name, row), analytic in sorted(grads.items()):
        arr = emb.params[name]
        for j in range(arr.shape[1]):
            orig = arr[row, j]
            arr[row, j] = orig + h
            lp = kg_loss(emb, triple, negatives, gamma, alpha)
            arr[row, j] = orig - h
            lm = kg_loss(emb, triple, negatives, gamma, alpha)
            arr[row, j] = orig
            numeric = (lp - lm) / (2.0 * h)
            err = abs(analytic[j] - numeric) / max(abs(analytic[j]), abs(numeric), 1e-6)
            if err > worst:
                worst, worst_name = err, f"{name}[{row},{j}]"
    return worst, worst_name


def entity_vector(emb: KGEmbedding, entity_id: int):
    """Canonical flattened entity vector, or None for unknown entities.

    Layout: rotate -> [Re..., Im...] (2d); hake -> [mod..., phase...] (2d);
    mode -> the d-dim row.
    """
    if not (0 <= entity_id < emb.n_entities):
        return None
    p = emb.params
    if emb.method == "rotate":
        return np.concatenate([p["ent_re"][entity_id], p["ent_im"][entity_id]])
    if emb.method == "mode":
        return p["ent"][entity_id].copy()
    return np.concatenate([p["ent_mod"][entity_id], p["ent_phase"][entity_id]])


def entity_vector_dim(emb: KGEmbedding) -> int:
    return emb.d if emb.method == "mode" else 2 * emb.d


def rank_of_tail(emb: KGEmbedding, triple: Triple) -> int:
    """1-based rank of the true tail among every candidate entity."""
    true_score = score_triple(emb, triple)
    rank = 1
    for cand in range(emb.n_entities):
        if cand == triple.tail:
            continue
        if score_triple(emb, Triple(triple.head, triple.relation, cand)) > true_score:
            rank += 1
    return rank


def beat_fraction(emb: KGEmbedding, triple: Triple, known_true=frozenset()) -> float:
    """Fraction of corrupted variants the triple outscores (filtered ranking).

    Corruptions that are themselves known-true triples are excluded from the
    comparison set.
    """
    true_score = score_triple(emb, triple)
    beaten = total = 0
    for cand in range(emb.n_entities):
        for corrupted in (
            Triple(triple.head, triple.relation, cand) if cand != triple.tail else None,
            Triple(cand, triple.relation, triple.tail) if cand != triple.head else None,
        ):
            if corrupted is None or corrupted in known_true:
                continue
            total += 1
            beaten += score_triple(emb, corrupted) < true_score
    return beaten / total if total else 1.0


# ---------------------------------------------------------------------------
# persistence


def save_graph(graph: KnowledgeGraph, path) -> None:
    path = Path(path)
    header = {
        "kind": "header",
        "camp": graph.camp,
        "entities": [
            {"surface": s, "id": i, "type": graph.entity_types[i]}
            for s, i in sorted(graph.surfaces.items(), key=lambda kv: (kv[1], kv[0]))
        ],
        "relations": [name for name, _ in sorted(graph.relations.items(), key=lambda kv: kv[1])],
    }
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, ensure_ascii=False) + "\n")
        for t in sorted(graph.triples):
            fh.write(json.dumps({"h": t.head, "r": t.relation, "t": t.tail}) + "\n")


def load_graph(path) -> KnowledgeGraph:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise ParseError("graph file is empty", 1)
    header = json.loads(lines[0])
    if header.get("kind") != "header":
        raise ParseError("first line must be the header object", 1)
    graph = KnowledgeGraph(
        camp=header["camp"],
        surfaces={e["surface"]: int(e["id"]) for e in header["entities"]},
        entity_types={int(e["id"]): e["type"] for e in header["entities"]},
        relations={name: i for i, name in enumerate(header["relations"])},
    )
    for line_no, ln in enumerate(lines[1:], start=2):
        obj = json.loads(ln)
        try:
            graph.add_triple(Triple(int(obj["h"]), int(obj["r"]), int(obj["t"])))
        except (KeyError, IntegrityError) as exc:
            raise ParseError(f"bad triple: {exc}", line_no) from exc
    return graph


CHECKPOINT_VERSION = 1


def save_embedding(emb: KGEmbedding, path) -> None:
    obj = {
        "version": CHECKPOINT_VERSION,
        "method": emb.method,
        "d": emb.d,
        "seed": emb.seed,
        "epoch": emb.epoch,
        "lam": emb.lam,
        "n_entities": emb.n_entities,
        "n_relations": emb.n_relations,
        "trained": emb.trained,
        "params": {k: v.tolist() for k, v in emb.params.items()},
    }
    Path(path).write_text(json.dumps(obj), encoding="utf-8")


def load_embedding(path) -> KGEmbedding:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("version") != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {obj.get('version')!r}")
    return KGEmbedding(
        method=obj["method"],
        d=int(obj["d"]),
        n_entities=int(obj["n_entities"]),
        n_relations=int(obj["n_relations"]),
        params={k: np.asarray(v, dtype=np.float64) for k, v in obj["params"].items()},
        lam=float(obj["lam"]),
        seed=int(obj["seed"]),
        trained=bool(obj["trained"]),
        epoch=int(obj["epoch"]),
    )
