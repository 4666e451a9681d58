"""Knowledge graphs: extraction, triple scoring, negative sampling, loss, training."""

import math
import random

import numpy as np
import pytest
import scipy.stats

from newsprism.errors import IntegrityError
from newsprism.kgraph import (
    beat_fraction,
    KGTrainConfig,
    KnowledgeGraph,
    Triple,
    entity_vector,
    extract_triples,
    init_embedding,
    kg_grad_check,
    kg_loss,
    kg_loss_and_grads,
    load_embedding,
    load_graph,
    negative_sample,
    rank_of_tail,
    save_embedding,
    save_graph,
    score_triple,
    train_kg_embedding,
)


def make_graph(n_entities=6, relation_names=("supports", "opposes")):
    g = KnowledgeGraph.build(
        "lib",
        [(f"ent{i}", "politician") for i in range(n_entities)],
        list(relation_names),
    )
    return g


# ---------------------------------------------------------------------------
# extraction


def test_extract_no_matches_is_empty():
    g = make_graph()
    assert extract_triples([["totally", "unrelated", "words"]], g) == set()


def test_extract_single_rule_fire():
    g = make_graph(2)
    triples = extract_triples([["ent0", "supports", "ent1"]], g)
    assert triples == {Triple(0, g.relations["supports"], 1)}


def test_extract_fallback_relation():
    g = make_graph(2)
    triples = extract_triples([["ent0", "met", "ent1"]], g)
    assert triples == {Triple(0, g.relations["related_to"], 1)}


def test_extract_window_limit():
    g = make_graph(2)
    far = ["ent0"] + ["pad"] * 13 + ["ent1"]
    assert extract_triples([far], g, window=12) == set()
    near = ["ent0"] + ["pad"] * 11 + ["ent1"]
    assert len(extract_triples([near], g, window=12)) == 1


def test_extract_matches_window_scan_oracle():
    rng = random.Random(50)
    g = make_graph(8)
    vocab = [f"ent{i}" for i in range(8)] + ["supports", "opposes", "backs", "slams"] + [
        f"word{i}" for i in range(30)
    ]
    posts = [[rng.choice(vocab) for _ in range(rng.randint(3, 25))] for _ in range(50)]
    got = extract_triples(posts, g, window=5)

    # brute-force oracle: direct nested scan over every position pair
    rules = [
        ("supports", {"supports", "backs", "endorses", "defends"}),
        ("opposes", {"opposes", "slams", "rejects", "condemns"}),
        ("proposes", {"proposes", "introduces", "drafts"}),
        ("criticizes", {"criticizes", "blames", "accuses"}),
    ]
    expected = set()
    for post in posts:
        for i in range(len(post)):
            for j in range(i + 1, len(post)):
                if j - i > 5:
                    continue
                if post[i] in g.surfaces and post[j] in g.surfaces:
                    h, t = g.surfaces[post[i]], g.surfaces[post[j]]
                    if h == t:
                        continue
                    rel = "related_to"
                    for name, kws in rules:
                        if set(post[i + 1 : j]) & kws:
                            rel = name
                            break
                    expected.add(Triple(h, g.relations[rel], t))
    assert got == expected


def test_graph_round_trip(tmp_path):
    g = make_graph(4)
    g.add_triple(Triple(0, 0, 1))
    g.add_triple(Triple(2, 1, 3))
    p = tmp_path / "graph.jsonl"
    save_graph(g, p)
    g2 = load_graph(p)
    assert g2.surfaces == g.surfaces
    assert g2.relations == g.relations
    assert g2.triples == g.triples
    assert g2.entity_types == g.entity_types


# ---------------------------------------------------------------------------
# scoring


def test_rotate_identity_rotation_max_score():
    emb = init_embedding("rotate", 3, 2, d=4, seed=1)
    emb.params["rel_phase"][0] = 0.0
    emb.params["ent_re"][1] = emb.params["ent_re"][0]
    emb.params["ent_im"][1] = emb.params["ent_im"][0]
    assert score_triple(emb, Triple(0, 0, 1)) == pytest.approx(0.0, abs=1e-12)
    # and 0 is the maximum
    assert score_triple(emb, Triple(0, 0, 2)) <= 0.0


def test_mode_forced_algebra():
    emb = init_embedding("mode", 3, 1, d=2, seed=0)
    emb.params["ent"][0] = (1.0, 1.0)
    emb.params["rel"][0] = (2.0, 2.0)
    emb.params["ent"][1] = (2.0, 2.0)
    assert score_triple(emb, Triple(0, 0, 1)) == pytest.approx(0.0, abs=1e-15)


def _oracle_score(emb, t):
    """Straight-line re-implementation of the three formulas."""
    p, (h, r, tl) = emb.params, t
    if emb.method == "rotate":
        th = p["rel_phase"][r]
        hr = p["ent_re"][h] * np.cos(th) - p["ent_im"][h] * np.sin(th)
        hi = p["ent_re"][h] * np.sin(th) + p["ent_im"][h] * np.cos(th)
        return -math.sqrt(float(((hr - p["ent_re"][tl]) ** 2 + (hi - p["ent_im"][tl]) ** 2).sum()))
    if emb.method == "mode":
        return -math.sqrt(float(((p["ent"][h] * p["rel"][r] - p["ent"][tl]) ** 2).sum()))
    dm = math.sqrt(float(((p["ent_mod"][h] * p["rel_mod"][r] - p["ent_mod"][tl]) ** 2).sum()))
    phi = (p["ent_phase"][h] + p["rel_phase"][r] - p["ent_phase"][tl]) / 2.0
    return -dm - emb.lam * float(np.abs(np.sin(phi)).sum())


@pytest.mark.parametrize("method", ["rotate", "mode", "hake"])
def test_score_matches_formula_oracle(method):
    emb = init_embedding(method, 5, 3, d=6, seed=42)
    rng = random.Random(7)
    for _ in range(20):
        h, t = rng.sample(range(5), 2)
        tr = Triple(h, rng.randrange(3), t)
        assert score_triple(emb, tr) == pytest.approx(_oracle_score(emb, tr), abs=1e-12)


def test_score_rejects_out_of_range_ids():
    emb = init_embedding("mode", 3, 2, d=4)
    with pytest.raises(IntegrityError):
        score_triple(emb, Triple(0, 0, 3))
    with pytest.raises(IntegrityError):
        score_triple(emb, Triple(0, 2, 1))


def test_rotate_is_not_symmetric():
    emb = init_embedding("rotate", 5, 2, d=4, seed=3)
    assert score_triple(emb, Triple(0, 1, 2)) != score_triple(emb, Triple(2, 1, 0))


def test_hake_phase_wrap_invariance():
    emb = init_embedding("hake", 4, 2, d=5, seed=11)
    triples = [Triple(0, 0, 1), Triple(2, 1, 3), Triple(1, 0, 2)]
    before = [score_triple(emb, t) for t in triples]
    emb.params["ent_phase"][1, 2] += 2.0 * math.pi
    emb.params["rel_phase"][0, 0] += 2.0 * math.pi
    after = [score_triple(emb, t) for t in triples]
    for x, y in zip(before, after):
        assert x == pytest.approx(y, abs=1e-9)


# ---------------------------------------------------------------------------
# negative sampling


def test_negative_sample_k_zero():
    assert negative_sample(Triple(0, 0, 1), 5, 0, seed=1) == []


def test_negative_sample_two_entities_forced():
    t = Triple(0, 0, 1)
    for seed in range(10):
        for neg in negative_sample(t, 2, 5, seed):
            assert neg != t
            # the corrupted slot always holds the only other entity
            assert neg in (Triple(1, 0, 1), Triple(0, 0, 0))


def test_negative_sample_deterministic():
    t = Triple(2, 1, 7)
    assert negative_sample(t, 10, 20, seed=9) == negative_sample(t, 10, 20, seed=9)
    assert negative_sample(t, 10, 20, seed=9) != negative_sample(t, 10, 20, seed=10)


def test_negative_sample_uniformity_chi_squared():
    t = Triple(0, 0, 1)
    negs = negative_sample(t, 10, 10_000, seed=77)
    head_repl = [n.head for n in negs if n.head != 0]
    tail_repl = [n.tail for n in negs if n.tail != 1]
    assert len(head_repl) + len(tail_repl) == 10_000
    head_counts = [head_repl.count(e) for e in range(10) if e != 0]
    tail_counts = [tail_repl.count(e) for e in range(10) if e != 1]
    assert scipy.stats.chisquare(head_counts).pvalue > 0.01
    assert scipy.stats.chisquare(tail_counts).pvalue > 0.01


# ---------------------------------------------------------------------------
# loss


def test_loss_asymptote_near_zero():
    # pos score at its max (0), negatives far away, large margin
    emb = init_embedding("mode", 3, 1, d=2, seed=0)
    emb.params["ent"][0] = (1.0, 1.0)
    emb.params["rel"][0] = (1.0, 1.0)
    emb.params["ent"][1] = (1.0, 1.0)
    emb.params["ent"][2] = (120.0, 120.0)
    loss = kg_loss(emb, Triple(0, 0, 1), [Triple(0, 0, 2)], gamma=30.0, alpha=0.0)
    assert 0.0 <= loss < 1e-12


def test_loss_alpha_zero_uniform_weights():
    emb = init_embedding("rotate", 6, 2, d=4, seed=5)
    pos = Triple(0, 0, 1)
    negs = [Triple(2, 0, 1), Triple(0, 0, 3), Triple(4, 0, 1)]
    loss = kg_loss(emb, pos, negs, gamma=2.0, alpha=0.0)
    expected = -math.log(1 / (1 + math.exp(-(2.0 + score_triple(emb, pos)))))
    for n in negs:
        s = score_triple(emb, n)
        expected += -(1 / 3) * math.log(1 / (1 + math.exp(-(-s - 2.0))))
    assert loss == pytest.approx(expected, abs=1e-12)


def test_loss_matches_formula_oracle():
    emb = init_embedding("hake", 5, 2, d=4, seed=8)
    pos = Triple(0, 1, 2)
    negs = [Triple(3, 1, 2), Triple(0, 1, 4)]
    gamma, alpha = 4.0, 1.5
    s_pos = _oracle_score(emb, pos)
    s_negs = [_oracle_score(emb, n) for n in negs]
    exps = [math.exp(alpha * s - max(alpha * x for x in s_negs)) for s in s_negs]
    w = [e / sum(exps) for e in exps]
    sigma = lambda x: 1 / (1 + math.exp(-x))
    expected = -math.log(sigma(gamma + s_pos)) - sum(
        wi * math.log(sigma(-si - gamma)) for wi, si in zip(w, s_negs)
    )
    assert kg_loss(emb, pos, negs, gamma, alpha) == pytest.approx(expected, abs=1e-12)


def test_loss_nonnegative_and_finite():
    emb = init_embedding("rotate", 8, 3, d=5, seed=2)
    rng = random.Random(0)
    for _ in range(50):
        h, t = rng.sample(range(8), 2)
        pos = Triple(h, rng.randrange(3), t)
        negs = negative_sample(pos, 8, 4, seed=rng.randrange(1000))
        loss = kg_loss(emb, pos, negs, gamma=rng.uniform(0.5, 8), alpha=rng.uniform(0, 2))
        assert math.isfinite(loss) and loss >= 0.0


# ---------------------------------------------------------------------------
# gradient checks


@pytest.mark.parametrize("method", ["rotate", "mode", "hake"])
def test_grad_check(method):
    rng = random.Random(123)
    for trial in range(5):
        emb = init_embedding(method, 6, 3, d=5, seed=trial)
        h, t = rng.sample(range(6), 2)
        pos = Triple(h, rng.randrange(3), t)
        negs = negative_sample(pos, 6, 3, seed=trial)
        err, name = kg_grad_check(emb, pos, negs, h=1e-5, gamma=3.0, alpha=1.0)
        assert err < 1e-4, f"{method} trial {trial}: {name} err {err}"


def test_symmetric_negatives_cancel():
    # two mirrored negatives: gradients on the shared head and relation vanish
    emb = init_embedding("mode", 6, 2, d=3, seed=4)
    p = emb.params
    hr = p["ent"][0] * p["rel"][0]
    p["ent"][1] = hr + np.array([0.3, -0.2, 0.1])
    p["ent"][2] = 2.0 * hr - p["ent"][1]  # mirror of ent1 about h*r
    pos = Triple(3, 1, 4)
    negs = [Triple(0, 0, 1), Triple(0, 0, 2)]
    _, grads = kg_loss_and_grads(emb, pos, negs, gamma=0.0, alpha=0.0)
    assert np.abs(grads[("ent", 0)]).max() < 1e-8
    assert np.abs(grads[("rel", 0)]).max() < 1e-8


# ---------------------------------------------------------------------------
# training


def planted_graph(n_entities=12, offsets=(1, 3, 5)):
    g = KnowledgeGraph.build(
        "con",
        [(f"ent{i}", "party") for i in range(n_entities)],
        [f"shift{k}" for k in offsets],
    )
    for r, off in enumerate(offsets):
        for i in range(n_entities):
            g.add_triple(Triple(i, r, (i + off) % n_entities))
    return g


def test_train_single_triple_loss_decreases():
    g = KnowledgeGraph.build("lib", [("a", "party"), ("b", "party")], ["r"])
    g.add_triple(Triple(0, 0, 1))
    emb, history = train_kg_embedding(g, KGTrainConfig(d=4, epochs=50, seed=1), method="rotate")
    assert len(history) == 50
    assert history[-1] < history[0]
    assert emb.trained


@pytest.mark.parametrize("method", ["rotate", "mode", "hake"])
def test_train_improves_mean_tail_rank(method):
    g = planted_graph()
    triples = sorted(g.triples)
    config = KGTrainConfig(d=8, epochs=80, lr=0.1, seed=3)
    untrained = init_embedding(method, g.n_entities, g.n_relations, config.d, config.seed, config.lam)
    base_rank = sum(rank_of_tail(untrained, t) for t in triples) / len(triples)
    emb, _ = train_kg_embedding(g, config, method=method)
    trained_rank = sum(rank_of_tail(emb, t) for t in triples) / len(triples)
    assert trained_rank < base_rank


def camp_graph(per_camp=6):
    """Two camps; 'allies' links within a camp, 'opposes' links across."""
    n = per_camp * 2
    g = KnowledgeGraph.build(
        "con", [(f"ent{i}", "party") for i in range(n)], ["allies", "opposes"]
    )
    for camp in (range(per_camp), range(per_camp, n)):
        for i in camp:
            for j in camp:
                if i != j:
                    g.add_triple(Triple(i, 0, j))
    for i in range(per_camp):
        for j in range(per_camp, n):
            g.add_triple(Triple(i, 1, j))
    return g


@pytest.mark.parametrize("method", ["rotate", "hake"])
def test_train_held_out_triples_beat_corruptions(method):
    full = camp_graph()
    all_triples = sorted(full.triples)
    held_out = random.Random(2).sample(all_triples, 6)
    g = camp_graph()
    g.triples = set(all_triples) - set(held_out)
    emb, _ = train_kg_embedding(g, KGTrainConfig(d=8, epochs=120, lr=0.1, seed=5), method=method)
    known_true = set(all_triples)
    for t in held_out:
        frac = beat_fraction(emb, t, known_true)
        assert frac >= 0.90, f"{method} {t}: beat only {frac:.2f}"


def test_train_bit_identical_per_seed():
    g = planted_graph(8, (1, 2))
    cfg = KGTrainConfig(d=4, epochs=10, seed=21)
    emb1, hist1 = train_kg_embedding(g, cfg, method="hake")
    emb2, hist2 = train_kg_embedding(g, cfg, method="hake")
    assert hist1 == hist2
    for k in emb1.params:
        assert np.array_equal(emb1.params[k], emb2.params[k])


def test_train_empty_graph_rejected():
    g = make_graph(3)
    with pytest.raises(IntegrityError):
        train_kg_embedding(g, KGTrainConfig())


# ---------------------------------------------------------------------------
# entity vectors and checkpoints


def test_entity_vector_unknown_absent():
    emb = init_embedding("rotate", 3, 1, d=4)
    assert entity_vector(emb, 99) is None


def test_entity_vector_rotate_layout():
    emb = init_embedding("rotate", 3, 1, d=4, seed=6)
    v = entity_vector(emb, 1)
    assert v.shape == (8,)
    assert np.array_equal(v[:4], emb.params["ent_re"][1])
    assert np.array_equal(v[4:], emb.params["ent_im"][1])


def test_entity_vector_round_trip():
    emb = init_embedding("mode", 4, 1, d=6, seed=2)
    assert np.array_equal(entity_vector(emb, 2), emb.params["ent"][2])


def test_embedding_checkpoint_round_trip(tmp_path):
    g = planted_graph(6, (1, 2))
    emb, _ = train_kg_embedding(g, KGTrainConfig(d=4, epochs=5, seed=9), method="mode")
    p = tmp_path / "emb.json"
    save_embedding(emb, p)
    emb2 = load_embedding(p)
    assert emb2.method == emb.method and emb2.d == emb.d and emb2.trained
    for k in emb.params:
        assert np.array_equal(emb.params[k], emb2.params[k])
