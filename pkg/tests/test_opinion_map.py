"""t-SNE affinities, objective, optimization, and map assembly."""

import math

import numpy as np
import pytest

from newsprism.corpus import Comment, CorpusSpec, synth_corpus
from newsprism.errors import IntegrityError
from newsprism.opinion_map import (
    OpinionMap,
    TsneConfig,
    build_map,
    kl_objective,
    pairwise_affinities,
    tsne,
    tsne_gradient,
)
from newsprism.stance import TrainConfig, train_comment_classifier


# ---------------------------------------------------------------------------
# affinities


def test_equilateral_triangle_uniform_affinities():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    aff = pairwise_affinities(X, perplexity=2.0)
    for i in range(3):
        row = np.delete(aff.conditional[i], i)
        assert np.allclose(row, 0.5, atol=1e-9)
    assert np.allclose(aff.P[aff.P > 0], 1.0 / 6.0, atol=1e-9)


def test_achieved_perplexity_matches_target():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 5))
    aff = pairwise_affinities(X, perplexity=10.0)
    for i in range(30):
        row = np.delete(aff.conditional[i], i)
        h = -float(np.sum(row * np.log(row + 1e-300)))
        assert abs(math.exp(h) - 10.0) <= 1e-3


def test_affinity_invariants_on_random_inputs():
    rng = np.random.default_rng(11)
    for trial in range(100):
        n = int(rng.integers(5, 14))
        X = rng.normal(size=(n, 4))
        aff = pairwise_affinities(X, perplexity=min(5.0, n - 1.5))
        aff.validate()  # zero diagonal, symmetry 1e-12, total 1e-9


def test_duplicate_points_fall_back_to_jitter():
    X = np.zeros((5, 3))
    X[3] = [1.0, 0.0, 0.0]
    aff = pairwise_affinities(X, perplexity=2.0)
    aff.validate()
    assert np.isfinite(aff.sigmas).all()


def test_affinity_preconditions():
    with pytest.raises(ValueError):
        pairwise_affinities(np.zeros((2, 2)), 1.0)
    with pytest.raises(ValueError):
        pairwise_affinities(np.random.default_rng(0).normal(size=(5, 2)), 5.0)


# ---------------------------------------------------------------------------
# objective


def test_kl_zero_when_layout_reproduces_affinities():
    Y = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    P = np.full((3, 3), 1.0 / 6.0)
    np.fill_diagonal(P, 0.0)
    assert kl_objective(P, Y) == pytest.approx(0.0, abs=1e-6)


def test_kl_nonnegative_on_random_pairs():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(4, 12))
        P = np.abs(rng.normal(size=(n, n)))
        P = (P + P.T) / 2.0
        np.fill_diagonal(P, 0.0)
        P /= P.sum()
        Y = rng.normal(size=(n, 2))
        assert kl_objective(P, Y) >= -1e-12


def _kl_oracle(P, Y):
    n = len(P)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                W[i, j] = 1.0 / (1.0 + np.sum((Y[i] - Y[j]) ** 2))
    Q = W / W.sum()
    kl = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and P[i, j] > 0:
                kl += P[i, j] * math.log(P[i, j] / Q[i, j])
    return kl


def test_kl_matches_formula_oracle():
    rng = np.random.default_rng(19)
    X = rng.normal(size=(8, 3))
    aff = pairwise_affinities(X, perplexity=4.0)
    Y = rng.normal(size=(8, 2))
    assert kl_objective(aff.P, Y) == pytest.approx(_kl_oracle(aff.P, Y), abs=1e-10)


def test_kl_translation_invariance():
    rng = np.random.default_rng(23)
    X = rng.normal(size=(10, 4))
    aff = pairwise_affinities(X, perplexity=5.0)
    Y = rng.normal(size=(10, 2))
    base = kl_objective(aff.P, Y)
    for c in ([3.0, -7.0], [100.0, 42.5]):
        assert kl_objective(aff.P, Y + np.asarray(c)) == pytest.approx(base, abs=1e-9)


def test_tsne_gradient_matches_finite_differences():
    rng = np.random.default_rng(31)
    X = rng.normal(size=(6, 4))
    aff = pairwise_affinities(X, perplexity=3.0)
    for trial in range(5):
        Y = rng.normal(size=(6, 2))
        grad = tsne_gradient(aff.P, Y)
        h = 1e-6
        for i, j in ((0, 0), (2, 1), (5, 0)):
            Yp, Ym = Y.copy(), Y.copy()
            Yp[i, j] += h
            Ym[i, j] -= h
            numeric = (kl_objective(aff.P, Yp) - kl_objective(aff.P, Ym)) / (2 * h)
            err = abs(grad[i, j] - numeric) / max(abs(grad[i, j]), abs(numeric), 1e-8)
            assert err < 1e-4


# ---------------------------------------------------------------------------
# optimization


def two_cluster_data(n_per=10, dim=16, sep=6.0, seed=5):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n_per, dim))
    b = rng.normal(size=(n_per, dim))
    a[:, 0] -= sep / 2
    b[:, 0] += sep / 2
    return np.vstack([a, b]), np.array([0] * n_per + [1] * n_per)


def test_two_cluster_recovery():
    X, labels = two_cluster_data()
    Y = tsne(X, TsneConfig(perplexity=5.0, iterations=600, seed=2))
    c0 = Y[labels == 0].mean(axis=0)
    c1 = Y[labels == 1].mean(axis=0)
    assigned = np.array(
        [0 if np.sum((y - c0) ** 2) <= np.sum((y - c1) ** 2) else 1 for y in Y]
    )
    agreement = float((assigned == labels).mean())
    assert agreement >= 0.95


def test_objective_final_below_post_exaggeration():
    X, _ = two_cluster_data(seed=9)
    _, history = tsne(
        X, TsneConfig(perplexity=5.0, iterations=500, seed=1), return_history=True
    )
    assert history[-1] <= history[300] + 1e-12


def test_tsne_bit_identical_per_seed():
    X, _ = two_cluster_data(n_per=6, seed=13)
    cfg = TsneConfig(perplexity=4.0, iterations=120, seed=21)
    Y1 = tsne(X, cfg)
    Y2 = tsne(X, cfg)
    assert np.array_equal(Y1, Y2)
    Y3 = tsne(X, TsneConfig(perplexity=4.0, iterations=120, seed=22))
    assert not np.array_equal(Y1, Y3)


# ---------------------------------------------------------------------------
# map assembly


def _trained_comment_model(seed=1):
    _, coms = synth_corpus(
        CorpusSpec(n_topics=2, comments_per_topic_per_stance=15, noise=0.0, seed=seed)
    )
    model, _ = train_comment_classifier(coms, TrainConfig(epochs=15, seed=0), d=16)
    return model, coms


MAP_CFG = TsneConfig(perplexity=6.0, iterations=260, seed=4)


def test_map_without_user_comments():
    model, coms = _trained_comment_model()
    topic = coms[0].topic_id
    m = build_map(topic, coms, [], model, MAP_CFG)
    assert {p.color for p in m.points} == {"red", "blue"}
    assert len(m.points) == sum(1 for c in coms if c.topic_id == topic)


def test_map_user_comment_adds_one_yellow_point():
    model, coms = _trained_comment_model()
    topic = coms[0].topic_id
    base = build_map(topic, coms, [], model, MAP_CFG)
    user = Comment(
        id="u1", topic_id=topic, tokens=("equity00", "filler01"), origin="user",
        author_session="sess-1",
    )
    withu = build_map(topic, coms, [user], model, MAP_CFG)
    assert len(withu.points) == len(base.points) + 1
    yellows = [p for p in withu.points if p.color == "yellow"]
    assert len(yellows) == 1
    assert yellows[0].comment_id == "u1"
    assert yellows[0].text == "equity00 filler01"


def test_map_red_blue_separation_on_separable_fixture():
    model, coms = _trained_comment_model()
    topic = coms[0].topic_id
    m = build_map(topic, coms, [], model, MAP_CFG)
    reds = np.array([(p.x, p.y) for p in m.points if p.color == "red"])
    blues = np.array([(p.x, p.y) for p in m.points if p.color == "blue"])

    def mean_pair_dist(A, B):
        return float(
            np.mean([np.linalg.norm(a - b) for i, a in enumerate(A) for j, b in enumerate(B)
                     if not (A is B and i >= j)])
        )

    intra = (mean_pair_dist(reds, reds) + mean_pair_dist(blues, blues)) / 2
    inter = mean_pair_dist(reds, blues)
    assert intra < inter


def test_map_serialization_deterministic():
    model, coms = _trained_comment_model()
    topic = coms[0].topic_id
    m1 = build_map(topic, coms, [], model, MAP_CFG)
    m2 = build_map(topic, coms, [], model, MAP_CFG)
    assert m1.to_json() == m2.to_json()
    assert OpinionMap.from_json(m1.to_json()).to_json() == m1.to_json()


def test_map_too_few_comments_errors():
    model, coms = _trained_comment_model()
    with pytest.raises(IntegrityError):
        build_map("nonexistent-topic", coms, [], model, MAP_CFG)
