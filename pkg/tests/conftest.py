"""Shared fixtures: a server corpus with crafted predictions and a trained comment model."""

import pytest

from newsprism.corpus import CorpusSpec, StanceDistribution, save_corpus, synth_corpus
from newsprism.gateway import ServerConfig
from newsprism.opinion_map import TsneConfig
from newsprism.stance import TrainConfig, save_comment_model, train_comment_classifier


def dist_for(side: str, ext: float) -> StanceDistribution:
    rest = (1.0 - ext) / 4.0
    p = [rest] * 5
    p[4 if side == "conservative" else 0] = ext
    return StanceDistribution(tuple(p))


def fixture_ext(i: int) -> float:
    """Distinct extremeness per article index 0..19: 5 high + 5 moderate per side."""
    side_offset = 0.002 if i >= 10 else 0.0
    j = i % 10
    if j < 5:
        return 0.955 + 0.004 * j + side_offset
    return 0.81 + 0.012 * (j - 5) + 3 * side_offset


def build_server_fixture(root, n_topics=2, comments_per_side=500, seed=17):
    """Corpus file with bundle-ready predictions plus a comment-model checkpoint."""
    root.mkdir(parents=True, exist_ok=True)
    arts, coms = synth_corpus(
        CorpusSpec(
            n_topics=n_topics,
            articles_per_topic_per_stance=4,
            comments_per_topic_per_stance=comments_per_side,
            noise=0.0,
            seed=seed,
        )
    )
    by_topic: dict[str, list] = {}
    for a in arts:
        by_topic.setdefault(a.topic_id, []).append(a)
    predicted = []
    for topic_arts in by_topic.values():
        topic_arts.sort(key=lambda a: a.id)
        for i, art in enumerate(topic_arts):
            side = "conservative" if i < 10 else "liberal"
            predicted.append(art.with_prediction(dist_for(side, fixture_ext(i))))
    corpus_path = root / "corpus.jsonl"
    save_corpus(predicted, coms, corpus_path)

    model, _ = train_comment_classifier(coms, TrainConfig(epochs=8, seed=0), d=16)
    model_path = root / "comment_model.json"
    save_comment_model(model, model_path)
    return {"corpus": corpus_path, "model": model_path}


def make_config(fixture, data_dir, **overrides) -> ServerConfig:
    defaults = dict(
        corpus_path=str(fixture["corpus"]),
        data_dir=str(data_dir),
        comment_model_path=str(fixture["model"]),
        tsne=TsneConfig(perplexity=6.0, iterations=120, seed=3),
        map_community_per_stance=8,
        seed=11,
    )
    defaults.update(overrides)
    return ServerConfig(**defaults)


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("gateway-fixture")
    return build_server_fixture(root)
