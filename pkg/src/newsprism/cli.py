"""Command-line entry points.

    newsprism corpus gen --spec spec.json --seed 7 --out data/
    newsprism corpus vocab --corpus data/corpus.jsonl --min-freq 2 --out vocab.json
    newsprism kg extract --posts posts.txt --lexicon lexicon.json --camp lib --out graph.jsonl
    newsprism kg train --graph graph.jsonl --method rotate --out emb.json
    newsprism kg check-grad --method hake
    newsprism stance train --corpus data/corpus.jsonl --out model.json
    newsprism stance eval --corpus data/corpus.jsonl --kfold 3
    newsprism stance predict --article articles.jsonl --model model.json
    newsprism stance check-grad
    newsprism study report --surveys surveys.jsonl --logs events.jsonl --corpus data/corpus.jsonl
    newsprism serve --config server.json
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

from . import stats
from .corpus import CorpusSpec, build_vocab, load_corpus, save_corpus, synth_corpus, tokenize
from .feed import ReadEventLog
from .kgraph import (
    KGTrainConfig,
    KnowledgeGraph,
    Triple,
    extract_triples,
    init_embedding,
    kg_grad_check,
    load_graph,
    negative_sample,
    save_embedding,
    save_graph,
    train_kg_embedding,
)
from .stance import (
    TrainConfig,
    attach_predictions,
    init_stance_model,
    kfold_eval,
    load_stance_model,
    model_grad_check,
    save_stance_model,
    train,
)


def _cmd_corpus_gen(args):
    if args.spec:
        spec = CorpusSpec.from_json(json.loads(Path(args.spec).read_text(encoding="utf-8")))
    else:
        spec = CorpusSpec()
    if args.seed is not None:
        spec.seed = args.seed
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    articles, comments = synth_corpus(spec)
    save_corpus(articles, comments, out / "corpus.jsonl")
    (out / "spec.json").write_text(json.dumps(spec.to_json(), indent=2), encoding="utf-8")
    print(f"wrote {len(articles)} articles and {len(comments)} comments to {out/'corpus.jsonl'}")


def _cmd_corpus_vocab(args):
    articles, comments = load_corpus(args.corpus)
    vocab = build_vocab(articles, comments, min_freq=args.min_freq)
    Path(args.out).write_text(json.dumps(vocab.to_json()), encoding="utf-8")
    print(f"vocabulary of {len(vocab)} tokens (min_freq={args.min_freq}) -> {args.out}")


def _cmd_kg_extract(args):
    lex = json.loads(Path(args.lexicon).read_text(encoding="utf-8"))
    entities = [
        (e["surface"], e["type"]) if isinstance(e, dict) else tuple(e)
        for e in lex["entities"]
    ]
    graph = KnowledgeGraph.build(args.camp, entities, lex.get("relations"))
    posts = [tokenize(line) for line in Path(args.posts).read_text(encoding="utf-8").splitlines()]
    triples = extract_triples(posts, graph, window=args.window)
    for t in triples:
        graph.add_triple(t)
    save_graph(graph, args.out)
    print(f"extracted {len(triples)} triples from {len(posts)} posts -> {args.out}")


def _cmd_kg_train(args):
    graph = load_graph(args.graph)
    config = KGTrainConfig(d=args.d, epochs=args.epochs, lr=args.lr, seed=args.seed)
    emb, history = train_kg_embedding(graph, config, method=args.method)
    save_embedding(emb, args.out)
    print(
        f"trained {args.method} embedding (d={args.d}) for {args.epochs} epochs: "
        f"loss {history[0]:.4f} -> {history[-1]:.4f}; checkpoint {args.out}"
    )


def _cmd_kg_check_grad(args):
    rng = random.Random(args.seed)
    worst = 0.0
    for trial in range(args.trials):
        emb = init_embedding(args.method, 6, 3, d=args.d, seed=trial)
        h, t = rng.sample(range(6), 2)
        pos = Triple(h, rng.randrange(3), t)
        negs = negative_sample(pos, 6, 3, seed=trial)
        err, name = kg_grad_check(emb, pos, negs, h=1e-5)
        worst = max(worst, err)
        print(f"trial {trial}: max rel err {err:.3e} ({name})")
    ok = worst < 1e-4
    print(f"{'OK' if ok else 'FAIL'}: worst {worst:.3e} over {args.trials} trials")
    return 0 if ok else 1


def _load_labeled(path):
    articles, _ = load_corpus(path)
    labeled = [a for a in articles if a.gold_stance is not None]
    if not labeled:
        raise SystemExit("corpus has no gold-labeled articles")
    return labeled


def _cmd_stance_train(args):
    labeled = _load_labeled(args.corpus)
    vocab = build_vocab(labeled, [], min_freq=1)
    model = init_stance_model(vocab, d=args.d, seed=args.seed)
    config = TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed)
    model, history = train(model, labeled, config=config)
    save_stance_model(model, args.out)
    print(
        f"trained stance model on {len(labeled)} articles: "
        f"final loss {history[-1][0]:.4f}, accuracy {history[-1][1]:.3f}; checkpoint {args.out}"
    )


def _cmd_stance_eval(args):
    labeled = _load_labeled(args.corpus)
    config = TrainConfig(epochs=args.epochs, lr=args.lr, seed=args.seed)
    mean, per_fold = kfold_eval(labeled, args.kfold, config, d=args.d)
    for i, acc in enumerate(per_fold):
        print(f"fold {i}: accuracy {acc:.4f}")
    print(f"mean accuracy over {args.kfold} folds: {mean:.4f}")


def _cmd_stance_predict(args):
    model = load_stance_model(args.model)
    articles, _ = load_corpus(args.article)
    predicted = attach_predictions(model, articles)
    for art in predicted:
        dist = art.prediction
        polarity, strength = dist.binary()
        print(
            json.dumps(
                {
                    "id": art.id,
                    "p": [round(x, 6) for x in dist.p],
                    "stance": polarity,
                    "strength": round(strength, 6),
                    "extremeness": round(dist.extremeness, 6),
                }
            )
        )
    if args.out:
        save_corpus(predicted, [], args.out)


def _cmd_stance_check_grad(args):
    arts, _ = synth_corpus(CorpusSpec(n_topics=2, articles_per_topic_per_stance=1, seed=args.seed))
    vocab = build_vocab(arts, [], min_freq=1)
    worst = 0.0
    rng = random.Random(args.seed)
    for trial in range(args.trials):
        model = init_stance_model(vocab, d=args.d, seed=trial)
        err, name = model_grad_check(model, arts[rng.randrange(len(arts))], label=trial % 5)
        worst = max(worst, err)
        print(f"trial {trial}: max rel err {err:.3e} ({name})")
    ok = worst < 1e-4
    print(f"{'OK' if ok else 'FAIL'}: worst {worst:.3e} over {args.trials} trials")
    return 0 if ok else 1


def _cmd_study_report(args):
    surveys = stats.load_surveys(args.surveys)
    events = ReadEventLog(args.logs).read_all() if args.logs else []
    article_stances = None
    if args.corpus:
        articles, _ = load_corpus(args.corpus)
        article_stances = {
            a.id: a.prediction.binary()[0] for a in articles if a.prediction is not None
        }
    report = stats.compose_study_report(
        surveys,
        events=events,
        article_stances=article_stances,
        alpha=args.alpha,
        count_kind=args.read_kind,
    )
    if args.json_out:
        Path(args.json_out).write_text(json.dumps(report, indent=2), encoding="utf-8")
    print(json.dumps(report) if args.json else stats.render_report_text(report))


def _cmd_serve(args):
    from .gateway import ServerConfig, serve

    config = ServerConfig.from_file(args.config)
    server = serve(config)
    try:
        server.thread.join()
    except KeyboardInterrupt:
        server.stop()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="newsprism", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="group", required=True)

    corpus = sub.add_parser("corpus", help="corpus generation and vocabulary")
    corpus_sub = corpus.add_subparsers(dest="cmd", required=True)
    gen = corpus_sub.add_parser("gen", help="generate a synthetic corpus")
    gen.add_argument("--spec", help="CorpusSpec JSON file (defaults used when omitted)")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--out", required=True, help="output directory")
    gen.set_defaults(fn=_cmd_corpus_gen)
    vocab = corpus_sub.add_parser("vocab", help="build a vocabulary")
    vocab.add_argument("--corpus", required=True)
    vocab.add_argument("--min-freq", type=int, default=1, dest="min_freq")
    vocab.add_argument("--out", required=True)
    vocab.set_defaults(fn=_cmd_corpus_vocab)

    kg = sub.add_parser("kg", help="knowledge graphs and embeddings")
    kg_sub = kg.add_subparsers(dest="cmd", required=True)
    ext = kg_sub.add_parser("extract", help="extract triples from posts")
    ext.add_argument("--posts", required=True, help="text file, one post per line")
    ext.add_argument("--lexicon", required=True, help="JSON with entities[] and relations[]")
    ext.add_argument("--camp", choices=("lib", "con"), required=True)
    ext.add_argument("--window", type=int, default=12)
    ext.add_argument("--out", required=True)
    ext.set_defaults(fn=_cmd_kg_extract)
    ktrain = kg_sub.add_parser("train", help="train a triple-scoring embedding")
    ktrain.add_argument("--graph", required=True)
    ktrain.add_argument("--method", choices=("rotate", "hake", "mode"), default="rotate")
    ktrain.add_argument("--d", type=int, default=16)
    ktrain.add_argument("--epochs", type=int, default=100)
    ktrain.add_argument("--lr", type=float, default=0.05)
    ktrain.add_argument("--seed", type=int, default=0)
    ktrain.add_argument("--out", required=True)
    ktrain.set_defaults(fn=_cmd_kg_train)
    kcheck = kg_sub.add_parser("check-grad", help="verify gradients by finite differences")
    kcheck.add_argument("--method", choices=("rotate", "hake", "mode"), default="rotate")
    kcheck.add_argument("--d", type=int, default=5)
    kcheck.add_argument("--trials", type=int, default=10)
    kcheck.add_argument("--seed", type=int, default=0)
    kcheck.set_defaults(fn=_cmd_kg_check_grad)

    stance = sub.add_parser("stance", help="the stance classifier")
    stance_sub = stance.add_subparsers(dest="cmd", required=True)
    strain = stance_sub.add_parser("train", help="train on a labeled corpus")
    strain.add_argument("--corpus", required=True)
    strain.add_argument("--d", type=int, default=32)
    strain.add_argument("--epochs", type=int, default=50)
    strain.add_argument("--lr", type=float, default=0.25)
    strain.add_argument("--seed", type=int, default=0)
    strain.add_argument("--out", required=True)
    strain.set_defaults(fn=_cmd_stance_train)
    seval = stance_sub.add_parser("eval", help="k-fold cross validation")
    seval.add_argument("--corpus", required=True)
    seval.add_argument("--kfold", type=int, default=3)
    seval.add_argument("--d", type=int, default=16)
    seval.add_argument("--epochs", type=int, default=25)
    seval.add_argument("--lr", type=float, default=0.25)
    seval.add_argument("--seed", type=int, default=0)
    seval.set_defaults(fn=_cmd_stance_eval)
    spred = stance_sub.add_parser("predict", help="predict stances for articles")
    spred.add_argument("--article", required=True, help="JSON-lines article file")
    spred.add_argument("--model", required=True)
    spred.add_argument("--out", help="also write the predicted corpus here")
    spred.set_defaults(fn=_cmd_stance_predict)
    scheck = stance_sub.add_parser("check-grad", help="verify gradients by finite differences")
    scheck.add_argument("--d", type=int, default=8)
    scheck.add_argument("--trials", type=int, default=5)
    scheck.add_argument("--seed", type=int, default=0)
    scheck.set_defaults(fn=_cmd_stance_check_grad)

    study = sub.add_parser("study", help="survey statistics and reports")
    study_sub = study.add_subparsers(dest="cmd", required=True)
    rep = study_sub.add_parser("report", help="t-tests, ANOVA, and consumption analytics")
    rep.add_argument("--surveys", required=True)
    rep.add_argument("--logs", help="read-event JSONL")
    rep.add_argument("--corpus", help="predicted corpus for article stances")
    rep.add_argument("--alpha", type=float, default=0.05)
    rep.add_argument("--read-kind", default="article_open", dest="read_kind",
                     choices=("article_open", "scroll_complete"))
    rep.add_argument("--json", action="store_true", help="print machine-readable JSON")
    rep.add_argument("--json-out", dest="json_out", help="also write JSON to this path")
    rep.set_defaults(fn=_cmd_study_report)

    srv = sub.add_parser("serve", help="run the HTTP gateway")
    srv.add_argument("--config", required=True, help="ServerConfig JSON file")
    srv.set_defaults(fn=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    result = args.fn(args)
    return int(result or 0)


if __name__ == "__main__":
    sys.exit(main())
