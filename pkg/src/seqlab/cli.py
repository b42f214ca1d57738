"""``seqlab`` command line.

Exit codes: 0 success, 1 usage error, 2 bad input data, 3 numeric failure
(including a failed gradient check).
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from . import crf as crf_mod
from . import model as rnn_mod
from .corpus import Document, TaggedSequence, gen_synthetic, load_conll, read_text_corpus, save_conll, to_sequences
from .embeddings import SkipGramConfig, init_embedding_layer, load_word2vec_text, save_word2vec_text, train_skipgram
from .errors import ContractError, DataFormatError, NumericError
from .gradcheck import TOLERANCE, suite
from .serialize import load_model, save_model
from .tagscheme import Metrics, evaluate, kfold_split
from .vocab import TagSet, Vocabulary

log = logging.getLogger("seqlab")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
ARCHES = ("rnn", "lstm", "gru", "crf", "crf-nocontext")
DEFAULT_LR = {"crf": 0.05, "crf-nocontext": 0.05}  # recurrent models default to 0.5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise UsageError(message)


def _seed(value):
    if value is not None:
        return value
    env = os.environ.get("SEQLAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"SEQLAB_SEED must be an integer, got {env!r}") from None


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ----------------------------------------------------------------- training

def training_config(args) -> dict:
    """Fully resolved training configuration (everything needed to rerun)."""
    lr = args.lr if args.lr is not None else DEFAULT_LR.get(args.arch, 0.5)
    cfg = {"arch": args.arch, "epochs": args.epochs, "learning_rate": lr, "seed": _seed(args.seed),
           "embeddings": args.embeddings, "dim": args.dim}
    if args.arch.startswith("crf"):
        cfg.update(l2=args.l2, normalize_context=args.normalize_context)
    else:
        cfg.update(hidden=args.hidden, variant=args.variant, use_bias=args.use_bias,
                   seq_unit=args.seq_unit, clip_norm=args.clip)
    return cfg


def fit(docs: list[Document], cfg: dict, pretrained=None):
    """Train one model of ``cfg['arch']`` on ``docs``."""
    seqs = to_sequences(docs, "sentence")
    if not seqs:
        raise DataFormatError("training corpus holds no sentences")
    vocab = Vocabulary.build(t for s in seqs for t in s.tokens)
    tagset = TagSet.build(t for s in seqs for t in s.tags)
    dim = pretrained.dim if pretrained is not None else cfg["dim"]
    emb = init_embedding_layer(vocab, pretrained, cfg["seed"], dim=dim)
    if cfg["arch"].startswith("crf"):
        model = crf_mod.init_crf(vocab, tagset, emb, context=cfg["arch"] == "crf",
                                 normalize_context=cfg["normalize_context"])
        tc = crf_mod.CrfTrainConfig(learning_rate=cfg["learning_rate"], epochs=cfg["epochs"],
                                    seed=cfg["seed"], l2=cfg["l2"])
        return crf_mod.train_crf(model, seqs, tc)
    model = rnn_mod.init_model(vocab, tagset, cfg["arch"], hidden=cfg["hidden"], variant=cfg["variant"],
                               use_bias=cfg["use_bias"], seed=cfg["seed"], embedding=emb)
    tc = rnn_mod.TrainConfig(learning_rate=cfg["learning_rate"], epochs=cfg["epochs"], seed=cfg["seed"],
                             clip_norm=cfg["clip_norm"], seq_unit=cfg["seq_unit"])
    return rnn_mod.train(model, docs, tc)


def predict_documents(model, docs: list[Document]) -> list[Document]:
    """Tag every sentence; document-mode recurrent models read whole documents."""
    out = []
    for doc in docs:
        if isinstance(model, crf_mod.CrfModel):
            tagged = [crf_mod.predict(model, s.tokens) for s in doc.sentences]
        elif model.seq_unit == "document":
            flat = rnn_mod.predict(model, [t for s in doc.sentences for t in s.tokens])
            tagged, at = [], 0
            for s in doc.sentences:
                tagged.append(flat[at:at + len(s)])
                at += len(s)
        else:
            tagged = [rnn_mod.predict(model, s.tokens) for s in doc.sentences]
        out.append(Document(doc.id, tuple(TaggedSequence(s.tokens, t) for s, t in zip(doc.sentences, tagged))))
    return out


def _load_pretrained(path):
    return load_word2vec_text(path) if path else None


def cmd_train(args) -> int:
    cfg = training_config(args)
    docs = load_conll(args.train)
    model, trace = fit(docs, cfg, _load_pretrained(args.embeddings))
    save_model(model, args.out)
    inputs = {"train": {"path": str(args.train), "sha256": _digest(args.train)}}
    if args.embeddings:
        inputs["embeddings"] = {"path": str(args.embeddings), "sha256": _digest(args.embeddings)}
    run = {"version": __version__, "command": "train", "config": cfg, "seed": cfg["seed"], "inputs": inputs,
           "trace": trace}
    Path(str(args.out) + ".run.json").write_text(json.dumps(run, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {args.out} (final objective {trace[-1]:.6f})")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    docs = load_conll(args.input, allow_untagged=True)
    save_conll(predict_documents(model, docs), args.out)
    return EXIT_OK


def _sentences(docs):
    return [s.tags for s in to_sequences(docs, "sentence")]


def cmd_evaluate(args) -> int:
    gold, pred = load_conll(args.gold), load_conll(args.pred)
    g, p = to_sequences(gold), to_sequences(pred)
    if [s.tokens for s in g] != [s.tokens for s in p]:
        raise DataFormatError("gold and predicted files hold different tokens")
    metrics = evaluate([s.tags for s in g], [s.tags for s in p])
    print(metrics.to_json() if args.json else metrics.report())
    return EXIT_OK


def _run_fold(job):
    cfg, train_docs, test_docs, pretrained_path = job
    model, _ = fit(train_docs, cfg, _load_pretrained(pretrained_path))
    predicted = predict_documents(model, test_docs)
    return evaluate(_sentences(test_docs), _sentences(predicted))


def cmd_crossval(args) -> int:
    cfg = training_config(args)
    docs = load_conll(args.data)
    assignment = kfold_split(docs, args.folds, cfg["seed"])
    jobs = [(cfg, [d for d, a in zip(docs, assignment) if a != k], [d for d, a in zip(docs, assignment) if a == k],
             args.embeddings) for k in range(args.folds)]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            per_fold = list(pool.map(_run_fold, jobs))
    else:
        per_fold = [_run_fold(j) for j in jobs]
    pooled = Metrics()
    for k, m in enumerate(per_fold):
        log.info("fold %d: P=%.4f R=%.4f F=%.4f", k, m.precision, m.recall, m.f1)
        pooled = pooled.merge(m)
    config = {**cfg, "folds": args.folds, "split": "document"}
    print(pooled.to_json(config) if args.json else pooled.report())
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    arches = ("rnn", "lstm", "gru", "crf") if args.arch == "all" else (args.arch,)
    start = _seed(args.seed)
    results = suite(arches, range(start, start + args.seeds))
    worst = {}
    for r in results:
        worst[r.name] = max(worst.get(r.name, 0.0), r.max_rel_error)
    for name, err in worst.items():
        print(f"{name:<28} max_rel_error={err:.3e} {'ok' if err < TOLERANCE else 'FAIL'}")
    ok = all(r.passed for r in results)
    print(f"{len(results)} checks, {'all' if ok else 'NOT all'} below {TOLERANCE:g}")
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_embed_train(args) -> int:
    corpus = read_text_corpus(args.corpus)
    config = SkipGramConfig(dim=args.dim, window=args.window, negatives=args.negatives, epochs=args.epochs,
                            learning_rate=args.lr, min_count=args.min_count, subsample=args.subsample,
                            seed=_seed(args.seed), dynamic_window=not args.fixed_window)
    table = train_skipgram(corpus, config, callback=lambda e, o: log.info("epoch %d objective %.6f", e, o))
    save_word2vec_text(table, args.out)
    print(f"wrote {len(table)} vectors of dimension {table.dim} to {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    save_conll(gen_synthetic(args.profile, args.sentences, _seed(args.seed)), args.out)
    return EXIT_OK


# ------------------------------------------------------------------- parser

def _add_training_flags(p):
    p.add_argument("--arch", choices=ARCHES, required=True)
    p.add_argument("--embeddings", help="word2vec text file used to initialise the embedding layer")
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--dim", type=int, default=200, help="embedding size when no --embeddings are given")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--lr", type=float, default=None, help="default 0.5 (recurrent) or 0.05 (CRF)")
    p.add_argument("--seed", type=int, default=None, help="defaults to $SEQLAB_SEED, then 0")
    p.add_argument("--seq-unit", choices=rnn_mod.SEQ_UNITS, default="sentence")
    p.add_argument("--variant", choices=("paper", "standard"), default="paper")
    p.add_argument("--use-bias", action="store_true")
    p.add_argument("--clip", type=float, default=5.0, help="global gradient-norm clip")
    p.add_argument("--l2", type=float, default=1e-3, help="CRF L2 strength")
    p.add_argument("--normalize-context", action="store_true", help="CRF: normalise bag-of-words counts")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqlab", description="Recurrent and CRF sequence taggers.")
    parser.add_argument("--version", action="version", version=f"seqlab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a tagger")
    _add_training_flags(p)
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="tag a CoNLL file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="entity-level micro P/R/F")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("crossval", help="document-level k-fold cross-validation")
    _add_training_flags(p)
    p.add_argument("--data", required=True)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=1, help="folds trained in parallel")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("gradcheck", help="finite-difference gradient checks")
    p.add_argument("--arch", choices=("all", "rnn", "lstm", "gru", "crf"), default="all")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--seeds", type=int, default=10, help="number of consecutive seeds")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("embed-train", help="train skip-gram embeddings")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--dim", type=int, default=200)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--subsample", type=float, default=0.0)
    p.add_argument("--fixed-window", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed_train)

    p = sub.add_parser("synth", help="generate a synthetic labeled corpus")
    p.add_argument("--profile", choices=("longdep", "local", "docdep"), required=True)
    p.add_argument("--sentences", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError:
        return EXIT_USAGE
    except (DataFormatError, ContractError, FileNotFoundError, UnicodeDecodeError) as exc:
        print(f"seqlab: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"seqlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
