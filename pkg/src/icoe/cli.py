"""Command line surface: train, extract, eval, stats, selftrain.

Configuration comes from an optional key=value file plus flags; flags win.
Exit codes: 0 success, 2 missing files or invalid configuration, 1 malformed
data. Warnings go to stderr and never affect the exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields

from . import assembly, corpus, evaluation


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    corpus: str | None = None
    annotations: str | None = None
    models: str | None = None
    out: str | None = None
    threshold: float = 0.05
    mode: str = "strict"
    k: int = 5
    seed: int = 42
    epochs: int = 10
    alpha: float = 1.0
    match: str = "exact"

    def validate(self) -> None:
        if not 0 < self.threshold < 1:
            raise ConfigError(f"threshold must be in (0, 1), got {self.threshold}")
        if self.mode not in ("strict", "compat"):
            raise ConfigError(f"mode must be strict or compat, got {self.mode!r}")
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.match not in ("exact", "overlap"):
            raise ConfigError(f"match must be exact or overlap, got {self.match!r}")


_STR_KEYS = {"corpus", "annotations", "models", "out", "mode", "match"}
_INT_KEYS = {"k", "seed", "epochs"}
_FLOAT_KEYS = {"threshold", "alpha"}


def load_config_file(path: str) -> dict:
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected key = value")
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            try:
                if key in _INT_KEYS:
                    values[key] = int(raw)
                elif key in _FLOAT_KEYS:
                    values[key] = float(raw)
                elif key in _STR_KEYS:
                    values[key] = raw
                else:
                    raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            except ValueError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"{path}: line {lineno}: bad value for {key!r}: {raw!r}") from exc
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig()
    if getattr(args, "config", None):
        file_values = load_config_file(args.config)
        for key, value in file_values.items():
            setattr(config, key, value)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(config, f.name, flag)
    config.validate()
    return config


def _load_gold(config: RunConfig):
    if not config.corpus:
        raise ConfigError("a corpus path is required (--corpus or config file)")
    if not config.annotations:
        raise ConfigError("an annotations path is required (--annotations or config file)")
    records = corpus.load_corpus(config.corpus)
    docs = corpus.load_annotations(config.annotations, records)
    return records, docs


def _training_summary(docs) -> str:
    by_kind = {kind: 0 for kind in corpus.ENTITY_KINDS}
    for doc in docs:
        for span in doc.spans:
            by_kind[span.kind] += 1
    design_count = sum(1 for d in docs if d.design_sentence_index is not None)
    rows = [
        ("abstracts", len(docs)),
        ("design sentences", design_count),
        ("I/C entities", by_kind["I"] + by_kind["C"]),
        ("outcome entities", by_kind["O"]),
        ("effect description words", by_kind["EDesc"]),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {count}" for name, count in rows)


def cmd_train(args: argparse.Namespace) -> int:
    config = build_config(args)
    _, docs = _load_gold(config)
    if not config.models:
        raise ConfigError("a models directory is required (--models)")
    models = assembly.train_models(docs, epochs=config.epochs, seed=config.seed, alpha=config.alpha)
    assembly.save_models(models, config.models)
    print(_training_summary(docs))
    print(f"models written to {config.models}")
    return 0


def cmd_extract(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.corpus:
        raise ConfigError("a corpus path is required (--corpus or config file)")
    if not config.models:
        raise ConfigError("a models directory is required (--models)")
    models = assembly.load_models(config.models)
    records = corpus.load_corpus(config.corpus)
    out = open(config.out, "w", encoding="utf-8") if config.out else sys.stdout
    try:
        for record in records:
            result = assembly.assemble(
                record, models, threshold=config.threshold, compat=(config.mode == "compat")
            )
            out.write(json.dumps(assembly.record_to_dict(result), ensure_ascii=False))
            out.write("\n")
            for warning in result.warnings:
                print(f"{record.id}\t{warning}", file=sys.stderr)
    finally:
        if config.out:
            out.close()
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = build_config(args)
    _, docs = _load_gold(config)
    if len(docs) < config.k:
        print(f"error: corpus of {len(docs)} documents is smaller than k = {config.k}", file=sys.stderr)
        return 2
    report = evaluation.cross_validate(
        docs,
        k=config.k,
        seed=config.seed,
        epochs=config.epochs,
        alpha=config.alpha,
        mode=config.match,
    )
    text = evaluation.render_cv_report(report)
    payload = json.dumps(report, ensure_ascii=False, indent=1) + "\n"
    if config.out:
        with open(config.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        print(text)
    else:
        sys.stdout.write(payload)
        print(text, file=sys.stderr)
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    config = build_config(args)
    records = []
    with open(args.records, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(assembly.record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                print(f"error: {args.records}: malformed record line {lineno}: {exc}", file=sys.stderr)
                return 1
    for mode in ("strict", "compat"):
        stats = evaluation.polarity_table(records, mode=mode, threshold=config.threshold)
        print(evaluation.render_operator_table(stats))
        print()
    return 0


def cmd_selftrain(args: argparse.Namespace) -> int:
    config = build_config(args)
    if not config.models:
        raise ConfigError("a models directory is required (--models)")
    models = assembly.load_models(config.models)
    unlabeled = corpus.load_corpus(args.unlabeled)
    if not args.review:
        proposals = evaluation.selftrain_propose(models, unlabeled)
        if not config.out:
            raise ConfigError("an output path is required for proposals (--out)")
        evaluation.write_proposals(proposals, config.out)
        print(f"{len(proposals)} proposal documents written to {config.out}")
        return 0
    proposals = evaluation.read_proposals(args.review)
    accepted = evaluation.accepted_documents(proposals, unlabeled)
    _, gold_docs = _load_gold(config)
    merged = evaluation.merge_training_sets(gold_docs, accepted)
    docs = [doc for doc, _ in merged]
    second_round = assembly.train_models(
        docs, epochs=config.epochs, seed=config.seed, alpha=config.alpha
    )
    if not config.out:
        raise ConfigError("an output models directory is required (--out)")
    assembly.save_models(second_round, config.out)
    n_gold = sum(1 for _, source in merged if source == "gold")
    n_proposed = len(merged) - n_gold
    print(f"retrained on {n_gold} gold + {n_proposed} reviewed documents")
    print(f"second-round models written to {config.out}")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--corpus", help="corpus JSONL path")
    parser.add_argument("--annotations", help="annotations JSONL path")
    parser.add_argument("--models", help="model directory")
    parser.add_argument("--out", help="output path")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--mode", choices=["strict", "compat"])
    parser.add_argument("--k", type=int)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--alpha", type=float)
    parser.add_argument("--match", choices=["exact", "overlap"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icoe",
        description="Extract structured ICOE records from RCT abstracts and score result polarity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train models on an annotated corpus")
    p_extract = sub.add_parser("extract", help="extract ICOE records from a corpus")
    p_eval = sub.add_parser("eval", help="run k-fold cross-validation")
    p_stats = sub.add_parser("stats", help="operator-wise positive/negative table")
    p_selftrain = sub.add_parser("selftrain", help="propose annotations or retrain from a review")

    for p in (p_train, p_extract, p_eval, p_stats, p_selftrain):
        _add_common_flags(p)
    p_stats.add_argument("--records", required=True, help="extracted records JSONL")
    p_selftrain.add_argument("--unlabeled", required=True, help="unlabeled corpus JSONL")
    p_selftrain.add_argument("--review", help="reviewed proposals JSONL")

    p_train.set_defaults(func=cmd_train)
    p_extract.set_defaults(func=cmd_extract)
    p_eval.set_defaults(func=cmd_eval)
    p_stats.set_defaults(func=cmd_stats)
    p_selftrain.set_defaults(func=cmd_selftrain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        name = exc.filename or exc
        print(f"error: not found: {name}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except corpus.CorpusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())
