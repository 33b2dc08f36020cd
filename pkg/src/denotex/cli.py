"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant violation.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .data import DatasetFormatError, SyntheticSpec, convert_jsonl, generate_synthetic, load_dataset
from .evaluation import evaluate, read_predictions, write_predictions
from .kb import DEFAULT_MAX_DISTANCE, KBFormatError, load_kb
from .linker import LinkerConfig
from .pipeline import (
    identify_neural,
    identify_rules,
    link_dataset,
    load_linked,
    prediction_records,
    save_linked,
    training_triples,
)
from .rules import NgramPriorTable, train_ngram_priors

log = logging.getLogger("denotex")

METHODS = {"relation-max": "relation_max", "popularity": "popularity"}


class UsageError(Exception):
    pass


class InvariantError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_kb(p):
    p.add_argument("--kb-triples", type=Path)
    p.add_argument("--kb-lexicon", type=Path)


def _add_linker(p):
    p.add_argument("--method", choices=sorted(METHODS), default="relation-max")
    p.add_argument("--beam", type=int, default=5)
    p.add_argument("--edit-threshold", type=float, default=DEFAULT_MAX_DISTANCE)
    p.add_argument("--max-ngram-order", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="denotex", description="Denotation extraction from answer hints.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a synthetic KB and dialogue splits")
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--kb-size", type=int, default=60)
    g.add_argument("--dialogues", type=int, default=351)
    g.add_argument("--misspelling-rate", type=float, default=0.0)
    g.add_argument("--extra-entity-rate", type=float, default=0.0)
    g.add_argument("--enumeration-rate", type=float, default=0.0)
    g.add_argument("--ambiguity-rate", type=float, default=0.5)
    g.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("convert", help="convert JSON-lines dialogue records to the dataset format")
    c.add_argument("--input", type=Path, required=True)
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--id-field", default="id")
    c.add_argument("--question-field", default="question")
    c.add_argument("--answer-field", default="answer_hint")
    c.add_argument("--gold-field", default="denotation")

    ln = sub.add_parser("link", help="link a dataset against the KB")
    _add_kb(ln)
    _add_linker(ln)
    ln.add_argument("--dataset", type=Path, required=True)
    ln.add_argument("--out", type=Path, required=True)

    t = sub.add_parser("train", help="train n-gram priors or the neural identifier")
    _add_kb(t)
    _add_linker(t)
    t.add_argument("--dataset", type=Path, required=True, help="dataset TSV or linked .jsonl")
    t.add_argument("--val-dataset", type=Path)
    t.add_argument("--identifier", choices=["priors", "neural"], required=True)
    t.add_argument("--ngram-order", type=int, default=3)
    t.add_argument("--epochs", type=int, default=50)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--pretrained-vectors", type=Path)
    t.add_argument("--no-positional", action="store_true")
    t.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("evaluate", help="identify denotations and report the three accuracies")
    _add_kb(e)
    _add_linker(e)
    e.add_argument("--dataset", type=Path, help="dataset TSV or linked .jsonl")
    e.add_argument("--identifier", choices=["basic", "enum", "priors", "neural"], default="priors")
    e.add_argument("--priors", type=Path)
    e.add_argument("--model", type=Path)
    e.add_argument("--pretrained-vectors", type=Path)
    e.add_argument("--predictions", type=Path, help="score an existing predictions file instead")
    e.add_argument("--label", default="")
    e.add_argument("--out", type=Path, required=True, help="output path prefix")
    return parser


def _require(path: Path | None, flag: str) -> Path:
    if path is None:
        raise UsageError(f"{flag} is required here")
    if not path.exists():
        raise FileNotFoundError(f"{flag}: no such file {path}")
    return path


def _kb(args):
    return load_kb(_require(args.kb_triples, "--kb-triples"), _require(args.kb_lexicon, "--kb-lexicon"))


def _linker_cfg(args) -> LinkerConfig:
    try:
        return LinkerConfig(args.max_ngram_order, args.edit_threshold, args.beam)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _linked(args, path: Path, kb=None):
    _require(path, "--dataset")
    if path.suffix == ".jsonl":
        return load_linked(path)
    kb = kb or _kb(args)
    return link_dataset(kb, load_dataset(path), _linker_cfg(args), METHODS[args.method])


def cmd_generate(args) -> int:
    spec = SyntheticSpec(
        args.kb_size, args.dialogues, args.misspelling_rate, args.extra_entity_rate,
        args.enumeration_rate, args.ambiguity_rate, args.seed,
    )
    for name, path in generate_synthetic(spec, args.out).items():
        print(f"{name}: {path}")
    return 0


def cmd_convert(args) -> int:
    n = convert_jsonl(_require(args.input, "--input"), args.out, args.id_field,
                      args.question_field, args.answer_field, args.gold_field)
    print(f"wrote {n} pairs to {args.out}")
    return 0


def cmd_link(args) -> int:
    kb = _kb(args)
    linked = _linked(args, args.dataset, kb)
    save_linked(linked, args.out)
    if linked:
        report = evaluate(prediction_records(linked, [None] * len(linked)), label=args.method)
        for n in sorted(report.linking_accuracy):
            acc = report.linking_accuracy[n]
            print(f"linking_accuracy@{n}: {acc:.3f} ± {report.ci_halfwidth[f'linking@{n}']:.3f}")
        accs = [report.linking_accuracy[n] for n in sorted(report.linking_accuracy)]
        if any(b < a for a, b in zip(accs, accs[1:])):
            raise InvariantError("linking accuracy decreased with n")
    return 0


def cmd_train(args) -> int:
    if args.epochs < 1:
        raise UsageError("--epochs must be >= 1")
    pairs = _linked(args, args.dataset)
    usable = [p for p in pairs if p.gold in p.top_answer.entity_ids]
    skipped = len(pairs) - len(usable)
    print(f"usable training pairs: {len(usable)} (skipped {skipped} with unlinked gold)")
    if not usable:
        raise DatasetFormatError("no usable training pairs")

    if args.identifier == "priors":
        if args.ngram_order < 2:
            raise UsageError("--ngram-order must be >= 2")
        table = train_ngram_priors(training_triples(usable), args.ngram_order)
        table.save(args.out)
        print(f"wrote {len(table.counts)} patterns to {args.out}")
        return 0

    from .neural import TrainingConfig, Vocabulary, encode_pair, load_pretrained, save_checkpoint, train

    pretrained = load_pretrained(args.pretrained_vectors) if args.pretrained_vectors else None
    vocab = Vocabulary.build([(p.question, p.top_answer) for p in usable])
    train_seqs = [encode_pair(vocab, p.question, p.top_answer, p.gold) for p in usable]
    val_seqs = train_seqs
    if args.val_dataset:
        val_pairs = [p for p in _linked(args, args.val_dataset) if p.gold in p.top_answer.entity_ids]
        val_seqs = [encode_pair(vocab, p.question, p.top_answer, p.gold) for p in val_pairs]
    cfg = TrainingConfig(
        epochs=args.epochs,
        seed=args.seed,
        use_positional_features=not args.no_positional,
        use_pretrained=pretrained is not None,
    )
    result = train(train_seqs, val_seqs, vocab, cfg, pretrained)
    for rec in result.history:
        print(
            f"epoch {rec.epoch:3d} loss {rec.train_loss:.6f} "
            f"train_acc {rec.train_accuracy:.4f} val_acc {rec.val_accuracy:.4f}"
        )
    print(f"best epoch: {result.best_epoch}")
    save_checkpoint(result.model, args.out)
    return 0


def cmd_evaluate(args) -> int:
    if args.predictions:
        records = read_predictions(_require(args.predictions, "--predictions"))
    else:
        if args.dataset is None:
            raise UsageError("either --dataset or --predictions is required")
        if args.identifier == "neural":
            from .neural import load_checkpoint

            model = load_checkpoint(_require(args.model, "--model"))
            if model.flags.use_pretrained != (args.pretrained_vectors is not None):
                raise UsageError(
                    "model was trained %s pretrained vectors; --pretrained-vectors %s"
                    % ("with" if model.flags.use_pretrained else "without",
                       "is missing" if model.flags.use_pretrained else "must not be given")
                )
            pairs = _linked(args, args.dataset)
            chosen = identify_neural(model, pairs)
        else:
            if args.model is not None:
                raise UsageError("--model only applies to --identifier neural")
            priors = None
            if args.identifier == "priors":
                priors = NgramPriorTable.load(_require(args.priors, "--priors"))
            kb = _kb(args)
            pairs = _linked(args, args.dataset, kb)
            chosen = identify_rules(kb, pairs, args.identifier, priors)
        records = prediction_records(pairs, chosen)
        write_predictions(records, f"{args.out}.predictions.jsonl")

    report = evaluate(records, label=args.label or args.identifier)
    if not report.decomposition_holds:
        raise InvariantError("extraction != identification x linking@1")
    Path(f"{args.out}.report.txt").write_text(report.to_text(), encoding="utf-8")
    Path(f"{args.out}.table.tsv").write_text(report.to_tsv(), encoding="utf-8")
    sys.stdout.write(report.to_text())
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "convert": cmd_convert,
    "link": cmd_link,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"denotex: error: {exc}", file=sys.stderr)
        return 1
    except InvariantError as exc:
        print(f"denotex: invariant violated: {exc}", file=sys.stderr)
        return 3
    except (OSError, KBFormatError, DatasetFormatError, ValueError) as exc:
        print(f"denotex: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
