"""
cli.py
Command-line interface: stats, snippetize, train, predict, evaluate

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 runtime failure.
"""

import argparse
import logging
import os
import shutil
import sys

from ._version import __version__
from .config import build_config, check_known_keys, read_config_file
from .conllu import GOLD, SURFACE_ONLY, corpus_stats, read_corpus, write_corpus
from .decode import DecodeConfig, check_voting, predict_corpus, write_mismatches
from .errors import (CheckpointError, ConfigError, CorpusFormatError, MisalignedCorporaError, VocabMismatchError)
from .evaluation import evaluate, format_report, report_lines
from .model import ModelConfig, init_model, load_checkpoint
from .snippets import CONTROL, Mode, SnippetConfig, TargetContext, build_examples, build_vocab, format_example
from .training import TrainConfig, train, write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CONFIG_CLASSES = (SnippetConfig, ModelConfig, TrainConfig, DecodeConfig)
BEST_MODEL = "best.lmd"


class UsageError(ConfigError):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Raises `UsageError` instead of exiting so `main` owns the exit code."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def _snippet_flags():
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("snippets")
    group.add_argument("--mode", choices=[m.value for m in Mode], default=None)
    group.add_argument("--window", type=_non_negative_int, default=None, help="context words on each side")
    group.add_argument("--tc", dest="tc_mode", choices=[t.value for t in TargetContext], default=None,
                       help="target-side rendering of context words")
    return parser


def _common_flags():
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", default=None, help="key=value configuration file; flags override it")
    parser.add_argument("--seed", dest="rng_seed", type=int, default=None)
    return parser


def _decode_flags():
    parser = argparse.ArgumentParser(add_help=False)
    group = parser.add_argument_group("decoding")
    group.add_argument("--beam", dest="beam_size", type=_positive_int, default=None)
    group.add_argument("--max-length", type=_positive_int, default=None)
    group.add_argument("--length-norm", dest="length_normalization", action="store_true", default=None)
    group.add_argument("--vote", action="store_true", help="majority vote over overlapping snippets")
    return parser


def build_parser():
    parser = ArgumentParser(prog="lemmed", description="Contextual lemmatization and morphological tagging")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-q", "--quiet", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=ArgumentParser)
    sub.required = True

    stats = sub.add_parser("stats", help="sentence/token counts, grammeme-form ratio, OOV rate")
    stats.add_argument("corpus")
    stats.add_argument("--reference", default=None, help="training corpus for the OOV rate")

    snippetize = sub.add_parser("snippetize", parents=[_common_flags(), _snippet_flags()],
                                help="write source/target example lines")
    snippetize.add_argument("corpus")
    snippetize.add_argument("-o", "--output", default=None)
    snippetize.add_argument("--surface-only", action="store_true", help="read FORM only, emit sources")

    trainer = sub.add_parser("train", parents=[_common_flags(), _snippet_flags()], help="train a model")
    trainer.add_argument("--train", dest="train_path", required=True)
    trainer.add_argument("--dev", dest="dev_path", required=True)
    trainer.add_argument("-o", "--output", required=True, help="directory for checkpoints, report and log")
    trainer.add_argument("--min-freq", type=_positive_int, default=1)
    trainer.add_argument("--workers", type=_positive_int, default=1)
    trainer.add_argument("--plot", action="store_true", help="write training.html (needs plotly)")
    group = trainer.add_argument_group("model")
    group.add_argument("--embedding-size", type=_positive_int, default=None)
    group.add_argument("--hidden-units", type=_positive_int, default=None)
    group.add_argument("--layers", type=_positive_int, default=None)
    group.add_argument("--dropout", dest="dropout_p", type=float, default=None)
    group = trainer.add_argument_group("schedule")
    group.add_argument("--steps", dest="total_steps", type=_positive_int, default=None)
    group.add_argument("--checkpoint-every", type=_positive_int, default=None)
    group.add_argument("--lr", dest="lr_initial", type=float, default=None)
    group.add_argument("--lr-halve-start", dest="lr_halve_start_step", type=_non_negative_int, default=None)
    group.add_argument("--lr-halve-every", type=_positive_int, default=None)
    group.add_argument("--batch-size", type=_positive_int, default=None)
    group.add_argument("--clip-norm", type=float, default=None)
    group.add_argument("--selection-metric", choices=["analysis_accuracy", "lemma_accuracy", "tag_accuracy"],
                       default=None)
    group.add_argument("--keep-all", action="store_true", default=None, help="keep every checkpoint file")

    predictor = sub.add_parser("predict", parents=[_common_flags(), _snippet_flags(), _decode_flags()],
                               help="analyze a corpus with a trained model")
    predictor.add_argument("--model", required=True)
    predictor.add_argument("--input", required=True, help="corpus; only FORM is read")
    predictor.add_argument("-o", "--output", required=True)
    predictor.add_argument("--mismatches", default=None, help="write flagged tokens to this file")
    predictor.add_argument("--workers", type=_positive_int, default=1)

    evaluator = sub.add_parser("evaluate", help="score predictions against gold analyses")
    evaluator.add_argument("--pred", required=True)
    evaluator.add_argument("--gold", required=True)
    evaluator.add_argument("--train-reference", default=None, help="training corpus for the OOV split")
    evaluator.add_argument("--machine", action="store_true", help="also print key=value lines")
    return parser


def configure_logging(verbose=0, quiet=False):
    level = logging.ERROR if quiet else [logging.WARNING, logging.INFO, logging.DEBUG][min(verbose, 2)]
    logging.basicConfig(level=level, format=LOG_FORMAT)


def _file_values(args):
    if getattr(args, "config", None) is None:
        return {}
    values = read_config_file(args.config)
    check_known_keys(values, CONFIG_CLASSES)
    return values


def _flags(args):
    return {key: value for key, value in vars(args).items() if value is not None}


def _snippet_config(args, file_values):
    return build_config(SnippetConfig, file_values, _flags(args))


def _write_text(path, text):
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(text)


def run_stats(args):
    corpus = read_corpus(args.corpus, GOLD)
    reference = read_corpus(args.reference, GOLD) if args.reference else None
    stats = corpus_stats(corpus, reference)
    lines = [f"sentences {stats.sentence_count}", f"tokens {stats.token_count}",
             f"grammeme-form {stats.grammeme_form_ratio:.2f}"]
    if stats.oov_rate is not None:
        lines += [f"oov_rate {stats.oov_rate:.3f}", f"oov_tokens {stats.oov_token_count}"]
    print("\n".join(lines))
    return EXIT_OK


def run_snippetize(args):
    cfg = _snippet_config(args, _file_values(args))
    corpus = read_corpus(args.corpus, SURFACE_ONLY if args.surface_only else GOLD)
    lines = [format_example(example) + "\n" for example in build_examples(corpus, cfg)]
    _write_text(args.output, "".join(lines))
    return EXIT_OK


def _link_best(output, path):
    link = os.path.join(output, BEST_MODEL)
    if os.path.lexists(link):
        os.remove(link)
    try:
        os.symlink(os.path.basename(path), link)
    except (OSError, NotImplementedError):
        shutil.copyfile(path, link)


def run_train(args):
    file_values = _file_values(args)
    flags = _flags(args)
    snippet_cfg = build_config(SnippetConfig, file_values, flags)
    train_cfg = build_config(TrainConfig, file_values, flags)
    # vocabulary sizes are unknown until the corpus is read, check the rest now
    placeholder = len(tuple(CONTROL))
    build_config(ModelConfig, file_values, dict(flags, source_vocab_size=placeholder, target_vocab_size=placeholder))

    train_corpus = read_corpus(args.train_path, GOLD)
    dev_corpus = read_corpus(args.dev_path, GOLD)
    examples = build_examples(train_corpus, snippet_cfg)
    vocab = build_vocab(examples, args.min_freq)
    model_cfg = build_config(ModelConfig, file_values,
                             dict(flags, source_vocab_size=vocab.source_size, target_vocab_size=vocab.target_size))

    os.makedirs(args.output, exist_ok=True)
    handler = logging.FileHandler(os.path.join(args.output, "train.log"), encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    handler.setLevel(logging.INFO)
    package_logger = logging.getLogger("lemmed")
    package_logger.addHandler(handler)
    previous_level = package_logger.level
    if package_logger.getEffectiveLevel() > logging.INFO:
        package_logger.setLevel(logging.INFO)
    try:
        _, report = train(init_model(model_cfg), examples, dev_corpus, vocab, snippet_cfg, train_cfg,
                          checkpoint_dir=args.output, workers=args.workers)
    finally:
        package_logger.removeHandler(handler)
        package_logger.setLevel(previous_level)
        handler.close()

    write_report(report, os.path.join(args.output, "report.tsv"))
    _link_best(args.output, report.selected.path)
    if args.plot:
        from .plots import plot_training
        plot_training(report).write_html(os.path.join(args.output, "training.html"))
    print(f"selected step {report.selected_step} ({report.selection_metric} "
          f"{report.selected.dev_metrics[report.selection_metric]:.4f})")
    return EXIT_OK


def _require_voting(snippet_cfg):
    try:
        check_voting(snippet_cfg)
    except ValueError as err:
        raise UsageError(f"--vote: {err}") from err


def run_predict(args):
    file_values = _file_values(args)
    flags = _flags(args)
    decode_cfg = build_config(DecodeConfig, file_values, flags)
    requested = {key: value for key, value in dict(file_values, **flags).items() if key in ("mode", "window",
                                                                                               "tc_mode")}
    if args.vote and requested:
        # reject impossible flag combinations before loading anything
        _require_voting(build_config(SnippetConfig, {}, requested))

    checkpoint = load_checkpoint(args.model)
    if "snippet_config" not in checkpoint.metadata:
        raise CheckpointError(f"{args.model}: checkpoint does not record its snippet configuration")
    snippet_cfg = SnippetConfig.from_dict(checkpoint.metadata["snippet_config"])
    if requested:
        wanted = build_config(SnippetConfig, snippet_cfg.to_dict(), requested)
        if not wanted.same_as(snippet_cfg):
            raise ConfigError(f"requested snippet configuration {wanted.to_dict()} differs from the one the model "
                              f"was trained with, {snippet_cfg.to_dict()}")
    if args.vote:
        _require_voting(snippet_cfg)

    corpus = read_corpus(args.input, SURFACE_ONLY)
    prediction = predict_corpus(checkpoint.model, corpus, checkpoint.vocab, snippet_cfg, decode_cfg,
                                voting=args.vote, workers=args.workers)
    _write_text(args.output, write_corpus(prediction.corpus))
    if args.mismatches:
        _write_text(args.mismatches, write_mismatches(prediction))
    return EXIT_OK


def run_evaluate(args):
    pred = read_corpus(args.pred, GOLD)
    gold = read_corpus(args.gold, GOLD)
    reference = read_corpus(args.train_reference, GOLD) if args.train_reference else None
    report = evaluate(pred, gold, reference)
    sys.stdout.write(format_report(report))
    if args.machine:
        sys.stdout.write(report_lines(report))
    return EXIT_OK


COMMANDS = {
    "stats": run_stats,
    "snippetize": run_snippetize,
    "train": run_train,
    "predict": run_predict,
    "evaluate": run_evaluate,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as err:
        # --help and --version
        return err.code or EXIT_OK
    configure_logging(args.verbose, args.quiet)

    try:
        return COMMANDS[args.command](args)
    except ConfigError as err:
        logger.error("%s", err)
        return EXIT_USAGE
    except (CorpusFormatError, MisalignedCorporaError, VocabMismatchError, CheckpointError, OSError) as err:
        logger.error("%s", err)
        return EXIT_DATA
    except Exception:
        logger.exception("%s failed", args.command)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
