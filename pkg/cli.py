import argparse
import logging
import sys
import warnings
from typing import Iterable, Iterator, Optional

from rich.logging import RichHandler

from spectralhmm import evaluation, storage
from spectralhmm.config import LOG_LEVEL, RunConfig, resolve_run_config
from spectralhmm.errors import (
    AlphabetMismatch, ConfigError, FormatError, FileUnreadable, SpectralError, EXIT_INVALID_INPUT,
)
from spectralhmm.hmm import exact_moments, sample_sequences, stationary_distribution, validate_hmm
from spectralhmm.inference import filter_sequence, sequence_logprob
from spectralhmm.moments import estimate_moments
from spectralhmm.spectral import learn_psr
from spectralhmm.storage import parse_symbol
from ui import cli_display as interface

logger = logging.getLogger("cli")


def _open_out(config: RunConfig):
    return open(config.out, "w") if config.out else sys.stdout


def handle_gen(config: RunConfig):
    """Samples a corpus from an HMM parameter file."""
    if not config.hmm:
        raise ConfigError("gen needs --hmm")
    params = storage.load_hmm(config.hmm)
    if config.stationary:
        params = validate_hmm(params.T, params.O, stationary_distribution(params.T))
        logger.info("Replaced pi with the stationary distribution of T")

    corpus = sample_sequences(params, config.count, config.length, config.seed)
    out = _open_out(config)
    try:
        storage.write_corpus(corpus, out)
    finally:
        if out is not sys.stdout:
            out.close()


def _load_learning_moments(config: RunConfig):
    sources = [s for s in (config.corpus, config.moments, config.exact) if s]
    if len(sources) != 1:
        raise ConfigError("learn needs exactly one of --corpus, --moments or --exact")
    if config.exact:
        return exact_moments(storage.load_hmm(config.exact))
    if config.moments:
        moments = storage.load_moments(config.moments)
        if config.n is not None and config.n != moments.n:
            raise ConfigError(f"--n {config.n} does not match moments file n={moments.n}")
        return moments
    return estimate_moments(storage.load_corpus(config.corpus, config.n), config.mode)


def handle_learn(config: RunConfig):
    """Learns a PSR model from a corpus, a moments file, or exact HMM moments."""
    moments = _load_learning_moments(config)
    if config.emit_moments:
        storage.save_moments(moments, config.emit_moments)
        logger.info(f"Wrote moments to {config.emit_moments}")

    rank = config.m if config.m is not None else "auto"
    model = learn_psr(moments, rank, config.auto_rank_threshold, config.pinv_cutoff)
    interface.show_singular_values(
        interface.make_console(), model.singular_values, model.m, config.auto_rank_threshold
    )

    if config.out:
        storage.save_model(model, config.out)
        logger.info(f"Wrote model to {config.out}")
    else:
        sys.stdout.write(storage.dumps(storage.model_to_dict(model)))


def handle_score(config: RunConfig):
    """Prints log-probability and validity for every corpus line, in order."""
    if not config.model or not config.corpus:
        raise ConfigError("score needs --model and --corpus")
    model = storage.load_model(config.model)
    corpus = storage.load_corpus(config.corpus, config.n)
    if corpus.n != model.n:
        raise AlphabetMismatch(f"Corpus alphabet n={corpus.n} differs from model n={model.n}")

    out = _open_out(config)
    try:
        for seq in corpus.sequences:
            score = sequence_logprob(model, seq)
            out.write(interface.format_score(score.log_prob, score.valid) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()


def _input_symbols(source: Iterable[str], n: int) -> Iterator[int]:
    """Parsed symbols, one per non-blank line. Bad lines go to stderr and are skipped."""
    for lineno, raw in enumerate(source, start=1):
        token = raw.strip()
        if not token:
            continue
        try:
            x = parse_symbol(token, n)
        except SpectralError as e:
            print(f"error: {type(e).__name__}: line {lineno}: {e}", file=sys.stderr)
            continue
        yield x


def handle_predict(config: RunConfig, stdin=None):
    """
    Streaming loop: one observed symbol per input line, one prediction line
    per observation, flushed as soon as the symbol is read.
    """
    if not config.model:
        raise ConfigError("predict needs --model")
    model = storage.load_model(config.model)
    if config.input:
        try:
            source = open(config.input, "r", encoding="utf-8")
        except OSError as e:
            raise FileUnreadable(f"Cannot read {config.input}: {e.strerror or e}")
    else:
        source = stdin or sys.stdin
    out = None
    try:
        # InvalidInit surfaces here, before any input line is consumed
        records = filter_sequence(model, _input_symbols(source, model.n))
        out = _open_out(config)
        for record in records:
            out.write(interface.format_step(record) + "\n")
            out.flush()
    finally:
        if source is not sys.stdin and source is not stdin:
            source.close()
        if out is not None and out is not sys.stdout:
            out.close()


def handle_sweep(config: RunConfig):
    """Runs a convergence sweep and writes the detail and summary CSVs."""
    if not config.hmm:
        raise ConfigError("sweep needs --hmm")
    if not config.out:
        raise ConfigError("sweep needs --out PREFIX (writes PREFIX_detail.csv and PREFIX_summary.csv)")
    params = storage.load_hmm(config.hmm)
    report = evaluation.convergence_sweep(
        params, config.sweep_ns, config.sweep_seeds, config.eval_len, config.mode, config.sweep_exact
    )
    detail_path = f"{config.out}_detail.csv"
    summary_path = f"{config.out}_summary.csv"
    interface.export_sweep_to_csv(report, detail_path, summary_path)
    interface.show_sweep_summary(interface.make_console(), report)
    logger.info(f"Wrote {detail_path} and {summary_path}")


def handle_info(config: RunConfig):
    """Summarizes an HMM, moments or model file."""
    console = interface.make_console()
    shown = False
    if config.hmm:
        interface.show_file_summary(console, "HMM", storage.load_hmm(config.hmm), config.hmm)
        shown = True
    if config.moments:
        interface.show_file_summary(console, "Moments", storage.load_moments(config.moments), config.moments)
        shown = True
    if config.model:
        interface.show_file_summary(console, "Model", storage.load_model(config.model), config.model)
        shown = True
    if not shown:
        raise ConfigError("info needs --hmm, --moments or --model")


HANDLERS = {
    "gen": handle_gen,
    "learn": handle_learn,
    "score": handle_score,
    "predict": handle_predict,
    "sweep": handle_sweep,
    "info": handle_info,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cli.py",
        description="""
Spectral HMM Learner
====================
Learns an observable-operator (predictive state) representation of a discrete
HMM from the moments of its first three observations, and uses it to score
and predict sequences.
        """,
        epilog="""
COMMON WORKFLOWS:
  cli.py gen --hmm hmm.json --count 10000 --length 3 --seed 7 --out corpus.txt
  cli.py learn --corpus corpus.txt --m 2 --out model.json
  cli.py score --model model.json --corpus corpus.txt
  printf '1\\n2\\n' | cli.py predict --model model.json
  cli.py sweep --hmm hmm.json --sweep-ns 100,1000,10000 --sweep-seeds 0-19 --out report

EXIT CODES:
  0 success, 2 invalid input or config, 3 insufficient data, 4 numerical degeneracy
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging on stderr")
    parser.add_argument("--config", help="YAML file with default values for numeric flags")
    subparsers = parser.add_subparsers(dest="command", required=True, title="Commands")

    gen = subparsers.add_parser("gen", help="Sample a corpus from an HMM parameter file")
    gen.add_argument("--hmm", help="HMM parameter file (JSON)")
    gen.add_argument("--count", type=int, help="Number of sequences (default: 100)")
    gen.add_argument("--length", type=int, help="Symbols per sequence (default: 3)")
    gen.add_argument("--seed", type=int, help="RNG seed (default: 0)")
    gen.add_argument("--stationary", action="store_true", default=None,
                     help="Start from the stationary distribution of T instead of pi")
    gen.add_argument("--out", help="Corpus file (default: stdout)")

    learn = subparsers.add_parser(
        "learn",
        help="Learn a PSR model",
        description="""
Learn a PSR model from a corpus, a persisted moments file, or the exact moments
of a known HMM (--exact). Prints the singular-value profile of P21 on stderr.

Examples:
  cli.py learn --corpus corpus.txt --m 2 --emit-moments moments.json --out model.json
  cli.py learn --moments moments.json --m 3 --out model3.json
  cli.py learn --exact hmm.json --m 2 --out exact.json
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    learn.add_argument("--corpus", help="Corpus file")
    learn.add_argument("--moments", help="Moments file written by --emit-moments")
    learn.add_argument("--exact", help="HMM file; use its exact moments")
    learn.add_argument("--n", type=int, help="Alphabet size when the corpus has no header")
    learn.add_argument("--m", type=int, help="Model rank (omit for automatic selection)")
    learn.add_argument("--auto-rank-threshold", type=float, help="Relative cutoff for automatic rank")
    learn.add_argument("--pinv-cutoff", type=float, help="Relative pseudoinverse cutoff")
    learn.add_argument("--mode", choices=["heads", "sliding"], help="Estimation mode (default: heads)")
    learn.add_argument("--emit-moments", help="Also save the moments used")
    learn.add_argument("--out", help="Model file (default: stdout)")

    score = subparsers.add_parser("score", help="Log-probability of every corpus line")
    score.add_argument("--model", help="Model file")
    score.add_argument("--corpus", help="Corpus file")
    score.add_argument("--n", type=int, help="Alphabet size when the corpus has no header")
    score.add_argument("--out", help="Output file (default: stdout)")

    predict = subparsers.add_parser(
        "predict",
        help="Streaming next-symbol prediction",
        description="""
Reads one observed symbol per line (stdin or --input). After each symbol prints:
  p(1) ... p(n) <TAB> alpha <TAB> cumulative log-prob <TAB> valid|invalid
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    predict.add_argument("--model", help="Model file")
    predict.add_argument("--input", help="Read symbols from this file instead of stdin")
    predict.add_argument("--out", help="Output file (default: stdout)")

    sweep = subparsers.add_parser("sweep", help="Sample-size convergence sweep")
    sweep.add_argument("--hmm", help="HMM parameter file")
    sweep.add_argument("--sweep-ns", help="Sample sizes, e.g. 100,1000,10000")
    sweep.add_argument("--sweep-seeds", help="Seeds, e.g. 0-19 or 1,2,3")
    sweep.add_argument("--eval-len", type=int, help="Length of the enumerated sequences (default: 3)")
    sweep.add_argument("--mode", choices=["heads", "sliding"], help="Estimation mode (default: heads)")
    sweep.add_argument("--exact", dest="sweep_exact", action="store_true", default=None,
                       help="Use exact moments in every cell")
    sweep.add_argument("--out", help="Output prefix for the CSV files")

    info = subparsers.add_parser("info", help="Summarize an HMM, moments or model file")
    info.add_argument("--hmm")
    info.add_argument("--moments")
    info.add_argument("--model")

    return parser


def configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, LOG_LEVEL, logging.WARNING)
    logging.basicConfig(
        level=level,
        format="%(message)s",
        handlers=[RichHandler(console=interface.make_console(), show_path=False)],
        force=True,
    )


def main(argv: Optional[list[str]] = None, stdin=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)

    flags = {k: v for k, v in vars(args).items() if k not in ("command", "verbose", "config")}
    try:
        config = resolve_run_config(args.command, flags, args.config)
        with warnings.catch_warnings():
            # Warnings already reach the log through the module loggers
            warnings.simplefilter("ignore")
            if args.command == "predict":
                handle_predict(config, stdin)
            else:
                HANDLERS[args.command](config)
    except SpectralError as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return e.exit_code
    except UnicodeDecodeError as e:
        # streamed input (stdin or --input) that is not UTF-8
        print(f"error: {FormatError.__name__}: input is not UTF-8 text: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except OSError as e:
        print(f"error: {FileUnreadable.__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
