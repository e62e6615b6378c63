"""Subcommand CLI for the speech-to-entities toolkit.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or malformed
input), 3 internal error. Every subcommand validates its inputs before
writing, and all file outputs go through atomic replace, so a crash never
leaves partial artifacts behind.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections import Counter

from .asr_sim import CorruptionTrace, ErrorProfile, corrupt
from .capu import CapuLabel, CapuModel, CapuSample, train_capu
from .chunks import ChunkConfig, format_chunks, stream_format
from .corpus import ParseError, conll_to_string, convert_nested_xml, read_conll, segment_corpus
from .crf import TrainConfig
from .evaluate import evaluate_pipeline
from .ner import NerModel, split_sentences, train_ner
from .pipeline import CONDITIONS, load_config, run_pipeline, summary_table, write_atomic
from .synthetic import generate_corpus, vocabulary
from .tokens import (
    Document,
    Punct,
    Sentence,
    normalization_summary,
    normalize_text,
    render_text,
    strip_formatting,
)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def _read_file(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e.strerror}") from None


def _read_docs(path: str) -> list[Document]:
    try:
        return read_conll(_read_file(path))
    except ParseError as e:
        raise DataError(f"{path}: {e}") from None


def _train_config(args: argparse.Namespace) -> TrainConfig:
    return TrainConfig(
        l2=args.l2,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def cmd_synth(args: argparse.Namespace) -> int:
    train, test = generate_corpus(args.train_docs, args.test_docs, args.seed)
    write_atomic(args.out_train, conll_to_string(train))
    write_atomic(args.out_test, conll_to_string(test))
    print(f"wrote {len(train)} train docs to {args.out_train}, "
          f"{len(test)} test docs to {args.out_test}")
    return 0


def cmd_convert(args: argparse.Namespace) -> int:
    stripped: Counter[str] = Counter()
    try:
        docs = convert_nested_xml(_read_file(args.input), stripped)
    except ParseError as e:
        raise DataError(f"{args.input}: {e}") from None
    if not docs:
        raise DataError(f"{args.input}: no sentences found")
    write_atomic(args.output, conll_to_string(docs))
    if args.summary:
        write_atomic(args.summary, normalization_summary(stripped) + "\n")
    print(f"converted {len(docs)} document(s) to {args.output}")
    return 0


def cmd_segment(args: argparse.Namespace) -> int:
    tokens = normalize_text(_read_file(args.input))
    lines = []
    for sample in segment_corpus(tokens, args.seed):
        lines.append(" ".join(sample.words) + "\t" + " ".join(l.name for l in sample.labels))
    if not lines:
        raise DataError(f"{args.input}: fewer than 4 tokens, nothing to segment")
    write_atomic(args.output, "\n".join(lines) + "\n")
    print(f"wrote {len(lines)} samples to {args.output}")
    return 0


def _read_samples(path: str) -> list[CapuSample]:
    samples = []
    for line_no, line in enumerate(_read_file(path).splitlines(), start=1):
        if not line.strip():
            continue
        try:
            words_col, tab, labels_col = line.partition("\t")
            if not tab:
                raise ValueError("expected two tab-separated columns")
            words = words_col.split()
            labels = [CapuLabel.parse(name) for name in labels_col.split()]
            samples.append(CapuSample(tuple(words), tuple(labels)))
        except ValueError as e:
            raise DataError(f"{path}: line {line_no}: {e}") from None
    if not samples:
        raise DataError(f"{path}: no samples")
    return samples


def cmd_train_capu(args: argparse.Namespace) -> int:
    samples = _read_samples(args.samples)
    model, trace = train_capu(samples, _train_config(args))
    model.save(args.out)
    write_atomic(args.out + ".trace.json", json.dumps({"objective": trace}) + "\n")
    print(f"trained on {len(samples)} samples; final objective {trace[-1]:.6f}")
    return 0


def cmd_train_ner(args: argparse.Namespace) -> int:
    docs = _read_docs(args.train)
    try:
        model, trace = train_ner(
            docs, _train_config(args), formatting_features=not args.no_format_features
        )
    except ValueError as e:
        raise DataError(f"{args.train}: {e}") from None
    model.save(args.out)
    write_atomic(args.out + ".trace.json", json.dumps({"objective": trace}) + "\n")
    n_sents = sum(len(d.sentences) for d in docs)
    print(f"trained on {n_sents} sentences; final objective {trace[-1]:.6f}")
    return 0


def _load_capu(path: str) -> CapuModel:
    try:
        return CapuModel.load(path)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load recovery model {path}: {e}") from None


def _load_ner(path: str) -> NerModel:
    try:
        return NerModel.load(path)
    except (OSError, ValueError, KeyError) as e:
        raise DataError(f"cannot load entity model {path}: {e}") from None


def cmd_format(args: argparse.Namespace) -> int:
    model = _load_capu(args.model)
    config = ChunkConfig(args.chunk_len, args.overlap)
    if args.input == "-":
        # Streaming mode: endless token stream in, flush at each period.
        def words():
            for line in sys.stdin:
                yield from (w.lower() for w in line.split())

        pending = False
        for tok in stream_format(model, words(), config):
            if tok.punct_after is Punct.PERIOD:
                sys.stdout.write(tok.render() + "\n")
                sys.stdout.flush()
                pending = False
            else:
                sys.stdout.write(tok.render() + " ")
                pending = True
        if pending:
            sys.stdout.write("\n")
            sys.stdout.flush()
        return 0
    out_lines = []
    for line in _read_file(args.input).splitlines():
        stream = [w.lower() for w in line.split()]
        if not stream:
            continue
        out_lines.append(render_text(format_chunks(model, stream, config)))
    if not out_lines:
        raise DataError(f"{args.input}: no tokens to format")
    text = "\n".join(out_lines) + "\n"
    if args.output == "-":
        sys.stdout.write(text)
    else:
        write_atomic(args.output, text)
    return 0


def cmd_tag(args: argparse.Namespace) -> int:
    model = _load_ner(args.model)
    if args.plain:
        docs = []
        for line in _read_file(args.input).splitlines():
            tokens = normalize_text(line)
            if not tokens:
                continue
            sentences = []
            for piece in split_sentences(tokens):
                sentences.append(Sentence(tuple(piece), tuple(model.tag(piece))))
            docs.append(Document(tuple(sentences)))
        if not docs:
            raise DataError(f"{args.input}: no tokens to tag")
    else:
        docs = []
        for doc in _read_docs(args.input):
            sentences = [
                Sentence(s.tokens, tuple(model.tag(list(s.tokens)))) for s in doc.sentences
            ]
            docs.append(Document(tuple(sentences)))
        if not docs:
            raise DataError(f"{args.input}: no documents")
    write_atomic(args.output, conll_to_string(docs))
    print(f"tagged {len(docs)} document(s) to {args.output}")
    return 0


def _error_profile(args: argparse.Namespace, vocab: list[str]) -> ErrorProfile:
    try:
        if args.wer is not None:
            return ErrorProfile.from_wer(args.wer, vocab, seed=args.seed)
        return ErrorProfile(
            p_sub=args.p_sub, p_del=args.p_del, p_ins=args.p_ins,
            vocabulary=tuple(vocab), seed=args.seed,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.wer is not None and not 0.0 <= args.wer <= 1.0:
        raise UsageError(f"target rate must be in [0, 1], got {args.wer}")
    for name in ("p_sub", "p_del", "p_ins"):
        value = getattr(args, name)
        if not 0.0 <= value <= 1.0:
            raise UsageError(f"--{name.replace('_', '-')} must be in [0, 1], got {value}")
    docs = _read_docs(args.input)
    vocab = vocabulary(docs)
    profile = _error_profile(args, vocab)
    lines = []
    traces = []
    for i, doc in enumerate(docs):
        hyp, trace = corrupt(strip_formatting(doc.tokens()), profile.with_seed(profile.seed + i))
        lines.append(" ".join(hyp))
        traces.append(trace.to_dict())
    write_atomic(args.output, "\n".join(lines) + "\n")
    if args.trace:
        write_atomic(args.trace, json.dumps(traces, ensure_ascii=False) + "\n")
    print(f"corrupted {len(docs)} document(s) to {args.output}")
    return 0


def cmd_score(args: argparse.Namespace) -> int:
    gold = _read_docs(args.gold)
    hyp_token_lines = [l.split() for l in _read_file(args.hyp_tokens).splitlines() if l.strip()]
    tagged = _read_docs(args.hyp_tags)
    if not all(d.tagged for d in tagged):
        raise DataError(f"{args.hyp_tags}: documents carry no tags")
    hyp_tokens = [[w.lower() for w in line] for line in hyp_token_lines]
    hyp_from_conll = [strip_formatting(d.tokens()) for d in tagged]
    if hyp_tokens != hyp_from_conll:
        raise DataError(
            f"token streams in {args.hyp_tokens} and {args.hyp_tags} disagree"
        )
    hyp_tags = [d.tags() for d in tagged]
    try:
        report = evaluate_pipeline(gold, hyp_tokens, hyp_tags)
    except ValueError as e:
        raise DataError(str(e)) from None
    if args.out:
        write_atomic(args.out, report.to_json())
    if args.table or not args.out:
        print(report.render_table())
    return 0


def cmd_pipeline(args: argparse.Namespace) -> int:
    try:
        raw = json.loads(_read_file(args.config))
    except json.JSONDecodeError as e:
        raise DataError(f"{args.config}: invalid JSON: {e}") from None
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.workdir is not None:
        raw["workdir"] = args.workdir
    if args.wer is not None:
        raw.setdefault("error", {})["wer"] = args.wer
    if args.chunk_len is not None:
        raw.setdefault("chunk", {})["chunk_len"] = args.chunk_len
    if args.overlap is not None:
        raw.setdefault("chunk", {})["overlap"] = args.overlap
    try:
        config = load_config(raw)
    except ValueError as e:
        raise DataError(f"{args.config}: {e}") from None
    try:
        run_pipeline(config, log=print)
    except OSError as e:
        raise DataError(str(e)) from None
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="speechner", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the bundled synthetic corpus")
    p.add_argument("--train-docs", type=int, default=300)
    p.add_argument("--test-docs", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-train", required=True)
    p.add_argument("--out-test", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert", help="entity markup to tab-separated tags")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--summary", help="write the punctuation-stripping summary here")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("segment", help="cut formatted text into recovery samples")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("train-capu", help="train the formatting recovery model")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_capu)

    p = sub.add_parser("train-ner", help="train the entity tagger")
    p.add_argument("--train", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-format-features", action="store_true",
                   help="ablate case/mark features")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train_ner)

    p = sub.add_parser("format", help="chunked formatting recovery over a stream")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True,
                   help="text file (one stream per line) or - for stdin streaming")
    p.add_argument("--out", dest="output", default="-")
    p.add_argument("--chunk-len", type=int, default=40)
    p.add_argument("--overlap", type=int, default=10)
    p.set_defaults(func=cmd_format)

    p = sub.add_parser("tag", help="entity-tag documents")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--plain", action="store_true",
                   help="input is plain text, one document per line")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("simulate", help="inject recognition errors into a corpus")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--wer", type=float, help="target rate, split 0.6/0.25/0.15")
    p.add_argument("--p-sub", type=float, default=0.0)
    p.add_argument("--p-del", type=float, default=0.0)
    p.add_argument("--p-ins", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace", help="write the edit trace as JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("score", help="align and score hypothesis tags against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--hyp-tokens", required=True, help="one document per line")
    p.add_argument("--hyp-tags", required=True, help="tagged file over the same tokens")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--table", action="store_true", help="print the table as well")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("pipeline", help="run the full multi-condition experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--workdir")
    p.add_argument("--seed", type=int)
    p.add_argument("--wer", type=float)
    p.add_argument("--chunk-len", type=int)
    p.add_argument("--overlap", type=int)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except SystemExit as e:  # --help and friends
        return int(e.code or 0)
    command = args.command
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error [{command}]: {e}", file=sys.stderr)
        return 1
    except (DataError, ParseError) as e:
        print(f"data error [{command}]: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - the CLI boundary
        print(f"internal error [{command}]: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
