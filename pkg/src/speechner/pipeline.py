"""End-to-end experiment orchestration behind the ``pipeline`` subcommand.

Trains a formatting-recovery model and an entity tagger on one corpus, then
scores the tagger on up to five input conditions of the same test set:

* ``reference``     - formatted text, sentence boundaries known
* ``uncased``       - lowercased, mark-free word stream
* ``uncased_capu``  - the same stream after chunked formatting recovery
* ``asr``           - the stream corrupted at a target word error rate
* ``asr_capu``      - the corrupted stream after formatting recovery

All stages are seeded, so identical configurations produce byte-identical
artifacts.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .asr_sim import ErrorProfile, corrupt
from .capu import CapuModel, train_capu
from .chunks import ChunkConfig, format_chunks
from .corpus import conll_to_string, read_conll, segment_corpus
from .crf import TrainConfig
from .evaluate import EvalReport, capu_confusion, evaluate_pipeline
from .ner import NerModel, train_ner
from .synthetic import generate_corpus, vocabulary
from .tokens import Document, Sentence, Token, strip_formatting

CONDITIONS = ("reference", "uncased", "uncased_capu", "asr", "asr_capu")

CONFIG_VERSION = 1


@dataclass
class PipelineConfig:
    """One experiment bundle; every stochastic stage derives from ``seed``."""

    seed: int
    workdir: str = "."
    train_docs: int = 300
    test_docs: int = 80
    train_path: str | None = None
    test_path: str | None = None
    chunk: ChunkConfig = field(default_factory=ChunkConfig)
    wer_target: float = 0.065
    capu_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=40))
    ner_train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=40))
    uncased_augment: float = 0.15
    conditions: tuple[str, ...] = CONDITIONS

    def __post_init__(self) -> None:
        unknown = set(self.conditions) - set(CONDITIONS)
        if unknown:
            raise ValueError(f"unknown conditions: {sorted(unknown)}")
        if not 0.0 <= self.uncased_augment <= 1.0:
            raise ValueError("uncased_augment must be in [0, 1]")


def _train_config(d: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        l2=d.get("l2", 1e-3),
        learning_rate=d.get("learning_rate", 1.0),
        decay=d.get("decay", 0.0),
        epochs=d.get("epochs", 40),
        batch_size=d.get("batch_size"),
        seed=d.get("seed", seed),
    )


def load_config(raw: dict) -> PipelineConfig:
    """Validate and materialize a configuration document."""
    version = raw.get("version")
    if version != CONFIG_VERSION:
        raise ValueError(f"unsupported config version: {version!r}")
    if "seed" not in raw:
        raise ValueError("config requires a seed: every stochastic stage is seeded")
    seed = int(raw["seed"])
    corpus = raw.get("corpus", {})
    if bool(corpus.get("train_path")) != bool(corpus.get("test_path")):
        raise ValueError("corpus train_path and test_path must be given together")
    for key in ("train_path", "test_path"):
        path = corpus.get(key)
        if path and not os.path.exists(path):
            raise ValueError(f"corpus {key} does not exist: {path}")
    chunk = raw.get("chunk", {})
    error = raw.get("error", {})
    return PipelineConfig(
        seed=seed,
        workdir=raw.get("workdir", "."),
        train_docs=int(corpus.get("train_docs", 300)),
        test_docs=int(corpus.get("test_docs", 80)),
        train_path=corpus.get("train_path"),
        test_path=corpus.get("test_path"),
        chunk=ChunkConfig(
            chunk_len=int(chunk.get("chunk_len", 40)),
            overlap=int(chunk.get("overlap", 10)),
        ),
        wer_target=float(error.get("wer", 0.065)),
        capu_train=_train_config(raw.get("capu_train", {}), seed),
        ner_train=_train_config(raw.get("ner_train", {}), seed),
        uncased_augment=float(raw.get("uncased_augment", 0.15)),
        conditions=tuple(raw.get("conditions", CONDITIONS)),
    )


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file plus rename, so readers never see partials."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _lower_tokens(words: Sequence[str]) -> list[Token]:
    return [Token.make(w) for w in words]


def augment_uncased(docs: Sequence[Document], share: float, seed: int) -> list[Document]:
    """Append stripped copies of a seeded share of training sentences.

    The tagger keeps its formatting features but also sees some text the
    way a recognizer emits it, so losing formatting degrades it instead of
    silencing it.
    """
    if share <= 0:
        return list(docs)
    rng = random.Random(seed)
    extra: list[Sentence] = []
    for doc in docs:
        for sent in doc.sentences:
            if rng.random() < share:
                toks = tuple(Token.make(w) for w in strip_formatting(list(sent.tokens)))
                extra.append(Sentence(toks, sent.tags))
    out = list(docs)
    if extra:
        out.append(Document(tuple(extra)))
    return out


@dataclass
class ConditionResult:
    report: EvalReport
    capu: dict[str, float | None] | None = None


def run_conditions(
    capu_model: CapuModel | None,
    ner_model: NerModel,
    test_docs: Sequence[Document],
    chunk: ChunkConfig,
    profile: ErrorProfile | None,
    conditions: Sequence[str] = CONDITIONS,
) -> dict[str, ConditionResult]:
    """Score the tagger under each requested input condition.

    Corruption is per-document, seeded from the profile seed plus the
    document index. Recovery conditions require ``capu_model``; corrupted
    conditions require ``profile``.
    """
    results: dict[str, ConditionResult] = {}
    stripped = [strip_formatting(doc.tokens()) for doc in test_docs]
    corrupted: list[list[str]] | None = None
    if profile is not None:
        corrupted = [
            corrupt(words, profile.with_seed(profile.seed + i))[0]
            for i, words in enumerate(stripped)
        ]

    def score(hyp_tokens: list[list[str]], hyp_tags: list[list[str]]) -> EvalReport:
        return evaluate_pipeline(test_docs, hyp_tokens, hyp_tags)

    for name in conditions:
        if name == "reference":
            tags = [
                [t for s in doc.sentences for t in ner_model.tag(list(s.tokens))]
                for doc in test_docs
            ]
            results[name] = ConditionResult(score(stripped, tags))
        elif name == "uncased":
            tags = [ner_model.tag_stream(_lower_tokens(w)) for w in stripped]
            results[name] = ConditionResult(score(stripped, tags))
        elif name == "uncased_capu":
            if capu_model is None:
                raise ValueError("condition uncased_capu requires a recovery model")
            formatted = [format_chunks(capu_model, w, chunk) for w in stripped]
            tags = [ner_model.tag_stream(toks) for toks in formatted]
            confusion = _merge_confusions(test_docs, formatted)
            results[name] = ConditionResult(score(stripped, tags), capu=confusion)
        elif name == "asr":
            if corrupted is None:
                raise ValueError("condition asr requires an error profile")
            tags = [ner_model.tag_stream(_lower_tokens(w)) for w in corrupted]
            results[name] = ConditionResult(score(corrupted, tags))
        elif name == "asr_capu":
            if corrupted is None:
                raise ValueError("condition asr_capu requires an error profile")
            if capu_model is None:
                raise ValueError("condition asr_capu requires a recovery model")
            formatted = [format_chunks(capu_model, w, chunk) for w in corrupted]
            tags = [ner_model.tag_stream(toks) for toks in formatted]
            results[name] = ConditionResult(score(corrupted, tags))
        else:
            raise ValueError(f"unknown condition: {name!r}")
    return results


def _merge_confusions(
    gold_docs: Sequence[Document], formatted: Sequence[list[Token]]
) -> dict[str, float | None]:
    """Corpus-level formatting recovery rates (token streams must match)."""
    ref_all: list[Token] = []
    hyp_all: list[Token] = []
    for doc, hyp in zip(gold_docs, formatted):
        ref_all.extend(doc.tokens())
        hyp_all.extend(hyp)
    return capu_confusion(ref_all, hyp_all)


def summary_table(results: dict[str, ConditionResult]) -> str:
    rows = [("condition", "precision", "recall", "f1", "wer")]
    for name in CONDITIONS:
        if name not in results:
            continue
        r = results[name].report
        rows.append(
            (
                name,
                f"{r.micro.precision:.4f}",
                f"{r.micro.recall:.4f}",
                f"{r.micro.f1:.4f}",
                f"{r.wer:.4f}" if r.wer is not None else "-",
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return "\n".join(
        "  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows
    )


def run_pipeline(
    config: PipelineConfig, log: Callable[[str], None] = lambda _msg: None
) -> dict:
    """Run the whole experiment bundle; returns the summary dictionary.

    Writes into ``config.workdir``: the corpus (when generated), both model
    files with their objective traces, one report per condition, and
    ``summary.json``.
    """
    os.makedirs(config.workdir, exist_ok=True)

    def path(name: str) -> str:
        return os.path.join(config.workdir, name)

    if config.train_path and config.test_path:
        log("loading corpus")
        with open(config.train_path, encoding="utf-8") as f:
            train_docs = read_conll(f)
        with open(config.test_path, encoding="utf-8") as f:
            test_docs = read_conll(f)
    else:
        log(f"generating corpus ({config.train_docs} train / {config.test_docs} test docs)")
        train_docs, test_docs = generate_corpus(
            config.train_docs, config.test_docs, config.seed
        )
        write_atomic(path("train.conll"), conll_to_string(train_docs))
        write_atomic(path("test.conll"), conll_to_string(test_docs))

    train_stream = [t for d in train_docs for t in d.tokens()]
    needs_capu = any(c.endswith("_capu") for c in config.conditions)
    capu_model: CapuModel | None = None
    if needs_capu:
        log("training formatting recovery model")
        samples = list(segment_corpus(train_stream, seed=config.seed + 1))
        capu_model, capu_trace = train_capu(samples, config.capu_train)
        capu_model.save(path("capu.json"))
        write_atomic(
            path("capu.trace.json"), json.dumps({"objective": capu_trace}) + "\n"
        )

    log("training entity tagger")
    ner_train_docs = augment_uncased(train_docs, config.uncased_augment, config.seed + 3)
    ner_model, ner_trace = train_ner(ner_train_docs, config.ner_train)
    ner_model.save(path("ner.json"))
    write_atomic(path("ner.trace.json"), json.dumps({"objective": ner_trace}) + "\n")

    profile: ErrorProfile | None = None
    if any(c.startswith("asr") for c in config.conditions):
        profile = ErrorProfile.from_wer(
            config.wer_target, vocabulary(train_docs), seed=config.seed + 2
        )

    log("scoring conditions")
    results = run_conditions(
        capu_model, ner_model, test_docs, config.chunk, profile, config.conditions
    )
    summary: dict = {"seed": config.seed, "wer_target": config.wer_target, "conditions": {}}
    for name, res in results.items():
        report = res.report
        if res.capu is not None:
            report.capu = res.capu
        write_atomic(path(f"report_{name}.json"), report.to_json())
        summary["conditions"][name] = {
            "precision": round(report.micro.precision, 4),
            "recall": round(report.micro.recall, 4),
            "f1": round(report.micro.f1, 4),
            "wer": None if report.wer is None else round(report.wer, 4),
        }
    write_atomic(
        path("summary.json"),
        json.dumps(summary, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
    )
    log(summary_table(results))
    return summary
