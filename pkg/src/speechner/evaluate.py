"""Alignment-based scoring of entity tagging over error-ful transcripts.

The hypothesis word stream is aligned to the reference with a minimum-edit
alignment (unit costs, lowercase comparison, deterministic backtrace that
prefers keep over substitute over delete over insert). Hypothesis tags are
then projected to reference length: kept words keep their tag, substituted
and deleted positions become O, inserted words lose theirs. Entities are
compared by exact type and span; precision, recall, and F1 use the 0/0 -> 0
convention. Word error rate is (substitutions + deletions + insertions)
divided by the reference length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ner import ENTITY_TYPES, decode_entities, repair_bio
from .tokens import CaseClass, Punct, Token, strip_formatting


@dataclass(frozen=True)
class AlignmentOp:
    """One alignment verdict: T (match), S, D, or I, with source indices."""

    kind: str
    ref_index: int | None = None
    hyp_index: int | None = None

    def __post_init__(self) -> None:
        expect = {"T": (True, True), "S": (True, True), "D": (True, False), "I": (False, True)}
        if self.kind not in expect:
            raise ValueError(f"unknown op kind {self.kind!r}")
        want_ref, want_hyp = expect[self.kind]
        if (self.ref_index is not None) != want_ref or (self.hyp_index is not None) != want_hyp:
            raise ValueError(f"op {self.kind} has wrong indices: {self}")


def _cost_matrix(ref: list[str], hyp: list[str]) -> np.ndarray:
    """Full edit-distance table with unit costs, computed row-wise."""
    r, h = len(ref), len(hyp)
    words = {w: i for i, w in enumerate(dict.fromkeys(ref + hyp))}
    ref_ids = np.array([words[w] for w in ref], dtype=np.int32)
    hyp_ids = np.array([words[w] for w in hyp], dtype=np.int32)
    d = np.empty((r + 1, h + 1), dtype=np.int32)
    cols = np.arange(h + 1, dtype=np.int32)
    d[0] = cols
    t = np.empty(h + 1, dtype=np.int32)
    for i in range(1, r + 1):
        t[0] = i
        if h:
            sub = (hyp_ids != ref_ids[i - 1]).astype(np.int32)
            np.minimum(d[i - 1, :-1] + sub, d[i - 1, 1:] + 1, out=t[1:])
        # resolve the in-row insertion chain: d[i,j] = min_{k<=j} t[k] + (j-k)
        d[i] = cols + np.minimum.accumulate(t - cols)
    return d


def align(ref: Sequence[str], hyp: Sequence[str]) -> list[AlignmentOp]:
    """Minimum-edit alignment of hypothesis against reference words.

    Comparison is on lowercased text. Among minimal alignments the
    backtrace deterministically prefers T, then S, then D, then I.
    """
    r_words = [w.lower() for w in ref]
    h_words = [w.lower() for w in hyp]
    d = _cost_matrix(r_words, h_words)
    ops: list[AlignmentOp] = []
    i, j = len(r_words), len(h_words)
    while i > 0 or j > 0:
        if i > 0 and j > 0 and r_words[i - 1] == h_words[j - 1] and d[i, j] == d[i - 1, j - 1]:
            ops.append(AlignmentOp("T", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and d[i, j] == d[i - 1, j - 1] + 1:
            ops.append(AlignmentOp("S", i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i > 0 and d[i, j] == d[i - 1, j] + 1:
            ops.append(AlignmentOp("D", ref_index=i - 1))
            i -= 1
        else:
            ops.append(AlignmentOp("I", hyp_index=j - 1))
            j -= 1
    ops.reverse()
    return ops


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> int:
    """Unit-cost edit distance on lowercased words."""
    r_words = [w.lower() for w in ref]
    h_words = [w.lower() for w in hyp]
    return int(_cost_matrix(r_words, h_words)[-1, -1])


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    """(substitutions + deletions + insertions) / reference length."""
    if not ref:
        raise ValueError("empty reference")
    return edit_distance(ref, hyp) / len(ref)


def project_tags(
    ref_tags: Sequence[str],
    hyp_tags: Sequence[str],
    alignment: Sequence[AlignmentOp],
) -> list[str]:
    """Project hypothesis tags onto reference length.

    T copies the hypothesis tag, S and D yield O, I drops the hypothesis
    tag; orphan continuations in the result are repaired to span starts.
    The output always has exactly ``len(ref_tags)`` entries.
    """
    ref_len = sum(1 for op in alignment if op.ref_index is not None)
    hyp_len = sum(1 for op in alignment if op.hyp_index is not None)
    if ref_len != len(ref_tags):
        raise ValueError(f"alignment covers {ref_len} reference tags, got {len(ref_tags)}")
    if hyp_len != len(hyp_tags):
        raise ValueError(f"alignment covers {hyp_len} hypothesis tags, got {len(hyp_tags)}")
    projected: list[str] = []
    for op in alignment:
        if op.kind == "T":
            projected.append(hyp_tags[op.hyp_index])  # type: ignore[index]
        elif op.kind in ("S", "D"):
            projected.append("O")
    return repair_bio(projected)


@dataclass(frozen=True)
class PrfCounts:
    """Exact-match entity counts with derived precision/recall/F1."""

    correct: int = 0
    predicted: int = 0
    gold: int = 0

    @property
    def precision(self) -> float:
        return self.correct / self.predicted if self.predicted else 0.0

    @property
    def recall(self) -> float:
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def merged(self, other: "PrfCounts") -> "PrfCounts":
        return PrfCounts(
            self.correct + other.correct,
            self.predicted + other.predicted,
            self.gold + other.gold,
        )

    def to_dict(self) -> dict:
        return {
            "correct": self.correct,
            "predicted": self.predicted,
            "gold": self.gold,
            "precision": round(self.precision, 4),
            "recall": round(self.recall, 4),
            "f1": round(self.f1, 4),
        }


@dataclass
class EvalReport:
    """Per-type and micro entity scores, plus optional WER and extras."""

    per_type: dict[str, PrfCounts]
    micro: PrfCounts
    wer: float | None = None
    alignment_counts: dict[str, int] | None = None
    ref_token_count: int | None = None
    hyp_token_count: int | None = None
    capu: dict[str, float | None] | None = None
    per_document: list[dict] | None = None

    def to_dict(self) -> dict:
        d: dict = {
            "micro": self.micro.to_dict(),
            "per_type": {t: c.to_dict() for t, c in sorted(self.per_type.items())},
        }
        if self.wer is not None:
            d["wer"] = round(self.wer, 4)
        if self.alignment_counts is not None:
            d["alignment"] = dict(sorted(self.alignment_counts.items()))
        if self.ref_token_count is not None:
            d["ref_tokens"] = self.ref_token_count
        if self.hyp_token_count is not None:
            d["hyp_tokens"] = self.hyp_token_count
        if self.capu is not None:
            d["capu"] = {
                k: (None if v is None else round(v, 4)) for k, v in sorted(self.capu.items())
            }
        if self.per_document is not None:
            d["documents"] = self.per_document
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n"

    def render_table(self) -> str:
        rows = [("type", "prec", "rec", "f1", "correct", "pred", "gold")]
        for etype in sorted(self.per_type):
            c = self.per_type[etype]
            rows.append(
                (etype, f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}",
                 str(c.correct), str(c.predicted), str(c.gold))
            )
        c = self.micro
        rows.append(
            ("micro", f"{c.precision:.4f}", f"{c.recall:.4f}", f"{c.f1:.4f}",
             str(c.correct), str(c.predicted), str(c.gold))
        )
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
        if self.wer is not None:
            lines.append(f"wer: {self.wer:.4f}")
        return "\n".join(lines)


def entity_prf(ref_tags: Sequence[str], hyp_tags: Sequence[str]) -> EvalReport:
    """Exact-match entity precision/recall/F1, per type and micro.

    Both sequences are decoded leniently; an entity is correct only when
    type and span both match.
    """
    if len(ref_tags) != len(hyp_tags):
        raise ValueError(f"length mismatch: {len(ref_tags)} vs {len(hyp_tags)}")
    gold = {(e.type, e.start, e.end) for e in decode_entities(ref_tags)}
    pred = {(e.type, e.start, e.end) for e in decode_entities(hyp_tags)}
    per_type: dict[str, PrfCounts] = {}
    for etype in ENTITY_TYPES:
        g = {e for e in gold if e[0] == etype}
        p = {e for e in pred if e[0] == etype}
        per_type[etype] = PrfCounts(len(g & p), len(p), len(g))
    micro = PrfCounts(len(gold & pred), len(pred), len(gold))
    return EvalReport(per_type=per_type, micro=micro)


def capu_confusion(
    ref_formatted: Sequence[Token], hyp_formatted: Sequence[Token]
) -> dict[str, float | None]:
    """Per-class formatting recovery rates against reference formatting.

    ``capitalization`` is accuracy over reference tokens that are not
    lowercase; ``period``/``comma``/``blank`` are recalls over reference
    positions carrying that mark class. Classes with no reference positions
    report None.
    """
    if len(ref_formatted) != len(hyp_formatted):
        raise ValueError(
            f"length mismatch: {len(ref_formatted)} vs {len(hyp_formatted)}"
        )
    if strip_formatting(list(ref_formatted)) != strip_formatting(list(hyp_formatted)):
        raise ValueError("token texts differ; recovery only changes case and marks")
    cap_total = cap_hit = 0
    for r, h in zip(ref_formatted, hyp_formatted):
        if r.case_class is not CaseClass.LOWER:
            cap_total += 1
            if h.case_class is r.case_class:
                cap_hit += 1
    out: dict[str, float | None] = {
        "capitalization": cap_hit / cap_total if cap_total else None
    }
    for key, punct in (("period", Punct.PERIOD), ("comma", Punct.COMMA), ("blank", Punct.NONE)):
        total = hit = 0
        for r, h in zip(ref_formatted, hyp_formatted):
            if r.punct_after is punct:
                total += 1
                if h.punct_after is punct:
                    hit += 1
        out[key] = hit / total if total else None
    return out


def evaluate_pipeline(
    gold_docs: Sequence,
    hyp_tokens_per_doc: Sequence[Sequence[str]],
    hyp_tags_per_doc: Sequence[Sequence[str]],
) -> EvalReport:
    """Full scoring: per document, align, project, and accumulate.

    ``gold_docs`` are tagged documents; each hypothesis is the recognized
    (lowercase) word sequence for the whole document plus one tag per word.
    """
    if not (len(gold_docs) == len(hyp_tokens_per_doc) == len(hyp_tags_per_doc)):
        raise ValueError(
            f"document count mismatch: {len(gold_docs)} gold, "
            f"{len(hyp_tokens_per_doc)} hypothesis token lists, "
            f"{len(hyp_tags_per_doc)} hypothesis tag lists"
        )
    per_type = {t: PrfCounts() for t in ENTITY_TYPES}
    micro = PrfCounts()
    align_counts = {"T": 0, "S": 0, "D": 0, "I": 0}
    ref_total = hyp_total = 0
    per_document: list[dict] = []
    for idx, (doc, hyp_tokens, hyp_tags) in enumerate(
        zip(gold_docs, hyp_tokens_per_doc, hyp_tags_per_doc)
    ):
        ref_words = strip_formatting(doc.tokens())
        ref_tags = doc.tags()
        if len(hyp_tokens) != len(hyp_tags):
            raise ValueError(
                f"document {idx}: {len(hyp_tokens)} hypothesis tokens "
                f"vs {len(hyp_tags)} tags"
            )
        ops = align(ref_words, list(hyp_tokens))
        projected = project_tags(ref_tags, list(hyp_tags), ops)
        report = entity_prf(ref_tags, projected)
        for etype in ENTITY_TYPES:
            per_type[etype] = per_type[etype].merged(report.per_type[etype])
        micro = micro.merged(report.micro)
        errors = sum(1 for op in ops if op.kind != "T")
        for op in ops:
            align_counts[op.kind] += 1
        ref_total += len(ref_words)
        hyp_total += len(hyp_tokens)
        per_document.append(
            {
                "index": idx,
                "wer": round(errors / len(ref_words), 4),
                "entities": report.micro.to_dict(),
            }
        )
    return EvalReport(
        per_type=per_type,
        micro=micro,
        wer=(align_counts["S"] + align_counts["D"] + align_counts["I"]) / ref_total
        if ref_total
        else None,
        alignment_counts={
            "correct": align_counts["T"],
            "substitutions": align_counts["S"],
            "deletions": align_counts["D"],
            "insertions": align_counts["I"],
        },
        ref_token_count=ref_total,
        hyp_token_count=hyp_total,
        per_document=per_document,
    )
