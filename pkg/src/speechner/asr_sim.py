"""Seeded word-level error injection standing in for a speech recognizer.

Each reference word independently stays, is substituted by another
vocabulary word, or is deleted; after each position an extra vocabulary
word is inserted with its own probability. The full edit trace is returned
so tests can replay it and recover the hypothesis exactly.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Sequence

# Share of a target word error rate assigned to each error kind.
WER_SPLIT = {"sub": 0.6, "del": 0.25, "ins": 0.15}


@dataclass(frozen=True)
class ErrorProfile:
    """Per-word corruption probabilities plus the replacement vocabulary."""

    p_sub: float
    p_del: float
    p_ins: float
    vocabulary: tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))
        for name in ("p_sub", "p_del", "p_ins"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.p_sub + self.p_del + self.p_ins > 1.0:
            raise ValueError("error probabilities must sum to at most 1")
        if self.p_sub + self.p_ins > 0 and not self.vocabulary:
            raise ValueError("vocabulary required when substituting or inserting")
        for w in self.vocabulary:
            if not w or w != w.lower():
                raise ValueError(f"vocabulary words must be non-empty lowercase: {w!r}")

    @classmethod
    def from_wer(cls, wer: float, vocabulary: Sequence[str], seed: int = 0) -> "ErrorProfile":
        """Split a target word error rate into the conventional
        substitution/deletion/insertion proportions (0.6 / 0.25 / 0.15)."""
        if not 0.0 <= wer <= 1.0:
            raise ValueError(f"target rate must be in [0, 1], got {wer}")
        return cls(
            p_sub=wer * WER_SPLIT["sub"],
            p_del=wer * WER_SPLIT["del"],
            p_ins=wer * WER_SPLIT["ins"],
            vocabulary=tuple(vocabulary),
            seed=seed,
        )

    def with_seed(self, seed: int) -> "ErrorProfile":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class CorruptionTrace:
    """Edits applied to a reference; replaying them reproduces the hypothesis.

    ``substitutions`` and ``deletions`` are keyed by reference index;
    ``insertions`` holds words inserted directly after a reference index.
    """

    substitutions: tuple[tuple[int, str], ...] = ()
    deletions: tuple[int, ...] = ()
    insertions: tuple[tuple[int, str], ...] = ()

    def is_empty(self) -> bool:
        return not (self.substitutions or self.deletions or self.insertions)

    def counts(self) -> tuple[int, int, int]:
        return len(self.substitutions), len(self.deletions), len(self.insertions)

    def replay(self, ref: Sequence[str]) -> list[str]:
        subs = dict(self.substitutions)
        dels = set(self.deletions)
        ins = dict(self.insertions)
        out: list[str] = []
        for i, word in enumerate(ref):
            if i in dels:
                pass
            elif i in subs:
                out.append(subs[i])
            else:
                out.append(word)
            if i in ins:
                out.append(ins[i])
        return out

    def to_dict(self) -> dict:
        return {
            "substitutions": [[i, w] for i, w in self.substitutions],
            "deletions": list(self.deletions),
            "insertions": [[i, w] for i, w in self.insertions],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CorruptionTrace":
        return cls(
            substitutions=tuple((int(i), str(w)) for i, w in d["substitutions"]),
            deletions=tuple(int(i) for i in d["deletions"]),
            insertions=tuple((int(i), str(w)) for i, w in d["insertions"]),
        )


def _pick_other(rng: random.Random, vocabulary: tuple[str, ...], word: str) -> str | None:
    for _ in range(8):
        cand = vocabulary[rng.randrange(len(vocabulary))]
        if cand != word:
            return cand
    alternatives = [w for w in vocabulary if w != word]
    if not alternatives:
        return None
    return alternatives[rng.randrange(len(alternatives))]


def corrupt(ref: Sequence[str], profile: ErrorProfile) -> tuple[list[str], CorruptionTrace]:
    """Corrupt a lowercase word sequence; deterministic per profile seed."""
    rng = random.Random(profile.seed)
    hyp: list[str] = []
    subs: list[tuple[int, str]] = []
    dels: list[int] = []
    ins: list[tuple[int, str]] = []
    for i, word in enumerate(ref):
        r = rng.random()
        if r < profile.p_sub:
            replacement = _pick_other(rng, profile.vocabulary, word)
            if replacement is None:
                hyp.append(word)  # vocabulary offers no alternative
            else:
                subs.append((i, replacement))
                hyp.append(replacement)
        elif r < profile.p_sub + profile.p_del:
            dels.append(i)
        else:
            hyp.append(word)
        if profile.p_ins and rng.random() < profile.p_ins:
            extra = profile.vocabulary[rng.randrange(len(profile.vocabulary))]
            ins.append((i, extra))
            hyp.append(extra)
    return hyp, CorruptionTrace(tuple(subs), tuple(dels), tuple(ins))
