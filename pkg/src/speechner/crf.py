"""Linear-chain conditional random field over sparse string features.

A label sequence is scored as the sum of per-position emission weights
(one weight per active feature string and label) plus a dense transition
weight between adjacent labels. All inference runs in log space: the
forward pass yields the partition function, forward-backward the posterior
marginals, and Viterbi the argmax labelling with a deterministic
lowest-index tie-break.

Training maximizes the L2-penalized mean conditional log-likelihood. The
default optimizer is deterministic full-batch gradient ascent with step
halving, which makes the per-epoch objective trace non-decreasing and the
resulting weight tables bit-reproducible; a seeded mini-batch mode is
available for larger corpora.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

# Per-position active feature strings for one sentence.
FeatureSeq = list[list[str]]

_BOS = "<s>"
_EOS = "</s>"


@dataclass(frozen=True)
class LabelSet:
    """Ordered, unique label names with index lookup."""

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if not self.labels:
            raise ValueError("label set must not be empty")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("label names must be unique")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"unknown label: {label!r}") from None

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self):
        return iter(self.labels)

    def __getitem__(self, i: int) -> str:
        return self.labels[i]


@dataclass(frozen=True)
class FeatureTemplate:
    """Switches for the deterministic word-level feature generator.

    ``window`` is the half-width of the identity window; out-of-range
    offsets produce boundary sentinels. ``affixes`` bounds prefix/suffix
    length; ``lowercase`` adds lowercased identities (useful only when the
    input may carry case); ``shape`` adds a collapsed case/digit mask;
    ``position`` flags the first and last position; ``pairs`` conjoins
    adjacent lowercase identities.
    """

    window: int = 2
    lowercase: bool = True
    affixes: int = 3
    shape: bool = True
    position: bool = True
    pairs: bool = True

    def __post_init__(self) -> None:
        if self.window < 0:
            raise ValueError("window must be >= 0")
        if self.affixes < 0:
            raise ValueError("affixes must be >= 0")

    def to_dict(self) -> dict:
        return {
            "window": self.window,
            "lowercase": self.lowercase,
            "affixes": self.affixes,
            "shape": self.shape,
            "position": self.position,
            "pairs": self.pairs,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureTemplate":
        return cls(**d)


def _context(tokens: Sequence[str], i: int) -> str:
    if i < 0:
        return _BOS
    if i >= len(tokens):
        return _EOS
    return tokens[i]


def _shape_mask(token: str) -> str:
    out: list[str] = []
    for ch in token:
        if ch.isupper():
            m = "X"
        elif ch.islower():
            m = "x"
        elif ch.isdigit():
            m = "d"
        else:
            m = "-"
        if not out or out[-1] != m:
            out.append(m)
    return "".join(out)


def extract_features(tokens: Sequence[str], position: int, template: FeatureTemplate) -> list[str]:
    """Deterministic feature strings for one position of a token sequence."""
    if not 0 <= position < len(tokens):
        raise IndexError(f"position {position} out of range for {len(tokens)} tokens")
    feats: list[str] = []
    w = template.window
    for d in range(-w, w + 1):
        feats.append(f"w{d}={_context(tokens, position + d)}")
    if template.lowercase:
        for d in range(-w, w + 1):
            feats.append(f"lw{d}={_context(tokens, position + d).lower()}")
    tok = tokens[position]
    for k in range(1, template.affixes + 1):
        if k <= len(tok):
            feats.append(f"pre{k}={tok[:k]}")
            feats.append(f"suf{k}={tok[-k:]}")
    if template.shape:
        feats.append(f"shape={_shape_mask(tok)}")
    if template.position:
        if position == 0:
            feats.append("bos")
        if position == len(tokens) - 1:
            feats.append("eos")
    if template.pairs:
        a = _context(tokens, position - 1).lower()
        b = tok.lower()
        c = _context(tokens, position + 1).lower()
        feats.append(f"pair-1={a}|{b}")
        feats.append(f"pair+1={b}|{c}")
    return feats


def _logsumexp(a: np.ndarray, axis: int | None = None) -> np.ndarray | float:
    m = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        out = np.log(np.sum(np.exp(a - safe), axis=axis, keepdims=True)) + safe
    out = np.where(np.isfinite(m), out, m)
    if axis is None:
        return float(out.item())
    return np.squeeze(out, axis=axis)


class CrfModel:
    """Immutable weight tables plus the label set and feature template.

    Emission weights are a dense ``(num_features, num_labels)`` array over
    interned feature strings; features unseen at training time contribute
    zero at decode time. Transitions are ``(num_labels, num_labels)``.
    """

    FORMAT_VERSION = 1

    def __init__(
        self,
        label_set: LabelSet,
        templates: FeatureTemplate,
        feature_index: dict[str, int],
        emissions: np.ndarray,
        transitions: np.ndarray,
    ) -> None:
        k = len(label_set)
        emissions = np.asarray(emissions, dtype=np.float64)
        transitions = np.asarray(transitions, dtype=np.float64)
        if emissions.shape != (len(feature_index), k):
            raise ValueError(
                f"emission table shape {emissions.shape} != ({len(feature_index)}, {k})"
            )
        if transitions.shape != (k, k):
            raise ValueError(f"transition table shape {transitions.shape} != ({k}, {k})")
        if not (np.all(np.isfinite(emissions)) and np.all(np.isfinite(transitions))):
            raise ValueError("weights must be finite")
        self.label_set = label_set
        self.templates = templates
        self._feature_index = dict(feature_index)
        self.emissions = emissions
        self.transitions = transitions
        self.emissions.setflags(write=False)
        self.transitions.setflags(write=False)

    @classmethod
    def zeros(
        cls,
        label_set: LabelSet,
        templates: FeatureTemplate | None = None,
        features: Iterable[str] = (),
    ) -> "CrfModel":
        index = {f: i for i, f in enumerate(dict.fromkeys(features))}
        k = len(label_set)
        return cls(
            label_set,
            templates or FeatureTemplate(),
            index,
            np.zeros((len(index), k)),
            np.zeros((k, k)),
        )

    @property
    def num_labels(self) -> int:
        return len(self.label_set)

    @property
    def num_features(self) -> int:
        return len(self._feature_index)

    def feature_ids(self, feats: Sequence[str]) -> np.ndarray:
        """Interned ids of the known features among ``feats``."""
        idx = self._feature_index
        return np.array([idx[f] for f in feats if f in idx], dtype=np.intp)

    def emission_matrix(self, xseq: FeatureSeq) -> np.ndarray:
        """Per-position emission scores, shape ``(len(xseq), num_labels)``."""
        m = np.zeros((len(xseq), self.num_labels))
        for t, feats in enumerate(xseq):
            ids = self.feature_ids(feats)
            if ids.size:
                m[t] = self.emissions[ids].sum(axis=0)
        return m

    def score(self, xseq: FeatureSeq, yseq: Sequence[str]) -> float:
        """Unnormalized log-score of a labelling: emissions plus transitions."""
        if len(xseq) != len(yseq):
            raise ValueError(f"sequence lengths differ: {len(xseq)} vs {len(yseq)}")
        y = np.array([self.label_set.index(l) for l in yseq], dtype=np.intp)
        m = self.emission_matrix(xseq)
        total = float(m[np.arange(len(y)), y].sum())
        if len(y) > 1:
            total += float(self.transitions[y[:-1], y[1:]].sum())
        return total

    def _forward(self, m: np.ndarray) -> np.ndarray:
        alphas = np.empty_like(m)
        alphas[0] = m[0]
        for t in range(1, m.shape[0]):
            alphas[t] = m[t] + _logsumexp(alphas[t - 1][:, None] + self.transitions, axis=0)
        return alphas

    def _backward(self, m: np.ndarray) -> np.ndarray:
        betas = np.empty_like(m)
        betas[-1] = 0.0
        for t in range(m.shape[0] - 2, -1, -1):
            betas[t] = _logsumexp(self.transitions + (m[t + 1] + betas[t + 1])[None, :], axis=1)
        return betas

    def log_partition(self, xseq: FeatureSeq) -> float:
        """log of the sum over all labellings of exp(score), via forward."""
        if not xseq:
            raise ValueError("empty input sequence")
        alphas = self._forward(self.emission_matrix(xseq))
        return float(_logsumexp(alphas[-1]))

    def marginals(self, xseq: FeatureSeq) -> np.ndarray:
        """Posterior label distribution per position, rows summing to 1."""
        if not xseq:
            raise ValueError("empty input sequence")
        m = self.emission_matrix(xseq)
        alphas = self._forward(m)
        betas = self._backward(m)
        log_z = _logsumexp(alphas[-1])
        return np.exp(alphas + betas - log_z)

    def viterbi(
        self,
        xseq: FeatureSeq,
        transition_mask: np.ndarray | None = None,
        initial_mask: np.ndarray | None = None,
    ) -> tuple[list[str], float]:
        """Highest-scoring labelling and its score.

        Ties break toward the lowest label index at every backtrace step.
        The optional masks are additive (0 or -inf) and let callers forbid
        transitions or initial labels.
        """
        if not xseq:
            raise ValueError("empty input sequence")
        m = self.emission_matrix(xseq)
        trans = self.transitions if transition_mask is None else self.transitions + transition_mask
        delta = m[0] if initial_mask is None else m[0] + initial_mask
        n = m.shape[0]
        back = np.zeros((n, self.num_labels), dtype=np.intp)
        for t in range(1, n):
            cand = delta[:, None] + trans
            back[t] = np.argmax(cand, axis=0)
            delta = m[t] + np.max(cand, axis=0)
        last = int(np.argmax(delta))
        best = float(delta[last])
        path = [last]
        for t in range(n - 1, 0, -1):
            path.append(int(back[t, path[-1]]))
        path.reverse()
        return [self.label_set[i] for i in path], best


@dataclass
class TrainConfig:
    """Optimizer settings.

    ``batch_size is None`` selects deterministic full-batch ascent with step
    halving; an integer selects seeded mini-batch ascent with the learning
    rate decayed as ``learning_rate / (1 + decay * epoch)``.
    """

    l2: float = 1e-3
    learning_rate: float = 1.0
    decay: float = 0.0
    epochs: int = 50
    batch_size: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ValueError("l2 must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


@dataclass
class _Encoded:
    """One training sentence with features interned and labels indexed."""

    flat_ids: np.ndarray  # all active feature ids, positions concatenated
    pos_of_id: np.ndarray  # position index for each entry of flat_ids
    splits: np.ndarray  # start offset of each position within flat_ids
    y: np.ndarray


def _encode(
    data: Sequence[tuple[FeatureSeq, Sequence[str]]],
    label_set: LabelSet,
) -> tuple[dict[str, int], list[_Encoded]]:
    index: dict[str, int] = {}
    encoded: list[_Encoded] = []
    for xseq, yseq in data:
        if len(xseq) != len(yseq):
            raise ValueError("feature/label sequence lengths differ")
        if not xseq:
            raise ValueError("empty training sentence")
        flat: list[int] = []
        pos: list[int] = []
        splits: list[int] = []
        for t, feats in enumerate(xseq):
            splits.append(len(flat))
            for f in feats:
                fid = index.get(f)
                if fid is None:
                    fid = index[f] = len(index)
                flat.append(fid)
            pos.extend([t] * len(feats))
            if splits[-1] == len(flat):
                raise ValueError(f"no features at position {t}")
        y = np.array([label_set.index(l) for l in yseq], dtype=np.intp)
        encoded.append(
            _Encoded(
                np.array(flat, dtype=np.intp),
                np.array(pos, dtype=np.intp),
                np.array(splits, dtype=np.intp),
                y,
            )
        )
    return index, encoded


def _empirical_counts(
    encoded: Sequence[_Encoded], num_features: int, num_labels: int
) -> tuple[np.ndarray, np.ndarray]:
    emp_e = np.zeros((num_features, num_labels))
    emp_t = np.zeros((num_labels, num_labels))
    for s in encoded:
        np.add.at(emp_e, (s.flat_ids, s.y[s.pos_of_id]), 1.0)
        if len(s.y) > 1:
            np.add.at(emp_t, (s.y[:-1], s.y[1:]), 1.0)
    return emp_e, emp_t


def _eval_batch(
    emissions: np.ndarray,
    transitions: np.ndarray,
    encoded: Sequence[_Encoded],
    emp_e: np.ndarray,
    emp_t: np.ndarray,
    l2: float,
    scale: int,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Penalized mean log-likelihood over ``encoded`` and its gradient.

    ``scale`` is the sentence count used as the averaging denominator,
    which lets mini-batches reuse the same routine.
    """
    grad_e = emp_e.copy()
    grad_t = emp_t.copy()
    ll = 0.0
    k = transitions.shape[0]
    for s in encoded:
        n = len(s.y)
        m = np.add.reduceat(emissions[s.flat_ids], s.splits, axis=0)
        alphas = np.empty_like(m)
        alphas[0] = m[0]
        for t in range(1, n):
            alphas[t] = m[t] + _logsumexp(alphas[t - 1][:, None] + transitions, axis=0)
        betas = np.empty_like(m)
        betas[-1] = 0.0
        for t in range(n - 2, -1, -1):
            betas[t] = _logsumexp(transitions + (m[t + 1] + betas[t + 1])[None, :], axis=1)
        log_z = _logsumexp(alphas[-1])
        gold = float(m[np.arange(n), s.y].sum())
        if n > 1:
            gold += float(transitions[s.y[:-1], s.y[1:]].sum())
        ll += gold - log_z
        marg = np.exp(alphas + betas - log_z)
        np.add.at(grad_e, s.flat_ids, -marg[s.pos_of_id])
        if n > 1:
            pair = np.exp(
                alphas[:-1, :, None]
                + transitions[None, :, :]
                + (m[1:] + betas[1:])[:, None, :]
                - log_z
            )
            grad_t -= pair.sum(axis=0)
    obj = ll / scale - 0.5 * l2 * (float(np.sum(emissions**2)) + float(np.sum(transitions**2)))
    grad_e = grad_e / scale - l2 * emissions
    grad_t = grad_t / scale - l2 * transitions
    return obj, grad_e, grad_t


def objective_and_gradient(
    model: CrfModel,
    data: Sequence[tuple[FeatureSeq, Sequence[str]]],
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Penalized mean log-likelihood of ``data`` under ``model``, with its
    gradient w.r.t. the emission and transition tables.

    Features absent from the model are ignored, matching decode behaviour.
    """
    if not data:
        raise ValueError("no data")
    encoded: list[_Encoded] = []
    for xseq, yseq in data:
        flat: list[int] = []
        pos: list[int] = []
        splits: list[int] = []
        for t, feats in enumerate(xseq):
            splits.append(len(flat))
            ids = model.feature_ids(feats)
            flat.extend(int(i) for i in ids)
            pos.extend([t] * ids.size)
        encoded.append(
            _Encoded(
                np.array(flat, dtype=np.intp),
                np.array(pos, dtype=np.intp),
                np.array(splits, dtype=np.intp),
                np.array([model.label_set.index(l) for l in yseq], dtype=np.intp),
            )
        )
    emp_e, emp_t = _empirical_counts(encoded, model.num_features, model.num_labels)
    return _eval_batch(
        model.emissions, model.transitions, encoded, emp_e, emp_t, l2, len(encoded)
    )


def train(
    data: Sequence[tuple[FeatureSeq, Sequence[str]]],
    label_set: LabelSet,
    templates: FeatureTemplate,
    config: TrainConfig | None = None,
) -> tuple[CrfModel, list[float]]:
    """Fit weights on ``(features, labels)`` pairs.

    Returns the trained model and the objective trace: the penalized mean
    log-likelihood before training and after each epoch. In full-batch mode
    the trace is non-decreasing by construction.
    """
    config = config or TrainConfig()
    if not data:
        raise ValueError("no training data")
    index, encoded = _encode(data, label_set)
    nf, k = len(index), len(label_set)
    emissions = np.zeros((nf, k))
    transitions = np.zeros((k, k))
    if config.batch_size is None:
        trace = _train_full_batch(emissions, transitions, encoded, config)
    else:
        trace = _train_mini_batch(emissions, transitions, encoded, config)
    model = CrfModel(label_set, templates, index, emissions, transitions)
    return model, trace


def _train_full_batch(
    emissions: np.ndarray,
    transitions: np.ndarray,
    encoded: list[_Encoded],
    config: TrainConfig,
) -> list[float]:
    n = len(encoded)
    emp_e, emp_t = _empirical_counts(encoded, emissions.shape[0], transitions.shape[1])
    obj, grad_e, grad_t = _eval_batch(
        emissions, transitions, encoded, emp_e, emp_t, config.l2, n
    )
    trace = [obj]
    lr = config.learning_rate
    for _ in range(config.epochs):
        stepped = False
        for _ in range(60):
            cand_e = emissions + lr * grad_e
            cand_t = transitions + lr * grad_t
            cand_obj, cand_ge, cand_gt = _eval_batch(
                cand_e, cand_t, encoded, emp_e, emp_t, config.l2, n
            )
            if cand_obj >= obj:
                emissions[...] = cand_e
                transitions[...] = cand_t
                obj, grad_e, grad_t = cand_obj, cand_ge, cand_gt
                stepped = True
                break
            lr *= 0.5
        if not stepped:
            break
        trace.append(obj)
        lr *= 1.3
    return trace


def _train_mini_batch(
    emissions: np.ndarray,
    transitions: np.ndarray,
    encoded: list[_Encoded],
    config: TrainConfig,
) -> list[float]:
    n = len(encoded)
    bs = config.batch_size or n
    rng = random.Random(config.seed)
    order = list(range(n))
    emp_all_e, emp_all_t = _empirical_counts(encoded, emissions.shape[0], transitions.shape[1])
    obj, _, _ = _eval_batch(emissions, transitions, encoded, emp_all_e, emp_all_t, config.l2, n)
    trace = [obj]
    for epoch in range(config.epochs):
        rng.shuffle(order)
        lr = config.learning_rate / (1.0 + config.decay * epoch)
        for start in range(0, n, bs):
            batch = [encoded[i] for i in order[start : start + bs]]
            emp_e, emp_t = _empirical_counts(batch, emissions.shape[0], transitions.shape[1])
            _, grad_e, grad_t = _eval_batch(
                emissions, transitions, batch, emp_e, emp_t, config.l2, len(batch)
            )
            emissions += lr * grad_e
            transitions += lr * grad_t
        obj, _, _ = _eval_batch(
            emissions, transitions, encoded, emp_all_e, emp_all_t, config.l2, n
        )
        trace.append(obj)
    return trace


_CORE_KEYS = {"format_version", "labels", "templates", "transitions", "emissions"}


def model_to_dict(model: CrfModel, header: dict | None = None) -> dict:
    """Canonical JSON-ready form: emissions sorted by (feature, label index),
    zero weights omitted, transitions row-major."""
    emissions = []
    for feat, fid in model._feature_index.items():
        row = model.emissions[fid]
        for k in range(model.num_labels):
            w = float(row[k])
            if w != 0.0:
                emissions.append([feat, k, w])
    emissions.sort(key=lambda e: (e[0], e[1]))
    d: dict = {
        "format_version": CrfModel.FORMAT_VERSION,
        "labels": list(model.label_set.labels),
        "templates": model.templates.to_dict(),
        "transitions": [[float(w) for w in row] for row in model.transitions],
        "emissions": emissions,
    }
    if header:
        clash = _CORE_KEYS.intersection(header)
        if clash:
            raise ValueError(f"header keys collide with model keys: {sorted(clash)}")
        d.update(header)
    return d


def model_from_dict(d: dict) -> tuple[CrfModel, dict]:
    """Inverse of :func:`model_to_dict`; returns the model and header extras."""
    version = d.get("format_version")
    if version != CrfModel.FORMAT_VERSION:
        raise ValueError(f"unsupported model format version: {version!r}")
    label_set = LabelSet(tuple(d["labels"]))
    templates = FeatureTemplate.from_dict(d["templates"])
    k = len(label_set)
    index: dict[str, int] = {}
    for feat, _, _ in d["emissions"]:
        if feat not in index:
            index[feat] = len(index)
    emissions = np.zeros((len(index), k))
    for feat, label_i, w in d["emissions"]:
        if not 0 <= label_i < k:
            raise ValueError(f"emission label index out of range: {label_i}")
        emissions[index[feat], label_i] = w
    transitions = np.array(d["transitions"], dtype=np.float64)
    model = CrfModel(label_set, templates, index, emissions, transitions)
    extras = {k2: v for k2, v in d.items() if k2 not in _CORE_KEYS}
    return model, extras


def save_model(model: CrfModel, path: str, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model, header), f, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def load_model(path: str) -> tuple[CrfModel, dict]:
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))
