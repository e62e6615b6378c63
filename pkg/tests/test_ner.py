import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from speechner.crf import CrfModel, FeatureTemplate, TrainConfig
from speechner.ner import (
    BIO_INITIAL_MASK,
    BIO_TRANSITION_MASK,
    NER_LABELS,
    NER_LABEL_SET,
    Entity,
    NerModel,
    decode_entities,
    entities_to_tags,
    repair_bio,
    sentence_features,
    split_sentences,
    train_ner,
    validate_bio,
)
from speechner.synthetic import generate_corpus
from speechner.tokens import Document, Punct, Sentence, Token, normalize_text
from speechner.evaluate import evaluate_pipeline
from speechner.tokens import strip_formatting


def test_validate_bio():
    assert validate_bio(["B-ORG", "I-ORG"]) == []
    assert validate_bio(["O", "I-PER"]) == [(1, "I-PER follows O")]
    assert validate_bio(["B-PER", "I-LOC"]) == [(1, "I-LOC follows B-PER")]
    assert validate_bio(["I-LOC"]) == [(0, "I-LOC follows O")]
    assert validate_bio(["B-PER", "I-PER", "O", "B-LOC"]) == []
    assert validate_bio(["B-GPE"])[0][0] == 0


def test_repair_bio():
    assert repair_bio(["I-LOC", "I-LOC"]) == ["B-LOC", "I-LOC"]
    assert repair_bio(["O", "I-PER"]) == ["O", "B-PER"]
    assert repair_bio(["B-PER", "I-LOC"]) == ["B-PER", "B-LOC"]
    assert repair_bio(["B-ORG", "I-ORG"]) == ["B-ORG", "I-ORG"]


def test_decode_entities():
    assert decode_entities(["B-PER", "I-PER", "O"]) == [Entity("PER", 0, 2)]
    assert decode_entities(["O", "O"]) == []
    assert decode_entities(["I-LOC", "I-LOC"]) == [Entity("LOC", 0, 2)]
    assert decode_entities(["B-PER", "B-PER"]) == [Entity("PER", 0, 1), Entity("PER", 1, 2)]
    assert decode_entities(["B-ORG", "I-ORG", "B-LOC"]) == [
        Entity("ORG", 0, 2),
        Entity("LOC", 2, 3),
    ]


def test_entities_to_tags_roundtrip():
    entities = [Entity("PER", 0, 2), Entity("LOC", 3, 4)]
    tags = entities_to_tags(entities, 5)
    assert tags == ["B-PER", "I-PER", "O", "B-LOC", "O"]
    assert decode_entities(tags) == entities
    with pytest.raises(ValueError):
        entities_to_tags([Entity("PER", 0, 2), Entity("LOC", 1, 3)], 4)


@st.composite
def entity_lists(draw):
    length = draw(st.integers(1, 12))
    entities = []
    pos = 0
    while pos < length:
        if draw(st.booleans()):
            end = draw(st.integers(pos + 1, length))
            entities.append(Entity(draw(st.sampled_from(["PER", "ORG", "LOC"])), pos, end))
            pos = end
        else:
            pos += 1
    return entities, length


@given(entity_lists())
def test_decode_render_identity(case):
    entities, length = case
    assert decode_entities(entities_to_tags(entities, length)) == entities


def _random_ner_model(rng):
    feats = [f"w0={c}" for c in "abcdef"] + ["bos", "eos"]
    index = {f: i for i, f in enumerate(feats)}
    emissions = np.array(
        [[rng.gauss(0, 2) for _ in NER_LABELS] for _ in feats]
    )
    transitions = np.array(
        [[rng.gauss(0, 2) for _ in NER_LABELS] for _ in NER_LABELS]
    )
    crf = CrfModel(NER_LABEL_SET, FeatureTemplate(), index, emissions, transitions)
    return NerModel(crf)


def test_masked_decode_always_strict_bio():
    rng = random.Random(0)
    for _ in range(60):
        model = _random_ner_model(rng)
        tokens = [Token.make(rng.choice("abcdef")) for _ in range(rng.randint(1, 9))]
        tags = model.tag(tokens)
        assert validate_bio(tags) == []


def test_zero_model_tags_all_o():
    crf = CrfModel.zeros(NER_LABEL_SET, FeatureTemplate(), features=["x"])
    model = NerModel(crf)
    assert model.tag([Token.make("a"), Token.make("b")]) == ["O", "O"]


def test_tag_empty_rejected():
    crf = CrfModel.zeros(NER_LABEL_SET, FeatureTemplate(), features=["x"])
    with pytest.raises(ValueError):
        NerModel(crf).tag([])


def test_split_sentences():
    tokens = normalize_text("Anh về Hà Nội. Chị ở Huế. rồi sao")
    pieces = split_sentences(tokens)
    assert [len(p) for p in pieces] == [4, 3, 2]
    assert pieces[0][-1].punct_after is Punct.PERIOD
    assert split_sentences([]) == []


def _doc(text, tags):
    tokens = normalize_text(text)
    return Document((Sentence(tuple(tokens), tuple(tags)),))


def test_train_ner_rejects_invalid_bio():
    doc = _doc("xin chào", ["O", "I-PER"])
    with pytest.raises(ValueError) as exc:
        train_ner([doc], TrainConfig(epochs=1))
    assert "document 0, sentence 0" in str(exc.value)
    assert "position 1" in str(exc.value)


def test_train_ner_requires_tags():
    doc = Document((Sentence(tuple(normalize_text("xin chào")), None),))
    with pytest.raises(ValueError):
        train_ner([doc], TrainConfig(epochs=1))


def test_train_ner_memorizes_sentence():
    doc = _doc("ông Nam thăm Hà Nội.", ["O", "B-PER", "O", "B-LOC", "I-LOC"])
    model, trace = train_ner([doc] * 4, TrainConfig(epochs=60, l2=1e-4))
    assert model.tag(list(doc.sentences[0].tokens)) == list(doc.sentences[0].tags)
    assert all(a <= b + 1e-12 for a, b in zip(trace, trace[1:]))


def test_trained_model_tags_seen_location():
    train_docs, _ = generate_corpus(40, 0, seed=3)
    model, _ = train_ner(train_docs, TrainConfig(epochs=25))
    sent = "ông Trần Văn Nam vừa đến Hà Nội chiều qua."
    tags = model.tag(normalize_text(sent))
    assert tags[6:8] == ["B-LOC", "I-LOC"]
    assert tags[1:4] == ["B-PER", "I-PER", "I-PER"]


def test_gazetteer_f1_on_held_out_split():
    train_docs, test_docs = generate_corpus(100, 25, seed=11)
    assert sum(len(d.sentences) for d in train_docs) >= 500
    model, _ = train_ner(train_docs, TrainConfig(epochs=35))
    hyp_tokens = [strip_formatting(d.tokens()) for d in test_docs]
    hyp_tags = [
        [t for s in d.sentences for t in model.tag(list(s.tokens))] for d in test_docs
    ]
    report = evaluate_pipeline(test_docs, hyp_tokens, hyp_tags)
    assert report.micro.f1 >= 0.90


def test_formatting_features_beat_ablation():
    train_docs, test_docs = generate_corpus(80, 20, seed=5)
    with_fmt, _ = train_ner(train_docs, TrainConfig(epochs=30))
    without_fmt, _ = train_ner(train_docs, TrainConfig(epochs=30), formatting_features=False)

    def macro_f1(model):
        hyp_tokens = [strip_formatting(d.tokens()) for d in test_docs]
        hyp_tags = [
            [t for s in d.sentences for t in model.tag(list(s.tokens))] for d in test_docs
        ]
        report = evaluate_pipeline(test_docs, hyp_tokens, hyp_tags)
        return sum(c.f1 for c in report.per_type.values()) / len(report.per_type)

    assert macro_f1(with_fmt) > macro_f1(without_fmt)


def test_sentence_features_formatting_toggle():
    tokens = normalize_text("Hà Nội đẹp.")
    with_fmt = sentence_features(tokens, formatting=True)
    without_fmt = sentence_features(tokens, formatting=False)
    assert any(f.startswith("case0=") for f in with_fmt[0])
    assert any(f.startswith("punct0=") for f in with_fmt[2])
    assert not any(f.startswith(("case", "punct")) for feats in without_fmt for f in feats)
    # identity features are over lowercased surfaces either way
    assert "w0=hà" in with_fmt[0] and "w0=hà" in without_fmt[0]


def test_masks_shape():
    assert BIO_TRANSITION_MASK.shape == (7, 7)
    i_per = NER_LABELS.index("I-PER")
    assert BIO_TRANSITION_MASK[NER_LABELS.index("O"), i_per] == -np.inf
    assert BIO_TRANSITION_MASK[NER_LABELS.index("B-PER"), i_per] == 0
    assert BIO_TRANSITION_MASK[NER_LABELS.index("B-LOC"), i_per] == -np.inf
    assert BIO_INITIAL_MASK[i_per] == -np.inf
    assert BIO_INITIAL_MASK[NER_LABELS.index("O")] == 0


def test_save_load_roundtrip(tmp_path):
    train_docs, _ = generate_corpus(10, 0, seed=1)
    model, _ = train_ner(train_docs, TrainConfig(epochs=5), formatting_features=True)
    path = str(tmp_path / "ner.json")
    model.save(path)
    loaded = NerModel.load(path)
    sent = list(train_docs[0].sentences[0].tokens)
    assert loaded.tag(sent) == model.tag(sent)
    assert loaded.formatting_features is True
