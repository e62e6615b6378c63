from collections import Counter

import pytest
from hypothesis import given, strategies as st

from speechner.tokens import (
    CaseClass,
    Punct,
    Sentence,
    Token,
    classify_case,
    normalization_summary,
    normalize_text,
    render_text,
    strip_formatting,
)

# Letters whose upper/lower round-trips cleanly, Vietnamese included.
SAFE_LOWER = (
    "abcdeghiklmnopqrstuvxy"
    "àáảãạăằắẳẵặâầấẩẫậđèéẻẽẹêềếểễệìíỉĩịòóỏõọôồốổỗộơờớởỡợ"
    "ùúủũụưừứửữựỳýỷỹỵ"
)


@pytest.mark.parametrize(
    "surface,expected",
    [
        ("việt", CaseClass.LOWER),
        ("Việt", CaseClass.CAP_FIRST),
        ("VIỆT", CaseClass.ALL_CAPS),
        ("ViỆt", CaseClass.MIXED),
        ("iPhone", CaseClass.MIXED),
        ("A", CaseClass.CAP_FIRST),
        ("AB", CaseClass.ALL_CAPS),
        ("123", CaseClass.LOWER),
        ("3G", CaseClass.CAP_FIRST),
        ("-", CaseClass.LOWER),
    ],
)
def test_classify_case(surface, expected):
    assert classify_case(surface) is expected


def test_normalize_detaches_marks_and_classes():
    tokens = normalize_text("Chính phủ Việt Nam.")
    assert [(t.surface, t.case_class, t.punct_after) for t in tokens] == [
        ("Chính", CaseClass.CAP_FIRST, Punct.NONE),
        ("phủ", CaseClass.LOWER, Punct.NONE),
        ("Việt", CaseClass.CAP_FIRST, Punct.NONE),
        ("Nam", CaseClass.CAP_FIRST, Punct.PERIOD),
    ]


def test_normalize_empty():
    assert normalize_text("") == []


def test_normalize_comma():
    tokens = normalize_text("a, b")
    assert [(t.surface, t.punct_after) for t in tokens] == [
        ("a", Punct.COMMA),
        ("b", Punct.NONE),
    ]


def test_normalize_strips_other_punctuation_and_counts():
    stripped = Counter()
    tokens = normalize_text('“Xin chào!” – nói.', stripped)
    assert [t.surface for t in tokens] == ["Xin", "chào", "nói"]
    assert tokens[1].punct_after is Punct.NONE
    assert tokens[2].punct_after is Punct.PERIOD
    assert stripped["!"] == 1
    assert stripped["“"] == 1
    assert stripped["”"] == 1
    assert stripped["–"] == 1


def test_normalize_orphan_mark_attaches_to_previous():
    tokens = normalize_text("chào . rồi")
    assert [(t.surface, t.punct_after) for t in tokens] == [
        ("chào", Punct.PERIOD),
        ("rồi", Punct.NONE),
    ]


def test_normalize_surplus_trailing_marks():
    stripped = Counter()
    tokens = normalize_text("vậy...", stripped)
    assert [(t.surface, t.punct_after) for t in tokens] == [("vậy", Punct.PERIOD)]
    assert stripped["."] == 2


def test_normalize_keeps_interior_marks():
    tokens = normalize_text("khoảng 3,5 km")
    assert [t.surface for t in tokens] == ["khoảng", "3,5", "km"]


def test_nfc_composition():
    # decomposed e + combining acute composes to a single code point
    tokens = normalize_text("lé")
    assert tokens[0].surface == "lé"


def test_strip_formatting():
    assert strip_formatting(normalize_text("Hà Nội, xin chào.")) == ["hà", "nội", "xin", "chào"]
    assert strip_formatting([Token.make("Việt", Punct.PERIOD)]) == ["việt"]
    assert strip_formatting([]) == []


def test_token_invariants():
    with pytest.raises(ValueError):
        Token.make("")
    with pytest.raises(ValueError):
        Token.make("a b")
    with pytest.raises(ValueError):
        Token.make("nam.")
    with pytest.raises(ValueError):
        Token("việt", CaseClass.CAP_FIRST)  # class not derivable from surface


def test_sentence_tag_length_checked():
    tok = Token.make("a")
    with pytest.raises(ValueError):
        Sentence((tok,), ("O", "O"))
    with pytest.raises(ValueError):
        Sentence(())


def test_summary_format():
    assert normalization_summary(Counter({"!": 2, '"': 1})) == '!\t2\n"\t1'


@st.composite
def formatted_text(draw):
    words = draw(
        st.lists(
            st.text(alphabet=SAFE_LOWER, min_size=1, max_size=8), min_size=1, max_size=12
        )
    )
    rendered = []
    for w in words:
        case = draw(st.sampled_from(["lower", "cap", "upper"]))
        if case == "cap":
            w = w[0].upper() + w[1:]
        elif case == "upper" and len(w) > 1:
            w = w.upper()
        rendered.append(w + draw(st.sampled_from(["", ",", "."])))
    return " ".join(rendered)


@given(formatted_text())
def test_roundtrip_canonical_text(text):
    # reassembly reproduces canonically typed text (marks attached, single spaces)
    tokens = normalize_text(text)
    assert render_text(tokens) == text


@given(formatted_text())
def test_tag_counts_preserved(text):
    tokens = normalize_text(text)
    assert len(strip_formatting(tokens)) == len(tokens)
