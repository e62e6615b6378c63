"""Deterministic synthetic Vietnamese-style corpus with entity annotations.

Stands in for annotated newswire that cannot ship with the package:
templated sentences are filled from person, organization, and location
gazetteers. Ambiguity is deliberate. Many name syllables ("nam", "mai",
"lan", "bình", ...) also occur as ordinary lowercase words, organizations
embed location names, and persons are composed combinatorially so held-out
documents contain unseen full names. Capitalization therefore carries real
information: strip it and entity decisions genuinely get harder, which is
the regime the pipeline's formatting-recovery stage is meant to help in.
"""

from __future__ import annotations

import random
from typing import Iterable

from .capu import _apply_case
from .tokens import CaseClass, Document, Punct, Sentence, Token

FAMILY_NAMES = (
    "nguyễn", "trần", "lê", "phạm", "hoàng", "phan", "vũ", "đặng",
    "bùi", "đỗ", "hồ", "ngô", "dương", "lý",
)
MIDDLE_NAMES = ("văn", "thị", "đức", "minh", "quang", "hữu", "thanh", "công")
GIVEN_NAMES = (
    "an", "bình", "châu", "dũng", "giang", "hà", "hùng", "khánh", "lan",
    "long", "mai", "nam", "phúc", "quân", "sơn", "tâm", "tuấn", "việt",
    "yến", "hoa",
)

PROVINCES = (
    "hà nội", "đà nẵng", "cần thơ", "hải phòng", "việt nam", "huế",
    "nha trang", "đà lạt", "vũng tàu", "quảng ninh", "thanh hóa",
    "nghệ an", "bắc giang", "long an", "bình dương", "sơn la", "hà giang",
    "lào cai", "an giang", "tây ninh", "kiên giang", "đồng nai", "gia lai",
    "bến tre", "hòa bình", "nam định",
)

ORG_HEADS = ("đại học", "công ty", "tập đoàn", "ngân hàng", "viện", "sở", "bộ")
ORG_BRANDS = (
    "hòa phát", "sông đà", "thành công", "đại nam", "tiên phong",
    "bảo việt", "rạng đông", "an phú", "kim long", "hoa sen",
    "bình minh", "trường giang", "hòa bình", "gia lai",
)

# Entity-bearing sentence templates. {P} full person, {G} bare given name,
# {O} organization, {L} location; "," and "." attach to the previous word.
ENTITY_TEMPLATES = (
    "ông {P} vừa đến {L} chiều qua .",
    "bà {P} đang làm việc tại {O} .",
    "theo {P} , {O} sẽ đầu tư vào {L} .",
    "{O} khai trương chi nhánh mới ở {L} .",
    "chủ tịch {O} là ông {P} .",
    "hôm nay {P} thăm {L} , sau đó về {L} .",
    "đoàn công tác của {O} đã tới {L} .",
    "{P} sinh ra ở {L} và lớn lên tại {L} .",
    "{O} hợp tác với {O} từ năm ngoái .",
    "người dân {L} chào đón ông {P} .",
    "{P} phát biểu tại hội nghị của {O} ở {L} .",
    "giám đốc {O} vừa thăm nhà máy ở {L} .",
    "bà {P} và ông {P} cùng ghé thăm {O} .",
    "trụ sở của {O} nằm ở {L} .",
    "sáng mai {G} sẽ đến thăm vườn cây của bà .",
    "ngôi nhà của {G} nằm cạnh bờ sông .",
    "cuối tuần {G} về quê thăm gia đình .",
    "chiều nay {G} ghé qua chợ mua hoa .",
    "món quà của {G} làm cả nhà vui .",
    "chuyến đi của {G} tới {L} kéo dài ba ngày .",
    "hội thảo do {O} tổ chức diễn ra tại {L} .",
    "ông {P} từng học ở {O} .",
    "cổ phiếu {B} tăng mạnh trong phiên sáng .",
    "nhà máy của {B} chạy hết công suất dịp này .",
)

# Entity-free templates that reuse name syllables as ordinary words, in
# contexts overlapping the possessive/motion patterns above.
PLAIN_TEMPLATES = (
    "ngày mai trời sẽ nắng ở miền nam .",
    "hoa mai nở vàng khắp vùng núi phía bắc .",
    "cuộc sống của người dân rất bình an .",
    "giá sơn và vật liệu xây dựng tăng cao .",
    "đàn chim việt bay về phương nam tránh rét .",
    "vườn lan của bà nở rộ trước sân .",
    "hương thơm của hoa lan tỏa khắp vườn .",
    "mùa xuân cây cối đâm chồi xanh tươi .",
    "tâm trạng của mọi người đều vui vẻ .",
    "bức tranh rồng long lanh treo giữa nhà .",
    "con đường ven sông dài và đẹp .",
    "ngọn núi cao che khuất ánh nắng chiều .",
    "cơn mưa kéo về vùng núi lúc chiều .",
    "bến sông chiều nay vắng bóng thuyền .",
    "phiên chợ quê bày bán đủ loại hoa quả .",
    "cánh đồng lúa chín vàng trải dài tới chân trời .",
    "giọng hát thanh thoát vang lên giữa đêm hội .",
    "trận đấu diễn ra sôi nổi và hấp dẫn .",
    "chén trà nóng làm ấm lòng người đi xa .",
    "đàn cá tung tăng bơi lội dưới ao .",
)

# Overall share of sentences drawn from the entity-free template pool.
PLAIN_SHARE = 0.3


def _cap(word: str) -> str:
    return _apply_case(word, CaseClass.CAP_FIRST)


class _Piece:
    __slots__ = ("word", "cap", "tag")

    def __init__(self, word: str, cap: bool, tag: str):
        self.word = word
        self.cap = cap
        self.tag = tag


def _person(rng: random.Random) -> list[_Piece]:
    words = [rng.choice(FAMILY_NAMES)]
    if rng.random() < 0.7:
        words.append(rng.choice(MIDDLE_NAMES))
    words.append(rng.choice(GIVEN_NAMES))
    return [_Piece(w, True, "B-PER" if i == 0 else "I-PER") for i, w in enumerate(words)]


def _given(rng: random.Random) -> list[_Piece]:
    return [_Piece(rng.choice(GIVEN_NAMES), True, "B-PER")]


def _location(rng: random.Random) -> list[_Piece]:
    words = rng.choice(PROVINCES).split()
    return [_Piece(w, True, "B-LOC" if i == 0 else "I-LOC") for i, w in enumerate(words)]


def _org(rng: random.Random) -> list[_Piece]:
    head = rng.choice(ORG_HEADS).split()
    tail = rng.choice(PROVINCES + ORG_BRANDS).split()
    pieces = [_Piece(w, i == 0, "B-ORG" if i == 0 else "I-ORG") for i, w in enumerate(head)]
    pieces += [_Piece(w, True, "I-ORG") for w in tail]
    return pieces


def _brand(rng: random.Random) -> list[_Piece]:
    # bare brand mention; some brands collide with province names, so the
    # ORG/LOC decision genuinely needs context
    words = rng.choice(ORG_BRANDS).split()
    return [_Piece(w, True, "B-ORG" if i == 0 else "I-ORG") for i, w in enumerate(words)]


_FILLERS = {"{P}": _person, "{G}": _given, "{O}": _org, "{L}": _location, "{B}": _brand}


def _sentence(rng: random.Random) -> Sentence:
    if rng.random() < PLAIN_SHARE:
        template = rng.choice(PLAIN_TEMPLATES)
    else:
        template = rng.choice(ENTITY_TEMPLATES)
    pieces: list[_Piece] = []
    puncts: dict[int, Punct] = {}
    for part in template.split():
        if part in _FILLERS:
            pieces.extend(_FILLERS[part](rng))
        elif part in (",", "."):
            if not pieces:
                raise ValueError(f"template starts with a mark: {template!r}")
            puncts[len(pieces) - 1] = Punct.COMMA if part == "," else Punct.PERIOD
        else:
            pieces.append(_Piece(part, False, "O"))
    pieces[0].cap = True  # sentence-initial capitalization
    tokens = [
        Token.make(
            _cap(p.word) if p.cap else p.word, puncts.get(i, Punct.NONE)
        )
        for i, p in enumerate(pieces)
    ]
    return Sentence(tuple(tokens), tuple(p.tag for p in pieces))


def generate_documents(
    n_docs: int, seed: int, sentences_per_doc: tuple[int, int] = (3, 8)
) -> list[Document]:
    """Generate ``n_docs`` multi-sentence documents, deterministic per seed."""
    rng = random.Random(seed)
    lo, hi = sentences_per_doc
    docs = []
    for _ in range(n_docs):
        docs.append(Document(tuple(_sentence(rng) for _ in range(rng.randint(lo, hi)))))
    return docs


def generate_corpus(
    train_docs: int, test_docs: int, seed: int
) -> tuple[list[Document], list[Document]]:
    """A train/test pair drawn from one seeded stream, so test documents
    contain name combinations the training split never saw."""
    rng = random.Random(seed)
    lo, hi = 3, 8
    train = [
        Document(tuple(_sentence(rng) for _ in range(rng.randint(lo, hi))))
        for _ in range(train_docs)
    ]
    test = [
        Document(tuple(_sentence(rng) for _ in range(rng.randint(lo, hi))))
        for _ in range(test_docs)
    ]
    return train, test


def vocabulary(docs: Iterable[Document]) -> list[str]:
    """Sorted lowercase vocabulary of a document collection."""
    words = {t.surface.lower() for d in docs for t in d.tokens()}
    return sorted(words)
