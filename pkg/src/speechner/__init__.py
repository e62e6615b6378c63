"""Speech-to-entities toolkit.

ASR-style word streams carry no capitalization or sentence marks, which
cripples downstream entity tagging. This package provides the pieces of a
pipeline that deals with it: a formatting-recovery tagger driven through
overlapping chunks so endless streams can be processed, a BIO entity
tagger over a shared linear-chain CRF, a seeded word-error simulator, and
alignment-based scoring that projects hypothesis tags onto the reference
before computing entity F1.
"""

from .asr_sim import CorruptionTrace, ErrorProfile, corrupt
from .capu import (
    CAPU_LABELS,
    CapuLabel,
    CapuModel,
    CapuSample,
    decode_labels,
    encode_labels,
    train_capu,
)
from .chunks import Chunk, ChunkConfig, format_chunks, merge_chunks, split_chunks, stream_format
from .corpus import ParseError, conll_to_string, convert_nested_xml, read_conll, segment_corpus, write_conll
from .crf import CrfModel, FeatureTemplate, LabelSet, TrainConfig, extract_features, train
from .evaluate import (
    AlignmentOp,
    EvalReport,
    PrfCounts,
    align,
    capu_confusion,
    edit_distance,
    entity_prf,
    evaluate_pipeline,
    project_tags,
    wer,
)
from .ner import (
    Entity,
    NerModel,
    decode_entities,
    entities_to_tags,
    repair_bio,
    train_ner,
    validate_bio,
)
from .synthetic import generate_corpus, generate_documents, vocabulary
from .tokens import (
    CaseClass,
    Document,
    Punct,
    Sentence,
    Token,
    classify_case,
    normalize_text,
    render_text,
    strip_formatting,
)

__version__ = "0.1.0"
