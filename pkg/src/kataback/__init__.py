"""Katakana back-transliteration with weighted finite-state transducer cascades.

A five-model noisy channel turns observed katakana into ranked English: a
unigram word model, a word-to-phoneme pronouncer, a phoneme-to-Japanese-sound
channel (EM-trained from glossary data), a sound-to-katakana writer, and an
optional OCR confusion model.  Decoding composes the observation with each
model inverted and extracts the cheapest paths.
"""

from .decode import (
    Candidate,
    DecodeOptions,
    ModelSet,
    back_transliterate,
    fallback_analysis,
    phonetic_candidates,
    transliterate_forward,
)
from .fsm import (
    EPSILON,
    AlphabetMismatchError,
    Arc,
    KatabackError,
    Path,
    SymbolTable,
    UnknownSymbolError,
    Wfst,
    best_path,
    compose,
    cost_of,
    invert,
    k_best,
    linear_acceptor,
    load_fsm,
    prob_of,
    project_output,
    save_fsm,
    trim,
)
from .models import (
    ENGLISH_PHONEMES,
    JAPANESE_SOUNDS,
    ConfusionTable,
    KatakanaSpellingTable,
    ModelBuildError,
    PronunciationLexicon,
    ResourceError,
    SoundMappingTable,
    UnigramLexicon,
    build_katakana_writer,
    build_ocr_model,
    build_pronouncer,
    build_sound_mapper,
    build_word_model,
)
from .training import (
    SoundPairCorpus,
    TrainingError,
    alignment_count,
    bootstrap_corpus,
    em_train,
    katakana_reader,
    run_em,
)

__version__ = "0.1.0"
