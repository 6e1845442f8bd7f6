"""Run the model cascade in both directions.

Decoding composes an observed glyph string with each model inverted, stage by
stage, trimming dead states as it goes; the surviving word lattice scores
phonetic fit only.  Rescoring then composes that lattice with the unigram
word model and extracts the k cheapest paths, which is where *masters tone am
ent awe* loses to *masters tournament*.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fsm import (
    SymbolTable,
    Wfst,
    best_path,
    compose,
    invert,
    k_best,
    linear_acceptor,
    project_output,
    prob_of,
    trim,
)
from .models import (
    ConfusionTable,
    KatakanaSpellingTable,
    ModelBuildError,
    PronunciationLexicon,
    SoundMappingTable,
    UnigramLexicon,
    build_katakana_writer,
    build_ocr_model,
    build_pronouncer,
    build_sound_mapper,
    build_word_model,
    english_phoneme_table,
    japanese_sound_table,
)


@dataclass
class DecodeOptions:
    k: int = 5
    use_ocr: bool = False
    name_mode: bool = False
    dedupe_outputs: bool = True


@dataclass
class Candidate:
    words: tuple[str, ...]
    cost: float

    @property
    def probability(self) -> float:
        return prob_of(self.cost)


@dataclass
class ModelSet:
    """The five distributions plus their shared alphabets.

    ``reader`` is the katakana writer inverted once up front, since every
    decode needs it.
    """

    word_model: Wfst
    pronouncer: Wfst
    sound_mapper: Wfst
    katakana_writer: Wfst
    ocr_model: Wfst | None = None
    name_model: Wfst | None = None
    reader: Wfst = field(init=False)

    def __post_init__(self):
        chain = [
            ("word model", "pronouncer", self.word_model.osyms, self.pronouncer.isyms),
            ("pronouncer", "sound mapper", self.pronouncer.osyms, self.sound_mapper.isyms),
            ("sound mapper", "katakana writer", self.sound_mapper.osyms,
             self.katakana_writer.isyms),
        ]
        if self.ocr_model is not None:
            chain.append(("katakana writer", "ocr model", self.katakana_writer.osyms,
                          self.ocr_model.isyms))
        for left, right, out_table, in_table in chain:
            if out_table != in_table:
                raise ModelBuildError(
                    f"alphabet mismatch between {left} output and {right} input"
                )
        if self.name_model is not None and self.name_model.isyms != self.word_model.isyms:
            raise ModelBuildError("name model must share the word alphabet")
        self.reader = invert(self.katakana_writer)

    @property
    def word_table(self) -> SymbolTable:
        return self.word_model.isyms

    @property
    def phoneme_table(self) -> SymbolTable:
        return self.pronouncer.osyms

    @property
    def sound_table(self) -> SymbolTable:
        return self.sound_mapper.osyms

    @property
    def glyph_table(self) -> SymbolTable:
        return self.katakana_writer.osyms

    @classmethod
    def build(cls, counts: dict[str, int], plex: PronunciationLexicon,
              mapping: SoundMappingTable, spelling: KatakanaSpellingTable,
              stoplist: set[str] | None = None, lexicon_limit: int | None = None,
              name_counts: dict[str, int] | None = None,
              confusion: ConfusionTable | None = None) -> "ModelSet":
        """Assemble a model set from loaded resources over shared symbol tables.

        Frequency entries without a pronunciation cannot take part in any
        decode, so they are dropped before normalizing.
        """
        word_table = SymbolTable.from_labels(plex.words(), name="words")
        phoneme_table = english_phoneme_table()
        sound_table = japanese_sound_table()

        pronounceable = {w: c for w, c in counts.items() if w in plex.prons}
        if not pronounceable:
            raise ModelBuildError("no frequency-list word has a pronunciation")
        lexicon = UnigramLexicon.from_counts(pronounceable, stoplist=stoplist,
                                             limit=lexicon_limit)
        word_model = build_word_model(lexicon, table=word_table)

        name_model = None
        if name_counts is not None:
            name_counts = {w: c for w, c in name_counts.items() if w in plex.prons}
            name_lexicon = UnigramLexicon.from_counts(name_counts, stoplist=stoplist)
            name_model = build_word_model(name_lexicon, table=word_table)

        pronouncer = build_pronouncer(plex, word_table=word_table,
                                      phoneme_table=phoneme_table)
        sound_mapper = build_sound_mapper(mapping, phoneme_table=phoneme_table,
                                          sound_table=sound_table)
        writer = build_katakana_writer(spelling, sound_table=sound_table)

        ocr_model = None
        if confusion is not None:
            ocr_model = build_ocr_model(confusion, writer.osyms)

        return cls(word_model=word_model, pronouncer=pronouncer,
                   sound_mapper=sound_mapper, katakana_writer=writer,
                   ocr_model=ocr_model, name_model=name_model)


def phonetic_candidates(observed: list[str], models: ModelSet,
                        opts: DecodeOptions | None = None) -> Wfst:
    """Word acceptor scoring phonetic fit only (the pre-rescoring lattice)."""
    opts = opts or DecodeOptions()
    lattice = linear_acceptor(observed, models.glyph_table)
    if opts.use_ocr:
        if models.ocr_model is None:
            raise ModelBuildError("decode requested the OCR model but none is loaded")
        lattice = trim(compose(lattice, invert(models.ocr_model)))
    lattice = trim(compose(lattice, models.reader))
    lattice = trim(compose(lattice, invert(models.sound_mapper)))
    lattice = trim(compose(lattice, invert(models.pronouncer)))
    return project_output(lattice)


def back_transliterate(observed: list[str], models: ModelSet,
                       opts: DecodeOptions | None = None) -> list[Candidate]:
    """Ranked English candidates for an observed katakana glyph sequence."""
    opts = opts or DecodeOptions()
    lattice = phonetic_candidates(observed, models, opts)
    scorer = models.name_model if opts.name_mode else models.word_model
    if opts.name_mode and scorer is None:
        raise ModelBuildError("decode requested name mode but no name model is loaded")
    rescored = trim(compose(lattice, scorer))
    paths = k_best(rescored, opts.k, dedupe_outputs=opts.dedupe_outputs)
    return [Candidate(words=p.output_labels, cost=p.total_cost) for p in paths]


@dataclass
class FallbackAnalysis:
    """Best-effort phonetic reading for inputs the lexicon cannot cover."""

    sounds: tuple[str, ...] | None
    phonemes: tuple[str, ...] | None


def fallback_analysis(observed: list[str], models: ModelSet,
                      opts: DecodeOptions | None = None) -> FallbackAnalysis:
    opts = opts or DecodeOptions()
    lattice = linear_acceptor(observed, models.glyph_table)
    if opts.use_ocr and models.ocr_model is not None:
        lattice = trim(compose(lattice, invert(models.ocr_model)))
    sound_lattice = trim(compose(lattice, models.reader))
    sounds = best_path(sound_lattice)
    if sounds is None:
        return FallbackAnalysis(sounds=None, phonemes=None)
    phoneme_lattice = trim(compose(sound_lattice, invert(models.sound_mapper)))
    phonemes = best_path(phoneme_lattice)
    return FallbackAnalysis(
        sounds=sounds.output_labels,
        phonemes=phonemes.output_labels if phonemes else None,
    )


def transliterate_forward(words: list[str], models: ModelSet) -> tuple[str, ...]:
    """Best katakana spelling of an English word sequence (the generative chain)."""
    machine = linear_acceptor(words, models.word_table)
    machine = trim(compose(machine, models.pronouncer))
    machine = trim(compose(machine, models.sound_mapper))
    machine = trim(compose(machine, models.katakana_writer))
    path = best_path(machine)
    if path is None:
        raise ModelBuildError(f"no spelling found for {' '.join(words)!r}")
    return path.output_labels
