import math

import pytest

from kataback.fsm import (
    UnknownSymbolError,
    best_path,
    compose,
    invert,
    linear_acceptor,
    trim,
)
from kataback.decode import (
    DecodeOptions,
    back_transliterate,
    fallback_analysis,
    phonetic_candidates,
    transliterate_forward,
)
from kataback.models import ConfusionTable, build_ocr_model


def top1(models, phrase, **opts):
    candidates = back_transliterate(list(phrase), models, DecodeOptions(k=1, **opts))
    return " ".join(candidates[0].words) if candidates else None


# ---------------------------------------------------------------------------
# The newspaper examples


def test_earth_day(desk_models):
    assert top1(desk_models, "アースデー") == "earth day"


def test_robert_sean_leonard(desk_models):
    assert top1(desk_models, "ロバート・ショーン・レナード") == "robert sean leonard"


def test_masters_tournament(desk_models):
    assert top1(desk_models, "マスターズトーナメント") == "masters tournament"


def test_ice_cream_and_i_scream(desk_models):
    candidates = back_transliterate(list("アイスクリーム"), desk_models, DecodeOptions(k=5))
    answers = [" ".join(c.words) for c in candidates]
    assert answers[0] == "ice cream"
    assert "i scream" in answers


# ---------------------------------------------------------------------------
# Lattice behavior


def test_rescoring_changes_top1_but_answer_in_lattice(desk_models):
    lattice = phonetic_candidates(list("マスターズトーナメント"), desk_models)
    phonetic_best = best_path(lattice).output_labels
    assert " ".join(phonetic_best) != "masters tournament"
    probe = linear_acceptor(["masters", "tournament"], desk_models.word_table)
    assert best_path(compose(lattice, probe)) is not None


def test_phonetic_lattice_contains_forward_spelling(desk_models):
    glyphs = transliterate_forward(["hotel"], desk_models)
    lattice = phonetic_candidates(list("".join(glyphs)), desk_models)
    probe = linear_acceptor(["hotel"], desk_models.word_table)
    assert best_path(compose(lattice, probe)) is not None


def test_unknown_glyph_rejected(desk_models):
    with pytest.raises(UnknownSymbolError, match="漢"):
        phonetic_candidates(list("漢字"), desk_models)


def test_candidates_sorted_and_probability_consistent(desk_models):
    candidates = back_transliterate(list("コンピューター"), desk_models, DecodeOptions(k=5))
    assert candidates
    for first, second in zip(candidates, candidates[1:]):
        assert first.probability >= second.probability - 1e-15
    for cand in candidates:
        assert cand.probability * math.exp(cand.cost) == pytest.approx(1.0, abs=1e-9)


def test_staged_trim_equals_monolithic_composition(desk_models):
    glyphs = list("ゴルフボール")
    staged = phonetic_candidates(glyphs, desk_models)
    machine = linear_acceptor(glyphs, desk_models.glyph_table)
    machine = compose(machine, desk_models.reader)
    machine = compose(machine, invert(desk_models.sound_mapper))
    machine = compose(machine, invert(desk_models.pronouncer))
    assert best_path(machine).total_cost == pytest.approx(
        best_path(staged).total_cost, rel=1e-9)
    staged_scored = trim(compose(staged, desk_models.word_model))
    mono_scored = compose(machine, desk_models.word_model)
    assert best_path(mono_scored).total_cost == pytest.approx(
        best_path(staged_scored).total_cost, rel=1e-9)


def test_no_analysis_returns_empty_with_fallback(desk_models):
    # waapuro is shorthand for word processing; the lexicon cannot cover it.
    candidates = back_transliterate(list("ワープロ"), desk_models, DecodeOptions(k=3))
    assert candidates == []
    fallback = fallback_analysis(list("ワープロ"), desk_models)
    assert fallback.sounds == ("w", "a", "a", "p", "u", "r", "o")
    assert fallback.phonemes  # some phonetic reading exists


def test_dedupe_outputs_keeps_best_cost(desk_models):
    opts = DecodeOptions(k=10, dedupe_outputs=False)
    raw = back_transliterate(list("アースデー"), desk_models, opts)
    opts = DecodeOptions(k=10, dedupe_outputs=True)
    deduped = back_transliterate(list("アースデー"), desk_models, opts)
    raw_words = [c.words for c in raw]
    assert len(set(raw_words)) < len(raw_words)  # duplicates exist undeduped
    deduped_words = [c.words for c in deduped]
    assert len(set(deduped_words)) == len(deduped_words)
    best_by_words = {}
    for cand in raw:
        best_by_words.setdefault(cand.words, cand.cost)
    for cand in deduped:
        if cand.words in best_by_words:
            assert cand.cost == pytest.approx(best_by_words[cand.words], rel=1e-12)


# ---------------------------------------------------------------------------
# Separators, OCR, and name mode


def test_separator_stripping_preserves_top1(desk_models):
    for phrase in ("ロバート・ショーン・レナード", "ニューヨーク・タイムズ"):
        with_dots = top1(desk_models, phrase)
        without = top1(desk_models, phrase.replace("・", ""))
        assert with_dots == without


def test_identity_ocr_model_changes_nothing(desk_models, config):
    glyph_table = desk_models.glyph_table
    identity = ConfusionTable.identity(
        [g for g in glyph_table if g != "<eps>"])
    from kataback.decode import ModelSet

    models = ModelSet(
        word_model=desk_models.word_model,
        pronouncer=desk_models.pronouncer,
        sound_mapper=desk_models.sound_mapper,
        katakana_writer=desk_models.katakana_writer,
        ocr_model=build_ocr_model(identity, glyph_table),
        name_model=desk_models.name_model,
    )
    phrase = "アイスクリーム"
    plain = back_transliterate(list(phrase), models, DecodeOptions(k=3, use_ocr=False))
    with_ocr = back_transliterate(list(phrase), models, DecodeOptions(k=3, use_ocr=True))
    assert [(c.words, pytest.approx(c.cost, rel=1e-9)) for c in plain] == \
        [(c.words, c.cost) for c in with_ocr]


def test_ocr_model_recovers_confused_glyph(desk_models):
    # タクシー with シ misread as ツ.
    corrupted = "タクツー"
    assert back_transliterate(list(corrupted), desk_models, DecodeOptions(k=1)) == []
    recovered = top1(desk_models, corrupted, use_ocr=True)
    assert recovered == "taxi"


def test_name_mode_changes_only_rescoring(desk_models):
    phrase = "ロバート・ショーン・レナード"
    lattice_plain = phonetic_candidates(list(phrase), desk_models,
                                        DecodeOptions(name_mode=False))
    lattice_names = phonetic_candidates(list(phrase), desk_models,
                                        DecodeOptions(name_mode=True))
    assert lattice_plain == lattice_names
    assert top1(desk_models, phrase, name_mode=True) == "robert sean leonard"


def test_name_mode_prefers_names(desk_models):
    # john: in the name model "john" outranks mixes with common nouns.
    assert top1(desk_models, "ジョン・ブラウン", name_mode=True) == "john brown"


# ---------------------------------------------------------------------------
# Forward transliteration


def test_forward_golf_ball_canonical_spelling(desk_models):
    assert "".join(transliterate_forward(["golf", "ball"], desk_models)) == "ゴルフボル"


def test_forward_empty_input(desk_models):
    assert transliterate_forward([], desk_models) == ()


def test_forward_round_trip_top5(desk_models):
    words = ["hotel", "camera", "piano", "banana", "television",
             "computer", "hamburger", "necklace", "violin", "tennis",
             "guitar", "salad", "chocolate", "magazine", "elevator",
             "sandwich", "marathon", "battery", "taxi", "coffee"]
    for word in words:
        glyphs = transliterate_forward([word], desk_models)
        candidates = back_transliterate(list("".join(glyphs)), desk_models,
                                        DecodeOptions(k=5))
        answers = [" ".join(c.words) for c in candidates]
        assert word in answers, (word, glyphs, answers)


def test_forward_out_of_lexicon_word(desk_models):
    with pytest.raises(UnknownSymbolError, match="qqq"):
        transliterate_forward(["qqq"], desk_models)


def test_model_set_rejects_mismatched_alphabets(desk_models):
    from kataback.decode import ModelSet
    from kataback.models import ModelBuildError

    with pytest.raises(ModelBuildError, match="pronouncer output and sound mapper"):
        ModelSet(
            word_model=desk_models.word_model,
            pronouncer=desk_models.word_model,  # word alphabet, not phonemes
            sound_mapper=desk_models.sound_mapper,
            katakana_writer=desk_models.katakana_writer,
        )
