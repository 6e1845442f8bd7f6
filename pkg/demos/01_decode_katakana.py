"""Decode katakana phrases back to English, step by step.

Run from the repository root after `pip install -e .`:

    python demos/01_decode_katakana.py
"""

from kataback.cli import PipelineConfig
from kataback.decode import DecodeOptions, back_transliterate, phonetic_candidates
from kataback.fsm import best_path

# Build the full cascade from the bundled desk resources: a unigram word
# model, a pronouncer, the published phoneme-to-sound table, a katakana
# writer, and an OCR confusion model.
config = PipelineConfig.bundled()
models = config.load_model_set(with_ocr=True)
print("word model:", models.word_model)
print("pronouncer:", models.pronouncer)
print("sound mapper:", models.sound_mapper)
print("katakana writer:", models.katakana_writer)
print()

# Three phrases lifted from real newspaper text.  None of them is a
# dictionary entry; each must be sounded out.
phrases = ["アースデー", "ロバート・ショーン・レナード", "マスターズトーナメント"]
for phrase in phrases:
    candidates = back_transliterate(list(phrase), models, DecodeOptions(k=5))
    print(phrase)
    for rank, cand in enumerate(candidates, 1):
        print(f"  {rank}. {' '.join(cand.words)}   p={cand.probability:.3e}")
    print()

# Why two stages?  The phonetic lattice alone prefers whatever English best
# matches the sounds; the unigram rescoring prefers English that looks like
# real text.  Compare the winners:
phrase = "マスターズトーナメント"
lattice = phonetic_candidates(list(phrase), models)
print("before rescoring:", " ".join(best_path(lattice).output_labels))
best = back_transliterate(list(phrase), models, DecodeOptions(k=1))[0]
print("after rescoring: ", " ".join(best.words))
print()

# Transliteration is lossy: the same katakana covers 'ice cream' and
# 'I scream'.  The ranked list keeps both readings.
for cand in back_transliterate(list("アイスクリーム"), models, DecodeOptions(k=3)):
    print(f"アイスクリーム -> {' '.join(cand.words)}   p={cand.probability:.3e}")
print()

# A personal-name rescoring model helps when context says the phrase is a
# name.
named = back_transliterate(list("ジョン・ブラウン"), models,
                           DecodeOptions(k=1, name_mode=True))[0]
print("ジョン・ブラウン (name mode) ->", " ".join(named.words))
print()

# The OCR channel explains corrupted glyphs: シ misread as ツ still decodes.
corrupted = "タクツー"
plain = back_transliterate(list(corrupted), models, DecodeOptions(k=1))
noisy = back_transliterate(list(corrupted), models, DecodeOptions(k=1, use_ocr=True))
print(f"{corrupted} without OCR model -> {plain or 'no analysis'}")
print(f"{corrupted} with OCR model    -> {' '.join(noisy[0].words)}")
