"""Learn the English-sound to Japanese-sound table from a glossary.

Run from the repository root after `pip install -e .`:

    python demos/02_train_sound_mapper.py
"""

import logging

from kataback.cli import PipelineConfig
from kataback.models import (
    build_katakana_writer,
    build_pronouncer,
    load_pronunciations,
    load_spelling,
    save_sound_mapping,
)
from kataback.training import bootstrap_corpus, katakana_reader, load_glossary, run_em

logging.basicConfig(level=logging.WARNING, format="%(message)s")

config = PipelineConfig.bundled()

# Step 1: turn the glossary into sound-sequence pairs.  English words go
# through the pronouncer; katakana goes through the writer run backwards.
plex = load_pronunciations(config.pronunciations)
pronouncer = build_pronouncer(plex)
reader = katakana_reader(build_katakana_writer(load_spelling(config.spelling)))
glossary = load_glossary(config.glossary)
report = bootstrap_corpus(glossary, pronouncer, reader)
print(f"{len(glossary)} glossary entries -> {len(report.corpus)} sound pairs "
      f"({len(report.dropped)} dropped)")
for e, j in report.corpus.pairs[:5]:
    print(f"  ({' '.join(e)})  <->  ({' '.join(j)})")
print()

# Step 2: EM.  Every monotone alignment of each pair contributes fractional
# counts; normalizing and re-weighting until the table stops moving.  Pairs
# with no alignment at all (English side longer) are skipped.
table, stats = run_em(report.corpus, max_span=config.max_span,
                      max_iters=config.em_max_iters, tol=config.em_tol)
print(f"EM ran {stats.iterations} iterations, "
      f"final log-likelihood {stats.log_likelihood:.3f}, "
      f"{len(stats.skipped)} pair(s) skipped")
print()

# The learned rows line up with the bundled table: K maps to k/k u/kk,
# L collapses onto r, ER onto a long a.
for phoneme in ("K", "L", "S", "ER", "PAUSE"):
    row = table.rows.get(phoneme, [])
    entries = ", ".join(f"{' '.join(seq)}:{prob:.3f}" for seq, prob in row[:4])
    print(f"  {phoneme:<6} -> {entries}")

out = "/tmp/kataback_trained_table.tsv"
save_sound_mapping(table, out)
print(f"\nwrote {out}")
