"""Builders for the five distributions of the transliteration cascade.

The cascade relates five alphabets: English words, English phonemes, Japanese
sounds, katakana glyphs, and observed (possibly OCR-corrupted) glyphs.  Each
builder turns a plain-text resource table into a weighted acceptor or
transducer over shared symbol tables.

Resource files are UTF-8 TSV; lines starting with ``#`` are comments.
"""

from __future__ import annotations

from dataclasses import dataclass

from .fsm import (
    EPSILON,
    EPSILON_ID,
    KatabackError,
    SymbolTable,
    Wfst,
    cost_of,
)


class ResourceError(KatabackError):
    """A resource file is missing, unreadable, or malformed."""


class ModelBuildError(KatabackError):
    """A model could not be constructed from its resources."""


# English phoneme inventory: 14 vowels, 25 consonants, plus PAUSE (40 total).
ENGLISH_VOWELS = (
    "AA", "AE", "AH", "AO", "AW", "AY", "EH", "EY",
    "IH", "IY", "OW", "OY", "UH", "UW",
)
ENGLISH_CONSONANTS = (
    "B", "CH", "D", "DH", "ER", "F", "G", "HH", "JH", "K", "L", "M", "N",
    "NG", "P", "R", "S", "SH", "T", "TH", "V", "W", "Y", "Z", "ZH",
)
PAUSE = "PAUSE"
ENGLISH_PHONEMES = tuple(sorted(ENGLISH_VOWELS + ENGLISH_CONSONANTS)) + (PAUSE,)

# Japanese sound inventory: 5 vowels, 33 consonants (19 plain + 14 geminate),
# plus pause (39 total).  Long vowels are two-symbol sequences (a a), not
# separate inventory members.
JAPANESE_VOWELS = ("a", "i", "u", "e", "o")
JAPANESE_PAUSE = "pause"
GEMINATES = {
    "b": "bb", "ch": "tch", "d": "dd", "f": "ff", "g": "gg", "h": "hh",
    "j": "jj", "k": "kk", "p": "pp", "s": "ss", "sh": "ssh", "t": "tt",
    "ts": "tts", "z": "zz",
}
JAPANESE_PLAIN_CONSONANTS = (
    "b", "ch", "d", "f", "g", "h", "j", "k", "m", "n", "p", "r",
    "s", "sh", "t", "ts", "w", "y", "z",
)
JAPANESE_CONSONANTS = JAPANESE_PLAIN_CONSONANTS + tuple(sorted(GEMINATES.values()))
JAPANESE_SOUNDS = JAPANESE_VOWELS + JAPANESE_CONSONANTS + (JAPANESE_PAUSE,)

WORD_SEPARATOR = "・"


def read_tsv(path, n_fields: int):
    """Yield (line number, fields) for each data line; '#' lines are comments."""
    try:
        handle = open(path, encoding="utf-8")
    except OSError as exc:
        raise ResourceError(f"{path}: {exc}") from exc
    with handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != n_fields:
                raise ResourceError(
                    f"{path}:{lineno}: expected {n_fields} tab-separated fields, "
                    f"got {len(fields)}"
                )
            yield lineno, fields


def _parse_prob(path, lineno: int, text: str) -> float:
    try:
        prob = float(text)
    except ValueError:
        raise ResourceError(f"{path}:{lineno}: bad probability {text!r}") from None
    if not 0.0 < prob <= 1.0:
        raise ResourceError(f"{path}:{lineno}: probability {prob} outside (0, 1]")
    return prob


@dataclass
class UnigramLexicon:
    """Word unigram probabilities, normalized after stoplist removal."""

    probs: dict[str, float]

    @classmethod
    def from_counts(cls, counts: dict[str, int], stoplist: set[str] | None = None,
                    limit: int | None = None) -> "UnigramLexicon":
        stoplist = stoplist or set()
        kept = [(w, c) for w, c in counts.items() if w not in stoplist and c > 0]
        if limit is not None:
            kept.sort(key=lambda item: (-item[1], item[0]))
            kept = kept[:limit]
        total = sum(c for _, c in kept)
        if total == 0:
            raise ModelBuildError("unigram lexicon is empty after stoplist removal")
        return cls(probs={w: c / total for w, c in sorted(kept)})

    def __len__(self) -> int:
        return len(self.probs)


@dataclass
class PronunciationLexicon:
    """Word to stress-free phoneme sequences over the English inventory."""

    prons: dict[str, list[tuple[str, ...]]]

    def __post_init__(self):
        inventory = set(ENGLISH_PHONEMES)
        for word, prons in self.prons.items():
            if not prons:
                raise ModelBuildError(f"word {word!r} has no pronunciation")
            for pron in prons:
                for phoneme in pron:
                    if phoneme not in inventory:
                        raise ModelBuildError(
                            f"word {word!r} uses phoneme {phoneme!r} outside the inventory"
                        )

    def words(self) -> list[str]:
        return sorted(self.prons)


@dataclass
class SoundMappingTable:
    """P(Japanese sound sequence | English phoneme), the channel's core table."""

    rows: dict[str, list[tuple[tuple[str, ...], float]]]

    def validate(self, trained: bool = False, tol: float = 1e-9) -> None:
        e_inventory = set(ENGLISH_PHONEMES)
        j_inventory = set(JAPANESE_SOUNDS)
        for phoneme, entries in self.rows.items():
            if phoneme not in e_inventory:
                raise ModelBuildError(f"unknown English phoneme {phoneme!r} in mapping table")
            total = 0.0
            for seq, prob in entries:
                if not seq:
                    raise ModelBuildError(f"empty target sequence for {phoneme!r}")
                for sound in seq:
                    if sound not in j_inventory:
                        raise ModelBuildError(
                            f"unknown Japanese sound {sound!r} in row {phoneme!r}"
                        )
                if not 0.0 < prob <= 1.0:
                    raise ModelBuildError(f"bad probability {prob} in row {phoneme!r}")
                total += prob
            if total > 1.0 + tol:
                raise ModelBuildError(f"row {phoneme!r} sums to {total} > 1")
            if trained and abs(total - 1.0) > tol:
                raise ModelBuildError(f"trained row {phoneme!r} sums to {total} != 1")


@dataclass
class KatakanaSpellingTable:
    """Weighted spellings for Japanese sound units.

    Keys are space-separated sound units: a mora like ``g a`` or ``sh y a``,
    a lone vowel ``a``, the bare nasal ``n``, ``pause``, or a long-vowel
    continuation written ``+a`` (a vowel repeating the one just written).
    Geminate spellings are derived, not listed: ``kk a`` is the small-tsu
    glyph followed by the spelling of ``k a``.
    """

    rows: dict[str, list[tuple[str, float]]]

    def __post_init__(self):
        inventory = set(JAPANESE_SOUNDS)
        for unit, alternatives in self.rows.items():
            sounds = self._unit_sounds(unit)
            for sound in sounds:
                if sound not in inventory:
                    raise ModelBuildError(f"unit {unit!r} uses unknown sound {sound!r}")
            total = sum(prob for _, prob in alternatives)
            if abs(total - 1.0) > 1e-9:
                raise ModelBuildError(f"unit {unit!r} alternatives sum to {total} != 1")

    @staticmethod
    def _unit_sounds(unit: str) -> tuple[str, ...]:
        if unit.startswith("+"):
            return (unit[1:],)
        return tuple(unit.split(" "))

    def glyphs(self) -> list[str]:
        """All glyphs used by any spelling, in table order, small-tsu included."""
        seen: dict[str, None] = {}
        if any(GEMINATES.get(unit.split(" ")[0]) for unit in self.rows):
            seen["ッ"] = None
        for alternatives in self.rows.values():
            for glyph_str, _ in alternatives:
                if glyph_str == EPSILON:
                    continue
                for glyph in glyph_str:
                    seen[glyph] = None
        return list(seen)


@dataclass
class ConfusionTable:
    """Per-glyph OCR confusion distributions, identity entries included."""

    rows: dict[str, list[tuple[str, float]]]

    def __post_init__(self):
        for glyph, entries in self.rows.items():
            total = sum(prob for _, prob in entries)
            if abs(total - 1.0) > 1e-9:
                raise ModelBuildError(f"confusion row {glyph!r} sums to {total} != 1")
            if all(observed != glyph for observed, _ in entries):
                raise ModelBuildError(f"confusion row {glyph!r} lacks an identity entry")

    @classmethod
    def identity(cls, glyphs: list[str]) -> "ConfusionTable":
        return cls(rows={g: [(g, 1.0)] for g in glyphs})

    @classmethod
    def with_noise(cls, glyphs: list[str], rate: float,
                   confusable: list[tuple[str, str]]) -> "ConfusionTable":
        """Identity table spiked with ``rate`` mass spread over confusable pairs."""
        neighbors: dict[str, list[str]] = {}
        for a, b in confusable:
            neighbors.setdefault(a, []).append(b)
            neighbors.setdefault(b, []).append(a)
        rows = {}
        for glyph in glyphs:
            others = [g for g in neighbors.get(glyph, []) if g in glyphs]
            if others and rate > 0.0:
                share = rate / len(others)
                rows[glyph] = [(glyph, 1.0 - rate)] + [(g, share) for g in others]
            else:
                rows[glyph] = [(glyph, 1.0)]
        return cls(rows=rows)


def load_frequencies(path) -> dict[str, int]:
    counts: dict[str, int] = {}
    for lineno, (word, count_str) in read_tsv(path, 2):
        try:
            count = int(count_str)
        except ValueError:
            raise ResourceError(f"{path}:{lineno}: bad count {count_str!r}") from None
        if count < 0:
            raise ResourceError(f"{path}:{lineno}: negative count")
        counts[word] = counts.get(word, 0) + count
    return counts


def load_stoplist(path) -> set[str]:
    words = set()
    for _, (word,) in read_tsv(path, 1):
        words.add(word)
    return words


def load_pronunciations(path) -> PronunciationLexicon:
    prons: dict[str, list[tuple[str, ...]]] = {}
    for lineno, (word, phones_str) in read_tsv(path, 2):
        phones = tuple(phones_str.split())
        if not phones:
            raise ResourceError(f"{path}:{lineno}: empty pronunciation")
        prons.setdefault(word, []).append(phones)
    try:
        return PronunciationLexicon(prons=prons)
    except ModelBuildError as exc:
        raise ResourceError(f"{path}: {exc}") from exc


def load_sound_mapping(path) -> SoundMappingTable:
    rows: dict[str, list[tuple[tuple[str, ...], float]]] = {}
    for lineno, (phoneme, seq_str, prob_str) in read_tsv(path, 3):
        prob = _parse_prob(path, lineno, prob_str)
        seq = tuple(seq_str.split())
        rows.setdefault(phoneme, []).append((seq, prob))
    table = SoundMappingTable(rows=rows)
    try:
        table.validate()
    except ModelBuildError as exc:
        raise ResourceError(f"{path}: {exc}") from exc
    return table


def save_sound_mapping(table: SoundMappingTable, path) -> None:
    """Deterministic export: rows sorted by phoneme, entries by falling probability."""
    with open(path, "w", encoding="utf-8") as handle:
        for phoneme in sorted(table.rows):
            entries = sorted(table.rows[phoneme], key=lambda e: (-e[1], e[0]))
            for seq, prob in entries:
                handle.write(f"{phoneme}\t{' '.join(seq)}\t{prob!r}\n")


def load_spelling(path) -> KatakanaSpellingTable:
    rows: dict[str, list[tuple[str, float]]] = {}
    for lineno, (unit, glyphs, prob_str) in read_tsv(path, 3):
        prob = _parse_prob(path, lineno, prob_str)
        rows.setdefault(unit, []).append((glyphs, prob))
    try:
        return KatakanaSpellingTable(rows=rows)
    except ModelBuildError as exc:
        raise ResourceError(f"{path}: {exc}") from exc


def load_confusion(path) -> ConfusionTable:
    rows: dict[str, list[tuple[str, float]]] = {}
    for lineno, (glyph, observed, prob_str) in read_tsv(path, 3):
        prob = _parse_prob(path, lineno, prob_str)
        rows.setdefault(glyph, []).append((observed, prob))
    try:
        return ConfusionTable(rows=rows)
    except ModelBuildError as exc:
        raise ResourceError(f"{path}: {exc}") from exc


def english_phoneme_table() -> SymbolTable:
    return SymbolTable.from_labels(ENGLISH_PHONEMES, name="english phonemes")


def japanese_sound_table() -> SymbolTable:
    return SymbolTable.from_labels(JAPANESE_SOUNDS, name="japanese sounds")


def build_word_model(lexicon: UnigramLexicon, table: SymbolTable | None = None) -> Wfst:
    """Single-hub unigram acceptor: one self-loop per word at cost -ln P(word)."""
    if not lexicon.probs:
        raise ModelBuildError("cannot build a word model from an empty lexicon")
    if table is None:
        table = SymbolTable.from_labels(sorted(lexicon.probs), name="words")
    model = Wfst(isyms=table, osyms=table)
    model.set_final(model.start, 0.0)
    for word in sorted(lexicon.probs):
        sym = table.id(word)
        model.add_arc(model.start, sym, sym, cost_of(lexicon.probs[word]), model.start)
    return model


def build_pronouncer(plex: PronunciationLexicon,
                     word_table: SymbolTable | None = None,
                     phoneme_table: SymbolTable | None = None,
                     pause_prob: float = 0.5) -> Wfst:
    """Word-sequence to phoneme-sequence transducer.

    Pronunciations are arranged as a phoneme-prefix tree; a word's
    alternatives split its mass uniformly.  Between consecutive words the
    PAUSE phoneme is optional: each boundary takes PAUSE with ``pause_prob``
    or nothing with the complement.  Finishing after the last word is free,
    so the output distribution for a fixed word sequence sums to 1.
    """
    if not plex.prons:
        raise ModelBuildError("cannot build a pronouncer from an empty lexicon")
    if word_table is None:
        word_table = SymbolTable.from_labels(plex.words(), name="words")
    if phoneme_table is None:
        phoneme_table = english_phoneme_table()

    model = Wfst(isyms=word_table, osyms=phoneme_table)
    start = model.start
    model.set_final(start, 0.0)
    entry = model.add_state()   # a word must follow
    done = model.add_state()    # sink for finished sequences
    model.set_final(done, 0.0)
    model.add_arc(start, EPSILON_ID, EPSILON_ID, 0.0, entry)
    trie: dict[tuple[str, ...], int] = {(): entry}

    for word in plex.words():
        word_sym = word_table.id(word)
        alternatives = plex.prons[word]
        alt_cost = cost_of(1.0 / len(alternatives))
        for pron in alternatives:
            node = ()
            for phoneme in pron:
                nxt = node + (phoneme,)
                if nxt not in trie:
                    state = model.add_state()
                    model.add_arc(trie[node], EPSILON_ID, phoneme_table.id(phoneme),
                                  0.0, state)
                    trie[nxt] = state
                node = nxt
            end = model.add_state()
            model.add_arc(trie[node], word_sym, EPSILON_ID, alt_cost, end)
            model.add_arc(end, EPSILON_ID, EPSILON_ID, 0.0, done)
            # Word boundary: continue without a pause, or emit PAUSE first.
            model.add_arc(end, EPSILON_ID, EPSILON_ID, cost_of(1.0 - pause_prob), entry)
            model.add_arc(end, EPSILON_ID, phoneme_table.id(PAUSE),
                          cost_of(pause_prob), entry)
    return model


def build_sound_mapper(table: SoundMappingTable,
                       phoneme_table: SymbolTable | None = None,
                       sound_table: SymbolTable | None = None) -> Wfst:
    """English-phoneme to Japanese-sound transducer, one phoneme at a time.

    Each table entry (phoneme, sequence, p) becomes a hub loop consuming the
    phoneme and emitting the whole sequence at cost -ln p; no context is
    consulted and nothing is swallowed.
    """
    table.validate()
    if phoneme_table is None:
        phoneme_table = english_phoneme_table()
    if sound_table is None:
        sound_table = japanese_sound_table()
    model = Wfst(isyms=phoneme_table, osyms=sound_table)
    hub = model.start
    model.set_final(hub, 0.0)
    for phoneme in sorted(table.rows):
        in_sym = phoneme_table.id(phoneme)
        for seq, prob in table.rows[phoneme]:
            src = hub
            for i, sound in enumerate(seq):
                last = i == len(seq) - 1
                dst = hub if last else model.add_state()
                model.add_arc(
                    src,
                    in_sym if i == 0 else EPSILON_ID,
                    sound_table.id(sound),
                    cost_of(prob) if i == 0 else 0.0,
                    dst,
                )
                src = dst
    return model


# Writer states: neutral, then one per vowel so that a repeated vowel can be
# spelled as the long-vowel mark.
_NEUTRAL = 0


def build_katakana_writer(spell: KatakanaSpellingTable,
                          sound_table: SymbolTable | None = None,
                          glyph_table: SymbolTable | None = None) -> Wfst:
    """Japanese-sound to katakana transducer.

    Sound units are spelled per the table; a geminate consonant is spelled as
    small-tsu plus the plain consonant's spelling; a vowel repeating the one
    just written uses the ``+v`` continuation row (long-vowel mark preferred).
    """
    if sound_table is None:
        sound_table = japanese_sound_table()
    if glyph_table is None:
        glyph_table = SymbolTable.from_labels(spell.glyphs(), name="katakana")

    model = Wfst(isyms=sound_table, osyms=glyph_table)
    vowel_state = {}
    for vowel in JAPANESE_VOWELS:
        vowel_state[vowel] = model.add_state()
    model.set_final(_NEUTRAL, 0.0)
    for state in vowel_state.values():
        model.set_final(state, 0.0)
    sources = [_NEUTRAL] + [vowel_state[v] for v in JAPANESE_VOWELS]

    def glyph_ids(glyph_str: str) -> list[int]:
        if glyph_str == EPSILON:
            return []
        return [glyph_table.id(g) for g in glyph_str]

    def add_unit(sounds: tuple[str, ...], glyphs: list[int], prob: float,
                 from_states: list[int], to_state: int) -> None:
        """One arc chain per source state; shared tail once the unit is entered."""
        in_syms = [sound_table.id(s) for s in sounds]
        length = max(len(in_syms), len(glyphs), 1)
        ins = in_syms + [EPSILON_ID] * (length - len(in_syms))
        outs = glyphs + [EPSILON_ID] * (length - len(glyphs))
        # Build the shared tail (everything after the first arc) right to left.
        tail = to_state
        for i in range(length - 1, 0, -1):
            state = model.add_state()
            model.add_arc(state, ins[i], outs[i], 0.0, tail)
            tail = state
        for src in from_states:
            model.add_arc(src, ins[0], outs[0], cost_of(prob), tail)

    covered = {JAPANESE_PAUSE}
    for unit, alternatives in spell.rows.items():
        if unit.startswith("+"):
            vowel = unit[1:]
            if vowel not in vowel_state:
                raise ModelBuildError(f"continuation unit {unit!r} is not a vowel")
            covered.add(vowel)
            state = vowel_state[vowel]
            for glyph_str, prob in alternatives:
                add_unit((vowel,), glyph_ids(glyph_str), prob, [state], state)
            continue

        sounds = tuple(unit.split(" "))
        covered.update(sounds)
        last = sounds[-1]
        target = vowel_state.get(last, _NEUTRAL)
        if len(sounds) == 1 and sounds[0] in vowel_state:
            # A lone vowel from its own vowel state is the continuation case.
            from_states = [s for s in sources if s != vowel_state[sounds[0]]]
        else:
            from_states = sources
        for glyph_str, prob in alternatives:
            add_unit(sounds, glyph_ids(glyph_str), prob, from_states, target)
        geminate = GEMINATES.get(sounds[0])
        if geminate is not None:
            covered.add(geminate)
            small_tsu = glyph_table.id("ッ")
            for glyph_str, prob in alternatives:
                add_unit((geminate,) + sounds[1:], [small_tsu] + glyph_ids(glyph_str),
                         prob, sources, target)

    if JAPANESE_PAUSE not in spell.rows:
        raise ModelBuildError("spelling table has no pause row")
    missing = [s for s in JAPANESE_SOUNDS if s not in covered]
    if missing:
        raise ModelBuildError(f"spelling table leaves sounds unreachable: {missing}")
    return model


def build_ocr_model(conf: ConfusionTable, glyph_table: SymbolTable) -> Wfst:
    """Glyph-to-glyph noise channel; the identity table gives the identity machine."""
    model = Wfst(isyms=glyph_table, osyms=glyph_table)
    model.set_final(model.start, 0.0)
    for glyph in list(glyph_table):
        if glyph == EPSILON:
            continue
        entries = conf.rows.get(glyph, [(glyph, 1.0)])
        in_sym = glyph_table.id(glyph)
        for observed, prob in entries:
            model.add_arc(model.start, in_sym, glyph_table.add(observed),
                          cost_of(prob), model.start)
    return model
